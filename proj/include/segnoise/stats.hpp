#pragma once

#include <cmath>
#include <cstdint>

#include <boost/math/distributions/beta.hpp>

namespace segnoise::stats {

struct Interval {
  double lower = 0.0;
  double upper = 1.0;
};

/// Exact (Clopper-Pearson) two-sided interval for k successes in n trials.
inline Interval clopper_pearson(std::uint64_t k, std::uint64_t n, double confidence = 0.95) {
  const double tail = (1.0 - confidence) / 2.0;
  Interval out;
  if (k > 0) {
    boost::math::beta_distribution<double> lo(static_cast<double>(k), static_cast<double>(n - k + 1));
    out.lower = boost::math::quantile(lo, tail);
  }
  if (k < n) {
    boost::math::beta_distribution<double> hi(static_cast<double>(k + 1), static_cast<double>(n - k));
    out.upper = boost::math::quantile(hi, 1.0 - tail);
  }
  return out;
}

/// Exact one-sided lower confidence bound for a binomial proportion.
inline double clopper_pearson_lower(std::uint64_t k, std::uint64_t n, double confidence = 0.95) {
  if (k == 0) return 0.0;
  boost::math::beta_distribution<double> lo(static_cast<double>(k), static_cast<double>(n - k + 1));
  return boost::math::quantile(lo, 1.0 - confidence);
}

/// Standard error of a Bernoulli mean estimated from n draws.
inline double binomial_sigma(double p, std::uint64_t n) {
  return std::sqrt(p * (1.0 - p) / static_cast<double>(n));
}

}  // namespace segnoise::stats
