#pragma once

// Reference segmenter (per-pixel logistic regression on box-mean features)
// and the controlled-error oracle predictor.

#include <array>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <span>
#include <string>
#include <vector>

#include "segnoise/grid.hpp"
#include "segnoise/noise.hpp"
#include "segnoise/rng.hpp"
#include "segnoise/sdf.hpp"
#include "segnoise/segmenter.hpp"

namespace segnoise {

struct TrainConfig {
  double learning_rate = 1.0;
  std::uint32_t epochs = 200;
  double l2 = 1e-4;
  std::array<std::uint32_t, 2> radii{1, 3};
  std::uint64_t seed = 0;

  void validate() const {
    if (!(learning_rate > 0.0)) throw InvalidArgument("learning rate must be > 0");
    if (epochs == 0) throw InvalidArgument("epochs must be > 0");
    if (!(l2 >= 0.0)) throw InvalidArgument("l2 weight must be >= 0");
  }

  std::string describe() const {
    std::ostringstream os;
    os << "lr=" << learning_rate << " epochs=" << epochs << " l2=" << l2 << " radii=" << radii[0] << ","
       << radii[1] << " seed=" << seed;
    return os.str();
  }
};

/// Mean over a (2r+1)^d box, truncated at the grid edge.
inline std::vector<double> box_mean(const ScalarField& image, std::uint32_t radius) {
  const auto& shape = image.shape();
  std::vector<double> sums(image.values().begin(), image.values().end());
  std::vector<double> counts(sums.size(), 1.0);
  const std::array<std::size_t, 3> ext{shape.depth(), shape.height(), shape.width()};
  const std::array<std::size_t, 3> stride{shape.height() * shape.width(), shape.width(), 1};
  const long r = radius;
  std::vector<double> ts(sums.size()), tc(sums.size());
  for (int axis = 3 - shape.ndim(); axis < 3; ++axis) {
    const long n = static_cast<long>(ext[axis]);
    const auto st = static_cast<std::ptrdiff_t>(stride[axis]);
    for (std::size_t i = 0; i < sums.size(); ++i) {
      const long pos = static_cast<long>((i / stride[axis]) % ext[axis]);
      double s = 0.0, c = 0.0;
      for (long d = std::max(-r, -pos); d <= std::min(r, n - 1 - pos); ++d) {
        s += sums[i + d * st];
        c += counts[i + d * st];
      }
      ts[i] = s;
      tc[i] = c;
    }
    sums.swap(ts);
    counts.swap(tc);
  }
  for (std::size_t i = 0; i < sums.size(); ++i) sums[i] /= counts[i];
  return sums;
}

inline constexpr std::size_t kLogisticFeatures = 4;

/// Per-site raw features [1, intensity, box mean r0, box mean r1], site-major.
inline std::vector<double> raw_features(const ScalarField& image, const std::array<std::uint32_t, 2>& radii) {
  const auto b0 = box_mean(image, radii[0]);
  const auto b1 = box_mean(image, radii[1]);
  std::vector<double> out(image.size() * kLogisticFeatures);
  for (std::size_t i = 0; i < image.size(); ++i) {
    out[i * 4 + 0] = 1.0;
    out[i * 4 + 1] = image[i];
    out[i * 4 + 2] = b0[i];
    out[i * 4 + 3] = b1[i];
  }
  return out;
}

using Weights = std::array<double, kLogisticFeatures>;

/// Mean binary cross-entropy with an L2 penalty on the non-bias weights over
/// a fixed design matrix.
class LogisticProblem {
 public:
  LogisticProblem(std::vector<double> features, std::vector<std::uint8_t> labels, double l2)
      : x_(std::move(features)), y_(std::move(labels)), l2_(l2) {
    if (x_.size() != y_.size() * kLogisticFeatures) throw InvalidArgument("feature/label size mismatch");
    if (y_.empty()) throw InvalidArgument("logistic problem needs at least one sample");
  }

  std::size_t samples() const noexcept { return y_.size(); }

  double loss(const Weights& w) const {
    double total = 0.0;
    for (std::size_t i = 0; i < y_.size(); ++i) {
      const double z = dot(w, i);
      // log(1 + e^z) - y z, evaluated stably
      const double softplus = z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
      total += softplus - (y_[i] ? z : 0.0);
    }
    return total / static_cast<double>(y_.size()) + penalty(w);
  }

  Weights gradient(const Weights& w) const {
    Weights g{};
    for (std::size_t i = 0; i < y_.size(); ++i) {
      const double r = sigmoid(dot(w, i)) - (y_[i] ? 1.0 : 0.0);
      for (std::size_t k = 0; k < kLogisticFeatures; ++k) g[k] += r * x_[i * kLogisticFeatures + k];
    }
    const double n = static_cast<double>(y_.size());
    for (std::size_t k = 0; k < kLogisticFeatures; ++k) g[k] /= n;
    for (std::size_t k = 1; k < kLogisticFeatures; ++k) g[k] += l2_ * w[k];
    return g;
  }

  static double sigmoid(double z) {
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
  }

 private:
  double dot(const Weights& w, std::size_t i) const {
    const double* row = &x_[i * kLogisticFeatures];
    return w[0] * row[0] + w[1] * row[1] + w[2] * row[2] + w[3] * row[3];
  }
  double penalty(const Weights& w) const {
    double s = 0.0;
    for (std::size_t k = 1; k < kLogisticFeatures; ++k) s += w[k] * w[k];
    return 0.5 * l2_ * s;
  }

  std::vector<double> x_;
  std::vector<std::uint8_t> y_;
  double l2_;
};

/// Per-pixel logistic segmenter. Features are standardized with training
/// statistics; weights start at zero and follow full-batch gradient descent.
class LogisticSegmenter final : public Segmenter {
 public:
  explicit LogisticSegmenter(TrainConfig cfg = {}) : cfg_(cfg) { cfg_.validate(); }

  void fit(std::span<const ScalarField> images, std::span<const BinaryMask> labels,
           std::uint64_t seed) override {
    if (images.empty() || images.size() != labels.size())
      throw InvalidArgument("fit_logistic: need a nonempty, paired image/label set");
    cfg_.seed = seed;
    std::vector<double> x;
    std::vector<std::uint8_t> y;
    for (std::size_t n = 0; n < images.size(); ++n) {
      require_same_shape(images[n].shape(), labels[n].shape(), "fit_logistic");
      auto f = raw_features(images[n], cfg_.radii);
      x.insert(x.end(), f.begin(), f.end());
      y.insert(y.end(), labels[n].bits().begin(), labels[n].bits().end());
    }
    const std::size_t m = y.size();
    mean_ = {0, 0, 0, 0};
    scale_ = {1, 1, 1, 1};
    for (std::size_t k = 1; k < kLogisticFeatures; ++k) {
      double s = 0.0, s2 = 0.0;
      for (std::size_t i = 0; i < m; ++i) s += x[i * 4 + k];
      const double mu = s / static_cast<double>(m);
      for (std::size_t i = 0; i < m; ++i) s2 += (x[i * 4 + k] - mu) * (x[i * 4 + k] - mu);
      const double sd = std::sqrt(s2 / static_cast<double>(m));
      mean_[k] = mu;
      scale_[k] = sd > 1e-12 ? 1.0 / sd : 1.0;
      for (std::size_t i = 0; i < m; ++i) x[i * 4 + k] = (x[i * 4 + k] - mu) * scale_[k];
    }
    LogisticProblem problem(std::move(x), std::move(y), cfg_.l2);
    weights_ = {0, 0, 0, 0};
    losses_.clear();
    losses_.push_back(problem.loss(weights_));
    for (std::uint32_t e = 0; e < cfg_.epochs; ++e) {
      const auto g = problem.gradient(weights_);
      for (std::size_t k = 0; k < kLogisticFeatures; ++k) weights_[k] -= cfg_.learning_rate * g[k];
      const double l = problem.loss(weights_);
      if (!std::isfinite(l))
        throw Error("fit_logistic diverged at epoch " + std::to_string(e + 1) + " (" + cfg_.describe() + ")");
      losses_.push_back(l);
    }
    fitted_ = true;
  }

  ScalarField predict_logits(const ScalarField& image) const override {
    if (!fitted_) throw Error("predict_logits called before fit");
    const auto f = raw_features(image, cfg_.radii);
    ScalarField out(image.shape());
    for (std::size_t i = 0; i < image.size(); ++i) {
      double z = weights_[0];
      for (std::size_t k = 1; k < kLogisticFeatures; ++k) z += weights_[k] * (f[i * 4 + k] - mean_[k]) * scale_[k];
      out[i] = z;
    }
    return out;
  }

  const Weights& weights() const noexcept { return weights_; }

  /// Fitted parameters: weights plus the feature standardization.
  struct State {
    Weights weights{};
    Weights mean{};
    Weights scale{1, 1, 1, 1};
  };
  State state() const { return {weights_, mean_, scale_}; }
  static LogisticSegmenter restore(const TrainConfig& cfg, const State& st) {
    LogisticSegmenter m(cfg);
    m.weights_ = st.weights;
    m.mean_ = st.mean;
    m.scale_ = st.scale;
    m.fitted_ = true;
    return m;
  }

  /// Loss before training followed by the loss after each epoch.
  const std::vector<double>& loss_history() const noexcept { return losses_; }
  const TrainConfig& config() const noexcept { return cfg_; }

 private:
  TrainConfig cfg_;
  Weights weights_{};
  Weights mean_{};
  Weights scale_{1, 1, 1, 1};
  std::vector<double> losses_;
  bool fitted_ = false;
};

inline LogisticSegmenter fit_logistic(std::span<const ScalarField> images, std::span<const BinaryMask> labels,
                                      const TrainConfig& cfg) {
  LogisticSegmenter model(cfg);
  model.fit(images, labels, cfg.seed);
  return model;
}

struct OracleErrorSpec {
  double eps0 = 0.0;
  double eps1 = 0.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(eps0 >= 0.0 && eps0 <= eps1)) throw InvalidArgument("oracle error spec needs 0 <= eps0 <= eps1");
  }
};

/// Per-image constant offsets a = +/- eps1 * b, b ~ Bernoulli(eps0 / eps1),
/// sign uniform. Image i draws from derive_seed(seed, i): b first, then sign.
inline double oracle_offset(const OracleErrorSpec& err, std::size_t image) {
  if (err.eps1 == 0.0) return 0.0;
  Pcg32 rng(derive_seed(err.seed, image));
  const bool hit = rng.bernoulli(err.eps0 / err.eps1);
  const bool negative = rng.bernoulli(0.5);
  return hit ? (negative ? -err.eps1 : err.eps1) : 0.0;
}

/// Predictor whose SDF is the one-step Bayes mask SDF plus a per-image
/// constant offset, so sup_s |phi_hat - phi_bayes| <= eps1 and its mean over
/// images is eps0.
class PerturbedOracle {
 public:
  PerturbedOracle(std::span<const BinaryMask> clean_masks, const MarkovNoiseParams& noise, OracleErrorSpec err)
      : err_(err) {
    err_.validate();
    bayes_.reserve(clean_masks.size());
    for (const auto& m : clean_masks) bayes_.push_back(signed_distance(bayes_mask_t1(m, noise.expansion, noise.marching)));
  }

  std::size_t size() const noexcept { return bayes_.size(); }
  double offset(std::size_t i) const { return oracle_offset(err_, i); }
  const SignedDistanceField& bayes_sdf(std::size_t i) const { return bayes_.at(i); }
  SignedDistanceField predict_sdf(std::size_t i) const { return bayes_.at(i).shifted(offset(i)); }

 private:
  OracleErrorSpec err_;
  std::vector<SignedDistanceField> bayes_;
};

}  // namespace segnoise
