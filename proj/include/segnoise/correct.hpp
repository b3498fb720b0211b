#pragma once

// Bias estimation from a clean validation set, signed-distance and
// logit-space label correction, the iterative correction loop, and the
// validation-size bound.

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "segnoise/grid.hpp"
#include "segnoise/log.hpp"
#include "segnoise/parallel.hpp"
#include "segnoise/rng.hpp"
#include "segnoise/sdf.hpp"
#include "segnoise/segmenter.hpp"

namespace segnoise {

struct BiasEstimate {
  double delta_hat = 0.0;
  std::vector<double> per_image_gaps;
  std::size_t v_used = 0;
  std::size_t skipped = 0;
};

inline BiasEstimate estimate_bias(std::span<const SignedDistanceField> predicted,
                                  std::span<const SignedDistanceField> clean) {
  if (predicted.size() != clean.size())
    throw InvalidArgument("estimate_bias: " + std::to_string(predicted.size()) + " predictions vs " +
                          std::to_string(clean.size()) + " clean fields");
  if (predicted.empty()) throw InvalidArgument("estimate_bias: empty validation set");
  BiasEstimate out;
  out.per_image_gaps.reserve(predicted.size());
  double sum = 0.0;
  for (std::size_t v = 0; v < predicted.size(); ++v) {
    const double gap = sdf_gap(predicted[v], clean[v]);
    out.per_image_gaps.push_back(gap);
    sum += gap;
  }
  out.v_used = predicted.size();
  out.delta_hat = sum / static_cast<double>(out.v_used);
  return out;
}

/// Mask-level bias estimate. Pairs where either mask has no interface are
/// skipped with a warning; throws DegenerateMask when every pair is skipped.
inline BiasEstimate estimate_bias_from_masks(std::span<const BinaryMask> predicted,
                                             std::span<const BinaryMask> clean) {
  if (predicted.size() != clean.size())
    throw InvalidArgument("estimate_bias: prediction/clean count mismatch");
  if (predicted.empty()) throw InvalidArgument("estimate_bias: empty validation set");
  std::vector<SignedDistanceField> phi_hat, phi;
  std::size_t skipped = 0;
  for (std::size_t v = 0; v < predicted.size(); ++v) {
    try {
      auto a = signed_distance(predicted[v]);
      auto b = signed_distance(clean[v]);
      phi_hat.push_back(std::move(a));
      phi.push_back(std::move(b));
    } catch (const DegenerateMask&) {
      warn("validation image " + std::to_string(v) + " is degenerate; excluded from bias estimate");
      ++skipped;
    }
  }
  if (phi_hat.empty())
    throw DegenerateMask("estimate_bias: all " + std::to_string(skipped) +
                         " validation pairs are degenerate");
  auto out = estimate_bias(phi_hat, phi);
  out.skipped = skipped;
  return out;
}

/// Recovers a mask by thresholding phi_hat - delta_hat at <= 0.
inline BinaryMask naive_correct(const SignedDistanceField& phi_hat, double delta_hat) {
  return threshold(phi_hat.shifted(-delta_hat), Compare::less_equal, 0.0);
}

/// corrective: lambda = -inf / -sup of the logits over the bias band, which
/// moves the boundary against the bias. literal: the unnegated band statistic.
enum class LambdaSign { corrective, literal };

/// Logit offset taken from the band between the predicted interface and the
/// estimated bias: {1 <= phi_hat <= delta_hat} for delta_hat > 0,
/// {delta_hat <= phi_hat <= -1} for delta_hat < 0.
inline double lambda_bias(const ScalarField& logits, const SignedDistanceField& phi_hat, double delta_hat,
                          LambdaSign sign = LambdaSign::corrective) {
  require_same_shape(logits.shape(), phi_hat.shape(), "lambda_bias");
  if (!(std::abs(delta_hat) >= 1.0))
    throw InvalidArgument("lambda_bias: |delta_hat| must be >= 1, got " + std::to_string(delta_hat));
  const bool positive = delta_hat > 0;
  double stat = positive ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
  bool any = false;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const double p = phi_hat[i];
    const bool in_band = positive ? (p >= 1.0 && p <= delta_hat) : (p >= delta_hat && p <= -1.0);
    if (!in_band) continue;
    any = true;
    stat = positive ? std::min(stat, logits[i]) : std::max(stat, logits[i]);
  }
  if (!any) throw EmptyBand("lambda_bias: no site with phi_hat in the band of delta_hat = " +
                            std::to_string(delta_hat));
  return sign == LambdaSign::corrective ? -stat : stat;
}

struct LogitCorrection {
  ScalarField logits;
  double lambda = 0.0;
  bool applied = false;
};

/// f' = f_hat + lambda * exp(-phi_hat^2 / (2 (gamma delta_hat)^2)); identity
/// when |delta_hat| < 1.
inline LogitCorrection logit_correct_detailed(const ScalarField& logits, const SignedDistanceField& phi_hat,
                                              double delta_hat, double gamma,
                                              LambdaSign sign = LambdaSign::corrective) {
  require_same_shape(logits.shape(), phi_hat.shape(), "logit_correct");
  if (!(gamma > 0.0 && gamma <= 1.0))
    throw InvalidArgument("logit_correct: gamma must lie in (0, 1], got " + std::to_string(gamma));
  if (!(std::abs(delta_hat) >= 1.0)) return {logits, 0.0, false};
  const double lambda = lambda_bias(logits, phi_hat, delta_hat, sign);
  const double width = gamma * delta_hat;
  const double denom = 2.0 * width * width;
  ScalarField out = logits;
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] += lambda * std::exp(-(phi_hat[i] * phi_hat[i]) / denom);
  return {std::move(out), lambda, true};
}

inline ScalarField logit_correct(const ScalarField& logits, const SignedDistanceField& phi_hat,
                                 double delta_hat, double gamma, LambdaSign sign = LambdaSign::corrective) {
  return logit_correct_detailed(logits, phi_hat, delta_hat, gamma, sign).logits;
}

/// How the loop rewrites training labels: logit applies the decayed logit
/// offset and thresholds at 0; signed_distance thresholds phi_hat - delta_hat.
enum class RelabelRule { logit, signed_distance };

struct CorrectionParams {
  double gamma = 1.0;
  RelabelRule relabel = RelabelRule::logit;
  std::uint32_t max_iters = 5;
  double stop_threshold = 1.0;
  LambdaSign lambda_sign = LambdaSign::corrective;
  std::uint64_t seed = 0;
  std::size_t threads = default_threads();

  void validate() const {
    if (!(gamma > 0.0 && gamma <= 1.0)) throw InvalidArgument("gamma must lie in (0, 1]");
    if (max_iters < 1) throw InvalidArgument("max_iters must be >= 1");
    if (!(stop_threshold >= 0.0)) throw InvalidArgument("stop_threshold must be >= 0");
  }
};

struct IterationReport {
  std::uint32_t iter = 0;
  double delta_hat = 0.0;
  double lambda_mean = 0.0;  // over training images relabeled in this round
  std::optional<double> train_label_dsc;  // current labels vs truth, when truth is known
  double val_dsc = 0.0;
  std::size_t v_used = 0;
  std::size_t skipped = 0;
};

struct CorrectionResult {
  std::vector<BinaryMask> labels;
  std::vector<IterationReport> reports;
  BiasEstimate final_bias;
};

struct LabeledImages {
  std::vector<ScalarField> images;
  std::vector<BinaryMask> masks;

  void check(const char* what) const {
    if (images.size() != masks.size())
      throw InvalidArgument(std::string(what) + ": image/mask count mismatch");
    for (std::size_t i = 0; i < images.size(); ++i)
      require_same_shape(images[i].shape(), masks[i].shape(), what);
  }
};

namespace detail {

inline double mean_dice(std::span<const BinaryMask> a, std::span<const BinaryMask> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += dice(a[i], b[i]);
  return a.empty() ? 0.0 : s / static_cast<double>(a.size());
}

}  // namespace detail

/// Iterative spatial correction. Trains `model` on the noisy labels, then
/// while |delta_hat| >= stop_threshold (and under max_iters rounds) replaces
/// the training labels with the thresholded corrected logits and retrains.
/// `model` is left holding the final fit. `truth`, when given, is only used
/// for reporting.
inline CorrectionResult spatial_correction(const LabeledImages& train, const LabeledImages& validation,
                                           Segmenter& model, const CorrectionParams& params,
                                           std::span<const BinaryMask> truth = {}) {
  params.validate();
  train.check("spatial_correction train set");
  validation.check("spatial_correction validation set");
  if (validation.images.empty()) throw InvalidArgument("spatial_correction: empty validation set");
  if (!truth.empty() && truth.size() != train.masks.size())
    throw InvalidArgument("spatial_correction: truth count mismatch");

  CorrectionResult result;
  result.labels = train.masks;

  auto evaluate = [&](std::uint32_t iter, double lambda_mean) {
    std::vector<BinaryMask> predicted(validation.images.size());
    parallel_for(predicted.size(), params.threads,
                 [&](std::size_t v) { predicted[v] = model.predict_mask(validation.images[v]); });
    auto bias = estimate_bias_from_masks(predicted, validation.masks);
    IterationReport row;
    row.iter = iter;
    row.delta_hat = bias.delta_hat;
    row.lambda_mean = lambda_mean;
    if (!truth.empty()) row.train_label_dsc = detail::mean_dice(result.labels, truth);
    row.val_dsc = detail::mean_dice(predicted, validation.masks);
    row.v_used = bias.v_used;
    row.skipped = bias.skipped;
    result.reports.push_back(row);
    result.final_bias = std::move(bias);
  };

  model.fit(train.images, result.labels, derive_seed(params.seed, 0));
  evaluate(0, 0.0);

  for (std::uint32_t round = 1; round <= params.max_iters; ++round) {
    const double delta_hat = result.final_bias.delta_hat;
    if (!(std::abs(delta_hat) >= params.stop_threshold)) break;

    std::vector<BinaryMask> next(result.labels.size());
    std::vector<std::optional<double>> lambdas(result.labels.size());
    parallel_for(next.size(), params.threads, [&](std::size_t i) {
      const auto logits = model.predict_logits(train.images[i]);
      const auto mask = threshold(logits, Compare::greater_equal, 0.0);
      try {
        const auto phi_hat = signed_distance(mask);
        if (params.relabel == RelabelRule::signed_distance) {
          next[i] = naive_correct(phi_hat, delta_hat);
          return;
        }
        auto corr = logit_correct_detailed(logits, phi_hat, delta_hat, params.gamma, params.lambda_sign);
        next[i] = threshold(corr.logits, Compare::greater_equal, 0.0);
        if (corr.applied) lambdas[i] = corr.lambda;
      } catch (const DegenerateMask&) {
        next[i] = result.labels[i];  // nothing to move; keep the current label
      } catch (const EmptyBand&) {
        next[i] = mask;
      }
    });
    double lambda_sum = 0.0;
    std::size_t lambda_n = 0;
    for (const auto& l : lambdas)
      if (l) {
        lambda_sum += *l;
        ++lambda_n;
      }
    result.labels = std::move(next);
    model.fit(train.images, result.labels, derive_seed(params.seed, round));
    evaluate(round, lambda_n ? lambda_sum / static_cast<double>(lambda_n) : 0.0);
  }
  return result;
}

struct ValidationBoundInputs {
  double eps0 = 0.0;
  double eps1 = 0.0;
  double eps = 0.0;
  double alpha = 0.05;
  std::uint64_t image_size = 0;
};

/// eps1^2 / (2 (eps - eps0)^2) * ln(2|I| / alpha). alpha above 1 is accepted
/// up to 2|I| so the log-argument-one boundary is reachable.
inline double validation_size_bound(const ValidationBoundInputs& in) {
  if (!(in.eps > in.eps0)) throw InvalidArgument("required_validation_size: need eps > eps0");
  if (!(in.eps0 >= 0.0)) throw InvalidArgument("required_validation_size: need eps0 >= 0");
  if (!(in.eps1 >= in.eps0)) throw InvalidArgument("required_validation_size: need eps1 >= eps0");
  if (in.image_size == 0) throw InvalidArgument("required_validation_size: image size must be >= 1");
  const double two_i = 2.0 * static_cast<double>(in.image_size);
  if (!(in.alpha > 0.0 && in.alpha <= std::max(1.0, two_i)))
    throw InvalidArgument("required_validation_size: alpha out of range");
  const double gap = in.eps - in.eps0;
  return in.eps1 * in.eps1 / (2.0 * gap * gap) * std::log(two_i / in.alpha);
}

/// Smallest integer V meeting the bound, clamped at zero.
inline std::uint64_t required_validation_size(const ValidationBoundInputs& in) {
  const double v = validation_size_bound(in);
  if (v <= 0.0) return 0;
  return static_cast<std::uint64_t>(std::ceil(v));
}

}  // namespace segnoise
