#pragma once

// Synthetic data and the empirical verification experiments.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "segnoise/correct.hpp"
#include "segnoise/grid.hpp"
#include "segnoise/model.hpp"
#include "segnoise/noise.hpp"
#include "segnoise/parallel.hpp"
#include "segnoise/rng.hpp"
#include "segnoise/sdf.hpp"
#include "segnoise/stats.hpp"

namespace segnoise {

enum class ShapeFamily { disks, ellipses };

struct HoleOption {
  std::uint32_t count = 0;
  double radius = 2.0;
};

struct SynthSpec {
  std::size_t count = 10;
  std::size_t height = 64;
  std::size_t width = 64;
  ShapeFamily family = ShapeFamily::disks;
  double contrast = 1.0;
  double noise_sigma = 0.0;
  double blur_sigma = 0.0;
  HoleOption holes;
  std::uint64_t seed = 0;

  void validate() const {
    if (count == 0) throw InvalidArgument("synth: count must be >= 1");
    if (height < 16 || width < 16) throw InvalidArgument("synth: grid must be at least 16x16");
    if (!(contrast > 0.0)) throw InvalidArgument("synth: contrast must be > 0");
    if (!(noise_sigma >= 0.0 && blur_sigma >= 0.0)) throw InvalidArgument("synth: sigmas must be >= 0");
    if (holes.count > 0 && !(holes.radius >= 1.0)) throw InvalidArgument("synth: hole radius must be >= 1");
  }
};

struct SynthData {
  std::vector<ScalarField> images;
  std::vector<BinaryMask> clean_masks;
  /// Clean masks with the requested interior holes carved out; empty when
  /// the hole option is off. Images are always rendered from clean_masks.
  std::vector<BinaryMask> holed_masks;
};

namespace detail {

inline BinaryMask random_shape(const GridShape& shape, ShapeFamily family, Pcg32& rng) {
  constexpr double margin = 2.0;
  const double side = static_cast<double>(std::min(shape.height(), shape.width()));
  auto center = [&](double extent, std::size_t dim) {
    const double lo = extent + margin;
    const double hi = static_cast<double>(dim) - 1.0 - extent - margin;
    return lo + (hi - lo) * rng.uniform();
  };
  if (family == ShapeFamily::disks) {
    const double r = side * (0.15 + 0.15 * rng.uniform());
    const double cy = center(r, shape.height());
    const double cx = center(r, shape.width());
    return disk_mask(shape, cy, cx, r);
  }
  const std::uint32_t parts = 1 + rng.below(2);
  BinaryMask out(shape);
  for (std::uint32_t k = 0; k < parts; ++k) {
    const double ry = side * (0.12 + 0.14 * rng.uniform());
    const double rx = side * (0.12 + 0.14 * rng.uniform());
    const double angle = std::numbers::pi * rng.uniform();
    const double extent = std::max(ry, rx);
    const double cy = center(extent, shape.height());
    const double cx = center(extent, shape.width());
    out = mask_union(out, ellipse_mask(shape, cy, cx, ry, rx, angle));
  }
  return out;
}

// Carves `count` disks of the given radius centered at sites at least
// radius + 2 deep inside the foreground.
inline BinaryMask carve_holes(const BinaryMask& mask, const HoleOption& holes, Pcg32& rng) {
  const auto phi = signed_distance(mask);
  std::vector<std::size_t> eligible;
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (phi[i] <= -(holes.radius + 2.0)) eligible.push_back(i);
  if (eligible.empty()) throw InvalidArgument("synth: shape too small for interior holes of radius " +
                                              std::to_string(holes.radius));
  BinaryMask out = mask;
  const double r2 = holes.radius * holes.radius;
  for (std::uint32_t h = 0; h < holes.count; ++h) {
    const auto [cz, cy, cx] = mask.shape().coords(eligible[rng.below(static_cast<std::uint32_t>(eligible.size()))]);
    for (std::size_t i = 0; i < mask.size(); ++i) {
      const auto [z, r, c] = mask.shape().coords(i);
      const double dy = static_cast<double>(r) - static_cast<double>(cy);
      const double dx = static_cast<double>(c) - static_cast<double>(cx);
      if (dy * dy + dx * dx <= r2) out.set(i, false);
    }
  }
  return out;
}

}  // namespace detail

/// Image = contrast * mask, Gaussian-blurred, plus pixel noise. Image i is
/// drawn from derive_seed(seed, i).
inline SynthData synth_dataset(const SynthSpec& spec) {
  spec.validate();
  const GridShape shape(spec.height, spec.width);
  SynthData out;
  out.images.resize(spec.count);
  out.clean_masks.resize(spec.count);
  if (spec.holes.count > 0) out.holed_masks.resize(spec.count);
  for (std::size_t n = 0; n < spec.count; ++n) {
    Pcg32 rng(derive_seed(spec.seed, n));
    auto mask = detail::random_shape(shape, spec.family, rng);
    std::vector<double> v(mask.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = mask[i] ? spec.contrast : 0.0;
    v = detail::separable_blur(shape, std::move(v), spec.blur_sigma);
    if (spec.noise_sigma > 0.0)
      for (double& x : v) x += spec.noise_sigma * rng.normal();
    if (spec.holes.count > 0) out.holed_masks[n] = detail::carve_holes(mask, spec.holes, rng);
    out.images[n] = ScalarField(shape, std::move(v));
    out.clean_masks[n] = std::move(mask);
  }
  return out;
}

struct Measurement {
  std::string name;
  double value = 0.0;
};

struct TrialReport {
  std::string experiment;
  bool passed = false;
  std::vector<Measurement> measurements;
  std::vector<Measurement> tolerances;
  std::uint64_t seed = 0;
  double wall_seconds = 0.0;  // not part of the reproducible content

  double get(const std::string& name) const {
    for (const auto& m : measurements)
      if (m.name == name) return m.value;
    throw InvalidArgument("report has no measurement '" + name + "'");
  }
};

namespace detail {

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

}  // namespace detail

struct Lemma1Config {
  double theta1 = 0.7;
  double theta2 = 0.9;
  double theta3 = 0.0;
  std::size_t samples = 100000;
  std::uint64_t seed = 0;
  std::size_t threads = default_threads();
};

/// Compares the thresholded Monte Carlo expectation of one-step noise with
/// the closed-form Bayes mask. Sites whose mean lies within 3 binomial sigma
/// of 0.5 are undecidable and excluded.
inline TrialReport verify_lemma1(const BinaryMask& mask, const Lemma1Config& cfg) {
  detail::Stopwatch clock;
  if (cfg.samples < 10000) throw InvalidArgument("verify_lemma1: need at least 1e4 samples");
  const auto bd = boundaries(mask);
  if (bd.foreground.empty() || bd.background.empty())
    throw DegenerateMask("verify_lemma1: mask has no interface");
  MarkovNoiseParams p;
  p.steps = 1;
  p.expansion = cfg.theta1;
  p.marching = cfg.theta2;
  p.flipping = cfg.theta3;
  p.seed = cfg.seed;
  const auto mean = expected_label_mc(mask, p, cfg.samples, cfg.threads);
  const auto expected = bayes_mask_t1(mask, cfg.theta1, cfg.theta2);
  std::size_t decided = 0, agree = 0;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    const double m = mean[i];
    if (std::abs(m - 0.5) <= 3.0 * stats::binomial_sigma(m, cfg.samples)) continue;
    ++decided;
    agree += (m >= 0.5) == expected[i];
  }
  TrialReport r;
  r.experiment = "lemma1";
  r.seed = cfg.seed;
  r.passed = decided > 0 && agree == decided;
  r.measurements = {{"theta1", cfg.theta1},
                    {"theta2", cfg.theta2},
                    {"theta3", cfg.theta3},
                    {"samples", static_cast<double>(cfg.samples)},
                    {"sites", static_cast<double>(mask.size())},
                    {"decided_sites", static_cast<double>(decided)},
                    {"agreeing_sites", static_cast<double>(agree)},
                    {"decided_fraction", static_cast<double>(decided) / static_cast<double>(mask.size())},
                    {"agreement", decided ? static_cast<double>(agree) / static_cast<double>(decided) : 0.0}};
  r.tolerances = {{"undecided_band_sigmas", 3.0}, {"required_agreement", 1.0}};
  r.wall_seconds = clock.seconds();
  return r;
}

struct Theorem1Config {
  ValidationBoundInputs bound{1.0, 20.0, 2.0, 0.05, 65536};
  std::size_t trials = 200;
  std::size_t pool_size = 3500;
  std::size_t pool_side = 256;  // pool grids are pool_side x pool_side
  ShapeFamily family = ShapeFamily::disks;
  double theta1 = 0.7;          // noise whose one-step Bayes mask defines phi_tilde
  double theta2 = 0.9;
  double confidence = 0.95;
  std::optional<std::uint64_t> validation_size;  // override the bound
  std::uint64_t seed = 0;
  std::size_t threads = default_threads();
};

struct Theorem1Trial {
  double delta_hat = 0.0;
  double error = 0.0;
  bool failed = false;
};

struct Theorem1Result {
  TrialReport report;
  std::vector<Theorem1Trial> trials;
};

/// Empirical check of the validation-size bound. Per trial: draw oracle
/// offsets for the pool, estimate the bias on V sampled images, and measure
/// mean_j sup_s |phi' - phi| on the held-out rest. A trial fails when that
/// error exceeds eps + eps0. Passes unless the one-sided exact lower
/// confidence bound on the failure rate exceeds alpha.
inline Theorem1Result verify_theorem1(const Theorem1Config& cfg) {
  detail::Stopwatch clock;
  if (cfg.trials < 100) throw InvalidArgument("verify_theorem1: need at least 100 trials");
  const std::uint64_t image_size = cfg.pool_side * cfg.pool_side;
  if (cfg.bound.image_size != image_size)
    throw InvalidArgument("verify_theorem1: bound image size " + std::to_string(cfg.bound.image_size) +
                          " does not match the " + std::to_string(cfg.pool_side) + "^2 fixture pool");
  const std::uint64_t v = cfg.validation_size ? *cfg.validation_size : required_validation_size(cfg.bound);
  if (v == 0) throw InvalidArgument("verify_theorem1: validation size is zero");
  if (v >= cfg.pool_size)
    throw InvalidArgument("verify_theorem1: V = " + std::to_string(v) + " exceeds fixture pool size " +
                          std::to_string(cfg.pool_size) + " (need at least one held-out image)");

  // Per pool image: mean, min and max of phi_tilde - phi. The oracle adds a
  // constant per image, so these statistics determine every trial exactly.
  struct GapStats {
    double mean, lo, hi;
  };
  std::vector<GapStats> pool(cfg.pool_size);
  const GridShape shape(cfg.pool_side, cfg.pool_side);
  const std::uint64_t pool_seed = derive_seed(cfg.seed, 0xF00D);
  parallel_for(cfg.pool_size, cfg.threads, [&](std::size_t j) {
    Pcg32 rng(derive_seed(pool_seed, j));
    const auto clean = detail::random_shape(shape, cfg.family, rng);
    const auto phi = signed_distance(clean);
    const auto phi_tilde = signed_distance(bayes_mask_t1(clean, cfg.theta1, cfg.theta2));
    double sum = 0.0, lo = 1e300, hi = -1e300;
    for (std::size_t i = 0; i < phi.size(); ++i) {
      const double d = phi_tilde[i] - phi[i];
      sum += d;
      lo = std::min(lo, d);
      hi = std::max(hi, d);
    }
    pool[j] = {sum / static_cast<double>(phi.size()), lo, hi};
  });

  const double limit = cfg.bound.eps + cfg.bound.eps0;
  Theorem1Result result;
  result.trials.resize(cfg.trials);
  parallel_for(cfg.trials, cfg.threads, [&](std::size_t t) {
    const std::uint64_t trial_seed = derive_seed(cfg.seed, t);
    const OracleErrorSpec err{cfg.bound.eps0, cfg.bound.eps1, derive_seed(trial_seed, 1)};
    std::vector<std::uint32_t> order(cfg.pool_size);
    for (std::uint32_t j = 0; j < order.size(); ++j) order[j] = j;
    Pcg32 rng(derive_seed(trial_seed, 0));
    for (std::size_t k = 0; k < v; ++k) {
      const auto pick = k + rng.below(static_cast<std::uint32_t>(order.size() - k));
      std::swap(order[k], order[pick]);
    }
    double gap_sum = 0.0;
    for (std::size_t k = 0; k < v; ++k) gap_sum += pool[order[k]].mean + oracle_offset(err, order[k]);
    const double delta_hat = gap_sum / static_cast<double>(v);
    double err_sum = 0.0;
    for (std::size_t k = v; k < order.size(); ++k) {
      const auto& g = pool[order[k]];
      const double a = oracle_offset(err, order[k]);
      err_sum += std::max(std::abs(g.hi + a - delta_hat), std::abs(g.lo + a - delta_hat));
    }
    const double error = err_sum / static_cast<double>(order.size() - v);
    result.trials[t] = {delta_hat, error, error > limit};
  });

  std::uint64_t failures = 0;
  double max_error = 0.0, mean_error = 0.0;
  for (const auto& tr : result.trials) {
    failures += tr.failed;
    max_error = std::max(max_error, tr.error);
    mean_error += tr.error;
  }
  mean_error /= static_cast<double>(cfg.trials);
  const auto ci = stats::clopper_pearson(failures, cfg.trials, cfg.confidence);
  const double lower_one_sided = stats::clopper_pearson_lower(failures, cfg.trials, cfg.confidence);

  auto& r = result.report;
  r.experiment = "theorem1";
  r.seed = cfg.seed;
  r.passed = lower_one_sided <= cfg.bound.alpha;
  r.measurements = {{"validation_size", static_cast<double>(v)},
                    {"pool_size", static_cast<double>(cfg.pool_size)},
                    {"trials", static_cast<double>(cfg.trials)},
                    {"failures", static_cast<double>(failures)},
                    {"failure_rate", static_cast<double>(failures) / static_cast<double>(cfg.trials)},
                    {"ci_lower", ci.lower},
                    {"ci_upper", ci.upper},
                    {"one_sided_lower", lower_one_sided},
                    {"mean_error", mean_error},
                    {"max_error", max_error}};
  r.tolerances = {{"eps0", cfg.bound.eps0},       {"eps1", cfg.bound.eps1},
                  {"eps", cfg.bound.eps},         {"alpha", cfg.bound.alpha},
                  {"error_limit", limit},         {"confidence", cfg.confidence}};
  r.wall_seconds = clock.seconds();
  return result;
}

struct PipelineConfig {
  SynthSpec data{200, 64, 64, ShapeFamily::disks, 1.0, 0.25, 1.0, {}, 0};
  MarkovNoiseParams noise = preset("tiny-se");
  CorrectionParams correction;
  TrainConfig model;
  std::size_t val_count = 24;
  std::size_t test_count = 50;
  std::optional<std::size_t> val_used;  // first V validation images feed the bias estimate
  bool run_reference_arms = true;       // clean ceiling and noisy baseline
  std::uint64_t seed = 0;
};

struct PipelineResult {
  std::optional<double> clean_dsc;
  std::optional<double> noisy_dsc;
  double sc_dsc = 0.0;
  double noisy_label_dsc = 0.0;  // noisy training labels vs truth
  std::vector<IterationReport> iterations;
  std::optional<double> hole_agreement;  // corrected labels vs truth inside carved holes
};

namespace detail {

inline double test_dsc(const Segmenter& model, std::span<const ScalarField> images,
                       std::span<const BinaryMask> truth, std::size_t threads) {
  std::vector<double> d(images.size());
  parallel_for(images.size(), threads, [&](std::size_t i) { d[i] = dice(model.predict_mask(images[i]), truth[i]); });
  double s = 0.0;
  for (double x : d) s += x;
  return s / static_cast<double>(d.size());
}

}  // namespace detail

/// Synthetic train/validation/test run: noise on training labels only, then
/// the clean-trained ceiling, the noisy-trained baseline and spatial
/// correction, all scored by test DSC against clean masks.
inline PipelineResult run_pipeline(const PipelineConfig& cfg) {
  SynthSpec spec = cfg.data;
  spec.seed = derive_seed(cfg.seed, 1);
  const auto data = synth_dataset(spec);
  if (cfg.val_count + cfg.test_count >= spec.count)
    throw InvalidArgument("run_pipeline: validation + test split leaves no training images");
  const std::size_t n_train = spec.count - cfg.val_count - cfg.test_count;
  const std::size_t v_used = cfg.val_used.value_or(cfg.val_count);
  if (v_used == 0 || v_used > cfg.val_count) throw InvalidArgument("run_pipeline: val_used out of range");
  const std::size_t threads = cfg.correction.threads;

  LabeledImages train, val;
  std::vector<BinaryMask> train_truth;
  std::vector<ScalarField> test_images;
  std::vector<BinaryMask> test_truth;
  const std::uint64_t noise_seed = derive_seed(cfg.seed, 2);
  train.images.assign(data.images.begin(), data.images.begin() + static_cast<std::ptrdiff_t>(n_train));
  train_truth.assign(data.clean_masks.begin(), data.clean_masks.begin() + static_cast<std::ptrdiff_t>(n_train));
  train.masks.resize(n_train);
  parallel_for(n_train, threads, [&](std::size_t i) {
    MarkovNoiseParams p = cfg.noise;
    p.seed = derive_seed(noise_seed, i);
    auto noisy = generate(data.clean_masks[i], p);
    if (!data.holed_masks.empty())
      for (std::size_t s = 0; s < noisy.size(); ++s)
        if (!data.holed_masks[i][s] && data.clean_masks[i][s]) noisy.set(s, false);
    train.masks[i] = std::move(noisy);
  });
  for (std::size_t k = 0; k < v_used; ++k) {
    val.images.push_back(data.images[n_train + k]);
    val.masks.push_back(data.clean_masks[n_train + k]);
  }
  for (std::size_t k = n_train + cfg.val_count; k < spec.count; ++k) {
    test_images.push_back(data.images[k]);
    test_truth.push_back(data.clean_masks[k]);
  }

  PipelineResult out;
  out.noisy_label_dsc = detail::mean_dice(train.masks, train_truth);
  const std::uint64_t model_seed = derive_seed(cfg.seed, 3);
  if (cfg.run_reference_arms) {
    LogisticSegmenter clean_model(cfg.model);
    clean_model.fit(train.images, train_truth, model_seed);
    out.clean_dsc = detail::test_dsc(clean_model, test_images, test_truth, threads);
    LogisticSegmenter noisy_model(cfg.model);
    noisy_model.fit(train.images, train.masks, model_seed);
    out.noisy_dsc = detail::test_dsc(noisy_model, test_images, test_truth, threads);
  }
  LogisticSegmenter sc_model(cfg.model);
  CorrectionParams cp = cfg.correction;
  cp.seed = model_seed;
  auto corrected = spatial_correction(train, val, sc_model, cp, train_truth);
  out.sc_dsc = detail::test_dsc(sc_model, test_images, test_truth, threads);
  out.iterations = std::move(corrected.reports);

  if (!data.holed_masks.empty()) {
    std::size_t hole_sites = 0, hole_agree = 0;
    for (std::size_t i = 0; i < n_train; ++i)
      for (std::size_t s = 0; s < train_truth[i].size(); ++s)
        if (train_truth[i][s] && !data.holed_masks[i][s]) {
          ++hole_sites;
          hole_agree += corrected.labels[i][s] == train_truth[i][s];
        }
    out.hole_agreement = hole_sites ? static_cast<double>(hole_agree) / static_cast<double>(hole_sites) : 1.0;
  }
  return out;
}

enum class SweepKind { noise_level, val_size };

struct SweepRow {
  std::string kind;
  double setting = 0.0;
  std::string arm;
  double test_dsc = 0.0;
};

/// One pipeline per setting: T for noise_level, V for val_size. Reference
/// arms do not depend on V, so the val_size sweep computes them once.
inline std::vector<SweepRow> sweep(SweepKind kind, std::span<const double> settings, const PipelineConfig& base) {
  if (settings.empty()) throw InvalidArgument("sweep: empty settings grid");
  std::vector<SweepRow> rows;
  const std::string name = kind == SweepKind::noise_level ? "noise_level" : "val_size";
  std::optional<double> clean, noisy;
  for (std::size_t k = 0; k < settings.size(); ++k) {
    const double s = settings[k];
    PipelineConfig cfg = base;
    if (kind == SweepKind::noise_level) {
      if (!(s >= 0.0)) throw InvalidArgument("sweep: T must be >= 0");
      cfg.noise.steps = static_cast<std::uint32_t>(std::llround(s));
    } else {
      if (!(s >= 1.0)) throw InvalidArgument("sweep: V must be >= 1");
      cfg.val_used = static_cast<std::size_t>(std::llround(s));
      cfg.run_reference_arms = k == 0;
    }
    const auto r = run_pipeline(cfg);
    if (r.clean_dsc) clean = r.clean_dsc;
    if (r.noisy_dsc) noisy = r.noisy_dsc;
    rows.push_back({name, s, "clean", clean.value_or(0.0)});
    rows.push_back({name, s, "noisy", noisy.value_or(0.0)});
    rows.push_back({name, s, "sc", r.sc_dsc});
  }
  return rows;
}

}  // namespace segnoise
