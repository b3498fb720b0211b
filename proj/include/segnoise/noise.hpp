#pragma once

// Markov boundary label noise, dilate/erode noise and noise presets.
//
// RNG draw order for generate() is part of the contract:
//   for each step: z1 ~ Bernoulli(theta1), then one Bernoulli(theta2) draw per
//   site of the active boundary (dB if z1 = 1, dF otherwise) in row-major
//   order; after all steps (and optional smoothing), one Bernoulli(theta3)
//   draw per stable site in row-major order. With theta3 == 0 the flipping
//   draws are skipped, which cannot change the output.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "segnoise/grid.hpp"
#include "segnoise/log.hpp"
#include "segnoise/parallel.hpp"
#include "segnoise/rng.hpp"
#include "segnoise/sdf.hpp"

namespace segnoise {

struct MarkovNoiseParams {
  std::uint32_t steps = 0;      // T
  double expansion = 0.5;       // theta1
  double marching = 0.5;        // theta2
  double flipping = 0.0;        // theta3
  double smooth_sigma = 0.0;    // Gaussian sigma in pixels, 0 = off
  std::uint64_t seed = 0;

  /// Throws on out-of-range probabilities; warns when theta3 > 0.1.
  void validate() const {
    auto prob = [](double p, const char* name) {
      if (!(p >= 0.0 && p <= 1.0))
        throw InvalidArgument(std::string(name) + " must lie in [0, 1], got " + std::to_string(p));
    };
    prob(expansion, "theta1");
    prob(marching, "theta2");
    if (!(flipping >= 0.0 && flipping < 0.5))
      throw InvalidArgument("theta3 must lie in [0, 0.5), got " + std::to_string(flipping));
    if (flipping > 0.1)
      warn("theta3 = " + std::to_string(flipping) +
           " is large; the Bayes-mask analysis assumes theta3 well below 0.5");
    if (!(smooth_sigma >= 0.0) || !std::isfinite(smooth_sigma))
      throw InvalidArgument("smooth_sigma must be finite and >= 0");
  }

  friend bool operator==(const MarkovNoiseParams&, const MarkovNoiseParams&) = default;
};

/// One Markov step. z1 = true expands into dB, false shrinks out of dF;
/// `marching` selects which boundary sites actually move.
inline BinaryMask markov_step(const BinaryMask& mask, bool z1, const BinaryMask& marching) {
  require_same_shape(mask.shape(), marching.shape(), "markov_step");
  auto bd = boundaries(mask);
  BinaryMask out = mask;
  const BinaryMask& active = z1 ? bd.background : bd.foreground;
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (active[i] && marching[i]) out.set(i, z1);
  return out;
}

namespace detail {

inline std::vector<double> gaussian_kernel(double sigma) {
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(2 * radius + 1);
  for (int d = -radius; d <= radius; ++d) k[d + radius] = std::exp(-0.5 * d * d / (sigma * sigma));
  return k;
}

// Separable blur along each axis; the window is truncated at the grid edge
// and renormalized over in-grid taps.
inline std::vector<double> separable_blur(const GridShape& shape, std::vector<double> values,
                                          double sigma) {
  if (sigma <= 0.0) return values;
  const auto kernel = gaussian_kernel(sigma);
  const int radius = static_cast<int>(kernel.size() / 2);
  const std::array<std::size_t, 3> ext{shape.depth(), shape.height(), shape.width()};
  const std::array<std::size_t, 3> stride{shape.height() * shape.width(), shape.width(), 1};
  std::vector<double> tmp(values.size());
  for (int axis = 3 - shape.ndim(); axis < 3; ++axis) {
    const auto n = static_cast<long>(ext[axis]);
    for (std::size_t i = 0; i < values.size(); ++i) {
      const long pos = static_cast<long>((i / stride[axis]) % ext[axis]);
      double acc = 0.0, wsum = 0.0;
      for (int d = -radius; d <= radius; ++d) {
        const long q = pos + d;
        if (q < 0 || q >= n) continue;
        const double w = kernel[d + radius];
        acc += w * values[i + static_cast<std::ptrdiff_t>(d) * static_cast<std::ptrdiff_t>(stride[axis])];
        wsum += w;
      }
      tmp[i] = acc / wsum;
    }
    values.swap(tmp);
  }
  return values;
}

// One step with boundary-restricted marching draws, in place.
inline void random_step(BinaryMask& mask, const MarkovNoiseParams& p, Pcg32& rng) {
  const bool z1 = rng.bernoulli(p.expansion);
  auto bd = boundaries(mask);
  const BinaryMask& active = z1 ? bd.background : bd.foreground;
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (active[i] && rng.bernoulli(p.marching)) mask.set(i, z1);
}

}  // namespace detail

/// Gaussian smoothing of a binary mask, re-thresholded at 0.5.
inline BinaryMask smooth_mask(const BinaryMask& mask, double sigma) {
  if (sigma <= 0.0) return mask;
  std::vector<double> v(mask.bits().begin(), mask.bits().end());
  v = detail::separable_blur(mask.shape(), std::move(v), sigma);
  return threshold(v, mask.shape(), Compare::greater_equal, 0.5);
}

/// Samples one noisy label from the Markov noise process.
inline BinaryMask generate(const BinaryMask& mask, const MarkovNoiseParams& params) {
  params.validate();
  Pcg32 rng(params.seed);
  BinaryMask state = mask;
  for (std::uint32_t t = 0; t < params.steps; ++t) detail::random_step(state, params, rng);
  state = smooth_mask(state, params.smooth_sigma);
  if (params.flipping > 0.0) {
    BinaryMask out = state;
    for (std::size_t i = 0; i < mask.size(); ++i)
      if (state[i] == mask[i] && rng.bernoulli(params.flipping)) out.set(i, !mask[i]);
    return out;
  }
  return state;
}

/// Monte Carlo estimate of the expected noisy label. Sample i uses seed
/// derive_seed(params.seed, i); counts are integer-summed so the result is
/// independent of the worker count.
inline ScalarField expected_label_mc(const BinaryMask& mask, const MarkovNoiseParams& params,
                                     std::size_t n_samples, std::size_t threads = default_threads()) {
  if (n_samples == 0) throw InvalidArgument("expected_label_mc: n_samples must be >= 1");
  params.validate();
  threads = std::clamp<std::size_t>(threads, 1, n_samples);
  std::vector<std::vector<std::uint32_t>> partial(threads, std::vector<std::uint32_t>(mask.size(), 0));
  parallel_for(threads, threads, [&](std::size_t w) {
    auto& counts = partial[w];
    for (std::size_t s = n_samples * w / threads; s < n_samples * (w + 1) / threads; ++s) {
      MarkovNoiseParams p = params;
      p.seed = derive_seed(params.seed, s);
      const BinaryMask noisy = generate(mask, p);
      const auto bits = noisy.bits();
      for (std::size_t i = 0; i < bits.size(); ++i) counts[i] += bits[i];
    }
  });
  ScalarField out(mask.shape());
  for (const auto& counts : partial)
    for (std::size_t i = 0; i < counts.size(); ++i) out[i] += counts[i];
  for (double& v : out.values()) v /= static_cast<double>(n_samples);
  return out;
}

/// Bayes mask (thresholded expectation) of one Markov step with theta3 << 0.5.
inline BinaryMask bayes_mask_t1(const BinaryMask& mask, double theta1, double theta2) {
  if (theta1 * theta2 >= 0.5) return dilate_one(mask);
  if (1.0 + theta1 * theta2 - theta2 < 0.5) return erode_one(mask);
  return mask;
}

enum class MorphDirection { dilate, erode };

/// Applies `k` unit dilations or erosions; erosion stops once the mask is empty.
inline BinaryMask morph_repeat(const BinaryMask& mask, MorphDirection dir, std::uint32_t k) {
  BinaryMask out = mask;
  for (std::uint32_t i = 0; i < k; ++i) {
    if (dir == MorphDirection::dilate) {
      out = dilate_one(out);
    } else {
      if (out.empty()) break;
      out = erode_one(out);
    }
  }
  return out;
}

struct MorphNoiseDraw {
  MorphDirection direction;
  std::uint32_t pixels;
};

/// Direction first (fair coin), then k uniform in [1, max_pixels].
inline MorphNoiseDraw draw_dilate_erode(std::uint32_t max_pixels, std::uint64_t seed) {
  if (max_pixels == 0) throw InvalidArgument("dilate_erode_noise: max_pixels must be >= 1");
  Pcg32 rng(seed);
  const auto dir = rng.bernoulli(0.5) ? MorphDirection::dilate : MorphDirection::erode;
  return {dir, 1 + rng.below(max_pixels)};
}

/// Random dilation or erosion by up to `max_pixels` pixels (the S_M setting).
inline BinaryMask dilate_erode_noise(const BinaryMask& mask, std::uint32_t max_pixels, std::uint64_t seed) {
  const auto d = draw_dilate_erode(max_pixels, seed);
  return morph_repeat(mask, d.direction, d.pixels);
}

/// Flipping noise confined to the object interior: foreground sites at depth
/// >= min_depth (|phi| >= min_depth) become background with probability `rate`.
/// Used to build inner-hole fixtures.
inline BinaryMask interior_flip_noise(const BinaryMask& mask, double rate, std::uint32_t min_depth,
                                      std::uint64_t seed) {
  if (!(rate >= 0.0 && rate <= 1.0)) throw InvalidArgument("interior_flip_noise: rate out of [0, 1]");
  const auto phi = signed_distance(mask);
  Pcg32 rng(seed);
  BinaryMask out = mask;
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (phi[i] <= -static_cast<double>(min_depth) && rng.bernoulli(rate)) out.set(i, false);
  return out;
}

struct NoisePreset {
  std::string name;
  MarkovNoiseParams params;
  bool full_scale = false;  // false for presets scaled to small synthetic grids
  std::string note;
};

inline const std::vector<NoisePreset>& builtin_presets() {
  static const std::vector<NoisePreset> presets = [] {
    auto m = [](std::uint32_t t, double t1, double t2, double t3) {
      MarkovNoiseParams p;
      p.steps = t;
      p.expansion = t1;
      p.marching = t2;
      p.flipping = t3;
      return p;
    };
    std::vector<NoisePreset> v{
        {"jsrt-lung-se", m(180, 0.7, 0.03, 0.1), true, "JSRT lung, expansion, 256x256"},
        {"jsrt-lung-ss", m(200, 0.3, 0.05, 0.1), true, "JSRT lung, shrinkage, 256x256"},
        {"jsrt-heart-se", m(180, 0.7, 0.03, 0.1), true, "JSRT heart, expansion, 256x256"},
        {"jsrt-heart-ss", m(200, 0.3, 0.05, 0.1), true, "JSRT heart, shrinkage, 256x256"},
        {"jsrt-clavicle-se", m(100, 0.7, 0.03, 0.1), true, "JSRT clavicle, expansion, 256x256"},
        {"jsrt-clavicle-ss", m(120, 0.3, 0.05, 0.1), true, "JSRT clavicle, shrinkage, 256x256"},
        {"isic-se", m(200, 0.8, 0.05, 0.1), true, "ISIC 2017, expansion, 256x256"},
        {"isic-ss", m(200, 0.2, 0.05, 0.1), true, "ISIC 2017, shrinkage, 256x256"},
        {"brats-se", m(80, 0.7, 0.05, 0.1), true, "Brats 2020, expansion, 64x128x128"},
        {"brats-ss", m(80, 0.3, 0.05, 0.1), true, "Brats 2020, shrinkage, 64x128x128"},
        {"tiny-se", m(8, 0.8, 0.5, 0.02), false, "desk scale expansion for 64x64 grids"},
        {"tiny-ss", m(8, 0.2, 0.5, 0.02), false, "desk scale shrinkage for 64x64 grids"},
        {"none", m(0, 0.5, 0.0, 0.0), false, "identity noise"},
    };
    return v;
  }();
  return presets;
}

/// Looks a preset up among the built-ins and any extra (config-file) presets.
/// Extra presets shadow built-ins of the same name.
inline NoisePreset find_preset(const std::string& name,
                               const std::map<std::string, MarkovNoiseParams>& extra = {}) {
  if (auto it = extra.find(name); it != extra.end()) return {name, it->second, false, "config file"};
  for (const auto& p : builtin_presets())
    if (p.name == name) return p;
  throw InvalidArgument("unknown noise preset '" + name + "'");
}

inline MarkovNoiseParams preset(const std::string& name) { return find_preset(name).params; }

}  // namespace segnoise
