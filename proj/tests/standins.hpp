#pragma once

// Test-only segmenters with exactly known behaviour.

#include <cmath>
#include <vector>

#include "segnoise/noise.hpp"
#include "segnoise/sdf.hpp"
#include "segnoise/segmenter.hpp"

namespace segnoise::standin {

/// Reads the clean mask from a noiseless image (image >= 0.5) and learns an
/// integer morphological offset k = -round(mean SDF gap of labels vs image
/// masks). Predicts the image mask dilated (k > 0) or eroded (k < 0) k times,
/// with logits -phi of that mask. Trained on one-step Bayes labels it is the
/// exact Bayes predictor.
class MorphologicalBias final : public Segmenter {
 public:
  void fit(std::span<const ScalarField> images, std::span<const BinaryMask> labels, std::uint64_t) override {
    double sum = 0.0;
    for (std::size_t i = 0; i < images.size(); ++i)
      sum += sdf_gap(signed_distance(labels[i]), signed_distance(base(images[i])));
    offset_ = -static_cast<int>(std::lround(sum / static_cast<double>(images.size())));
    ++fits_;
  }

  ScalarField predict_logits(const ScalarField& image) const override {
    const auto mask = morph_repeat(base(image), offset_ >= 0 ? MorphDirection::dilate : MorphDirection::erode,
                                   static_cast<std::uint32_t>(std::abs(offset_)));
    ScalarField out(image.shape());
    const auto phi = signed_distance(mask);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = -phi[i];
    return out;
  }

  int offset() const noexcept { return offset_; }
  int fits() const noexcept { return fits_; }

  static BinaryMask base(const ScalarField& image) { return threshold(image, Compare::greater_equal, 0.5); }

 private:
  int offset_ = 0;
  int fits_ = 0;
};

inline ScalarField render(const BinaryMask& mask) {
  ScalarField out(mask.shape());
  for (std::size_t i = 0; i < mask.size(); ++i) out[i] = mask[i] ? 1.0 : 0.0;
  return out;
}

}  // namespace segnoise::standin
