#pragma once

#include <cstdint>
#include <span>

#include "segnoise/grid.hpp"

namespace segnoise {

/// A trainable per-image segmenter. Logits are positive on foreground:
/// threshold(predict_logits(x), >= 0) is the segmenter's mask.
class Segmenter {
 public:
  virtual ~Segmenter() = default;

  virtual void fit(std::span<const ScalarField> images, std::span<const BinaryMask> labels,
                   std::uint64_t seed) = 0;

  /// Deterministic after fit.
  virtual ScalarField predict_logits(const ScalarField& image) const = 0;

  BinaryMask predict_mask(const ScalarField& image) const {
    return threshold(predict_logits(image), Compare::greater_equal, 0.0);
  }
};

}  // namespace segnoise
