#pragma once

// Lattice geometry, binary masks, boundary operators and morphology.
//
// Sites are stored in row-major order ([depth,] row, column). Neighborhoods
// are the 4-neighbor (2D) or 6-neighbor (3D) graph; neighbors outside the
// grid are absent, not wrapped or reflected.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "segnoise/error.hpp"

namespace segnoise {

class GridShape {
 public:
  GridShape() = default;

  GridShape(std::size_t height, std::size_t width) : ndim_(2), ext_{1, height, width} {
    validate();
  }

  GridShape(std::size_t depth, std::size_t height, std::size_t width)
      : ndim_(3), ext_{depth, height, width} {
    validate();
  }

  /// From a dims list ordered [depth,] height, width.
  static GridShape from_dims(std::span<const std::size_t> dims) {
    if (dims.size() == 2) return {dims[0], dims[1]};
    if (dims.size() == 3) return {dims[0], dims[1], dims[2]};
    throw InvalidArgument("grid dimensionality must be 2 or 3, got " +
                          std::to_string(dims.size()));
  }

  int ndim() const noexcept { return ndim_; }
  std::size_t depth() const noexcept { return ext_[0]; }
  std::size_t height() const noexcept { return ext_[1]; }
  std::size_t width() const noexcept { return ext_[2]; }
  std::size_t size() const noexcept { return ext_[0] * ext_[1] * ext_[2]; }

  std::vector<std::size_t> dims() const {
    if (ndim_ == 2) return {ext_[1], ext_[2]};
    return {ext_[0], ext_[1], ext_[2]};
  }

  std::size_t index(std::size_t row, std::size_t col) const noexcept {
    return row * ext_[2] + col;
  }
  std::size_t index(std::size_t z, std::size_t row, std::size_t col) const noexcept {
    return (z * ext_[1] + row) * ext_[2] + col;
  }

  /// (z, row, col) of a linear index; z is 0 in 2D.
  std::array<std::size_t, 3> coords(std::size_t i) const noexcept {
    std::size_t col = i % ext_[2];
    std::size_t rest = i / ext_[2];
    return {rest / ext_[1], rest % ext_[1], col};
  }

  /// Calls fn(j) for every in-grid neighbor j of site i.
  template <typename Fn>
  void for_each_neighbor(std::size_t i, Fn&& fn) const {
    auto [z, r, c] = coords(i);
    const std::size_t w = ext_[2];
    const std::size_t plane = ext_[1] * ext_[2];
    if (c > 0) fn(i - 1);
    if (c + 1 < w) fn(i + 1);
    if (r > 0) fn(i - w);
    if (r + 1 < ext_[1]) fn(i + w);
    if (ndim_ == 3) {
      if (z > 0) fn(i - plane);
      if (z + 1 < ext_[0]) fn(i + plane);
    }
  }

  std::string to_string() const {
    std::string s;
    for (auto d : dims()) s += (s.empty() ? "" : "x") + std::to_string(d);
    return s;
  }

  friend bool operator==(const GridShape&, const GridShape&) = default;

 private:
  void validate() const {
    for (auto e : ext_)
      if (e == 0) throw InvalidArgument("grid extents must be >= 1");
  }

  int ndim_ = 2;
  std::array<std::size_t, 3> ext_{1, 1, 1};
};

inline void require_same_shape(const GridShape& a, const GridShape& b, const char* what) {
  if (!(a == b))
    throw ShapeMismatch(std::string(what) + ": shape " + a.to_string() + " vs " + b.to_string());
}

/// Binary label grid; 1 = foreground, 0 = background.
class BinaryMask {
 public:
  BinaryMask() = default;
  explicit BinaryMask(GridShape shape, bool fill = false)
      : shape_(shape), bits_(shape.size(), fill ? 1 : 0) {}

  BinaryMask(GridShape shape, std::vector<std::uint8_t> bits) : shape_(shape), bits_(std::move(bits)) {
    if (bits_.size() != shape_.size())
      throw ShapeMismatch("mask bit count " + std::to_string(bits_.size()) +
                          " does not match shape " + shape_.to_string());
    for (auto& b : bits_) b = b ? 1 : 0;
  }

  const GridShape& shape() const noexcept { return shape_; }
  std::size_t size() const noexcept { return bits_.size(); }

  bool operator[](std::size_t i) const noexcept { return bits_[i] != 0; }
  bool at(std::size_t row, std::size_t col) const { return bits_[shape_.index(row, col)] != 0; }
  void set(std::size_t i, bool v) noexcept { bits_[i] = v ? 1 : 0; }

  std::span<const std::uint8_t> bits() const noexcept { return bits_; }

  std::size_t count() const noexcept {
    return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
  }
  bool empty() const noexcept { return count() == 0; }
  bool full() const noexcept { return count() == bits_.size(); }

  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

 private:
  GridShape shape_;
  std::vector<std::uint8_t> bits_;
};

/// Real-valued grid. Values are expected to be finite.
class ScalarField {
 public:
  ScalarField() = default;
  explicit ScalarField(GridShape shape, double fill = 0.0) : shape_(shape), values_(shape.size(), fill) {}
  ScalarField(GridShape shape, std::vector<double> values) : shape_(shape), values_(std::move(values)) {
    if (values_.size() != shape_.size())
      throw ShapeMismatch("field value count " + std::to_string(values_.size()) +
                          " does not match shape " + shape_.to_string());
    for (double v : values_)
      if (!std::isfinite(v)) throw InvalidArgument("scalar field values must be finite");
  }

  const GridShape& shape() const noexcept { return shape_; }
  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t i) const noexcept { return values_[i]; }
  double& operator[](std::size_t i) noexcept { return values_[i]; }
  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }

  friend bool operator==(const ScalarField&, const ScalarField&) = default;

 private:
  GridShape shape_;
  std::vector<double> values_;
};

/// Multi-class label grid with class count L.
class LabelField {
 public:
  LabelField(GridShape shape, std::size_t num_classes, std::vector<std::uint32_t> labels)
      : shape_(shape), num_classes_(num_classes), labels_(std::move(labels)) {
    if (labels_.size() != shape_.size()) throw ShapeMismatch("label count does not match shape");
    for (auto l : labels_)
      if (l >= num_classes_) throw InvalidArgument("label " + std::to_string(l) + " out of range");
  }

  const GridShape& shape() const noexcept { return shape_; }
  std::size_t num_classes() const noexcept { return num_classes_; }
  std::uint32_t operator[](std::size_t i) const noexcept { return labels_[i]; }

 private:
  GridShape shape_;
  std::size_t num_classes_;
  std::vector<std::uint32_t> labels_;
};

struct Boundaries {
  BinaryMask foreground;  // ∂F: foreground sites with a background neighbor
  BinaryMask background;  // ∂B: background sites with a foreground neighbor
};

inline Boundaries boundaries(const BinaryMask& mask) {
  const auto& shape = mask.shape();
  Boundaries out{BinaryMask(shape), BinaryMask(shape)};
  for (std::size_t i = 0; i < mask.size(); ++i) {
    const bool v = mask[i];
    bool touches_other = false;
    shape.for_each_neighbor(i, [&](std::size_t j) { touches_other |= (mask[j] != v); });
    if (touches_other) (v ? out.foreground : out.background).set(i, true);
  }
  return out;
}

inline BinaryMask complement(const BinaryMask& mask) {
  BinaryMask out(mask.shape());
  for (std::size_t i = 0; i < mask.size(); ++i) out.set(i, !mask[i]);
  return out;
}

inline BinaryMask dilate_one(const BinaryMask& mask) {
  BinaryMask out = mask;
  const auto& shape = mask.shape();
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i]) continue;
    bool hit = false;
    shape.for_each_neighbor(i, [&](std::size_t j) { hit |= mask[j]; });
    if (hit) out.set(i, true);
  }
  return out;
}

inline BinaryMask erode_one(const BinaryMask& mask) {
  BinaryMask out = mask;
  const auto& shape = mask.shape();
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i]) continue;
    bool hit = false;
    shape.for_each_neighbor(i, [&](std::size_t j) { hit |= !mask[j]; });
    if (hit) out.set(i, false);
  }
  return out;
}

/// Dice similarity 2|a∩b| / (|a|+|b|); 1 when both masks are empty.
inline double dice(const BinaryMask& a, const BinaryMask& b) {
  require_same_shape(a.shape(), b.shape(), "dice");
  std::size_t both = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    na += a[i];
    nb += b[i];
    both += a[i] && b[i];
  }
  if (na + nb == 0) return 1.0;
  return 2.0 * static_cast<double>(both) / static_cast<double>(na + nb);
}

enum class AggregateRule { majority, union_of };

/// Majority is strict: a site is foreground iff more than half the masks
/// mark it. Even-count ties resolve to background.
inline BinaryMask aggregate(std::span<const BinaryMask> masks, AggregateRule rule) {
  if (masks.empty()) throw InvalidArgument("aggregate: empty mask list");
  const auto& shape = masks.front().shape();
  for (const auto& m : masks) require_same_shape(shape, m.shape(), "aggregate");
  const std::size_t n = masks.size();
  const std::size_t need = rule == AggregateRule::majority ? n / 2 + 1 : 1;
  BinaryMask out(shape);
  for (std::size_t i = 0; i < shape.size(); ++i) {
    std::size_t votes = 0;
    for (const auto& m : masks) votes += m[i];
    out.set(i, votes >= need);
  }
  return out;
}

inline BinaryMask one_vs_rest(const LabelField& labels, std::size_t cls) {
  if (cls >= labels.num_classes())
    throw InvalidArgument("class " + std::to_string(cls) + " out of range [0, " +
                          std::to_string(labels.num_classes()) + ")");
  BinaryMask out(labels.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out.set(i, labels[i] == cls);
  return out;
}

enum class Compare { greater_equal, less_equal };

/// Inclusive per-site comparison against tau.
inline BinaryMask threshold(std::span<const double> values, const GridShape& shape, Compare mode,
                            double tau) {
  if (values.size() != shape.size()) throw ShapeMismatch("threshold: value count mismatch");
  BinaryMask out(shape);
  for (std::size_t i = 0; i < values.size(); ++i)
    out.set(i, mode == Compare::greater_equal ? values[i] >= tau : values[i] <= tau);
  return out;
}

inline BinaryMask threshold(const ScalarField& field, Compare mode, double tau) {
  return threshold(field.values(), field.shape(), mode, tau);
}

/// Filled disk (2D) or ball (3D) of Euclidean radius `radius` around a center.
inline BinaryMask disk_mask(const GridShape& shape, double cz, double cy, double cx, double radius) {
  BinaryMask out(shape);
  const double r2 = radius * radius;
  for (std::size_t i = 0; i < shape.size(); ++i) {
    auto [z, r, c] = shape.coords(i);
    double dz = shape.ndim() == 3 ? static_cast<double>(z) - cz : 0.0;
    double dy = static_cast<double>(r) - cy;
    double dx = static_cast<double>(c) - cx;
    out.set(i, dz * dz + dy * dy + dx * dx <= r2);
  }
  return out;
}

inline BinaryMask disk_mask(const GridShape& shape, double cy, double cx, double radius) {
  return disk_mask(shape, 0.0, cy, cx, radius);
}

/// Filled axis-rotated ellipse in 2D.
inline BinaryMask ellipse_mask(const GridShape& shape, double cy, double cx, double ry, double rx,
                               double angle) {
  BinaryMask out(shape);
  const double ca = std::cos(angle), sa = std::sin(angle);
  for (std::size_t i = 0; i < shape.size(); ++i) {
    auto [z, r, c] = shape.coords(i);
    double dy = static_cast<double>(r) - cy;
    double dx = static_cast<double>(c) - cx;
    double u = ca * dx + sa * dy;
    double v = -sa * dx + ca * dy;
    out.set(i, (u * u) / (rx * rx) + (v * v) / (ry * ry) <= 1.0);
  }
  return out;
}

inline BinaryMask mask_union(const BinaryMask& a, const BinaryMask& b) {
  require_same_shape(a.shape(), b.shape(), "mask_union");
  BinaryMask out = a;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (b[i]) out.set(i, true);
  return out;
}

}  // namespace segnoise
