#pragma once

// Signed distance fields on the grid graph.
//
// For a background site s, phi(s) = 1 + shortest path length from s to the
// background boundary layer; for a foreground site, phi(s) is minus
// (1 + shortest path length to the foreground boundary layer). Paths run over
// the full neighborhood graph. phi is never zero: the two layers flanking the
// interface carry -1 and +1.

#include <cstdint>
#include <limits>
#include <vector>

#include "segnoise/grid.hpp"

namespace segnoise {

/// Integer-valued signed distances stored as reals, so shifted fields such
/// as phi_hat - delta_hat share the type.
class SignedDistanceField {
 public:
  SignedDistanceField() = default;
  SignedDistanceField(GridShape shape, std::vector<double> values)
      : field_(shape, std::move(values)) {}
  explicit SignedDistanceField(ScalarField field) : field_(std::move(field)) {}

  const GridShape& shape() const noexcept { return field_.shape(); }
  std::size_t size() const noexcept { return field_.size(); }
  double operator[](std::size_t i) const noexcept { return field_[i]; }
  std::span<const double> values() const noexcept { return field_.values(); }
  const ScalarField& field() const noexcept { return field_; }

  /// Copy with every value shifted by `offset`.
  SignedDistanceField shifted(double offset) const {
    ScalarField out = field_;
    for (double& v : out.values()) v += offset;
    return SignedDistanceField(std::move(out));
  }

  friend bool operator==(const SignedDistanceField&, const SignedDistanceField&) = default;

 private:
  ScalarField field_;
};

namespace detail {

// Multi-source BFS; seeds get distance 1. Returns per-site distances.
inline std::vector<std::uint32_t> bfs_from(const GridShape& shape, const BinaryMask& seeds) {
  constexpr auto unset = std::numeric_limits<std::uint32_t>::max();
  std::vector<std::uint32_t> dist(shape.size(), unset);
  std::vector<std::size_t> queue;
  queue.reserve(shape.size());
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (seeds[i]) {
      dist[i] = 1;
      queue.push_back(i);
    }
  }
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const std::size_t i = queue[head];
    const std::uint32_t next = dist[i] + 1;
    shape.for_each_neighbor(i, [&](std::size_t j) {
      if (dist[j] == unset) {
        dist[j] = next;
        queue.push_back(j);
      }
    });
  }
  return dist;
}

}  // namespace detail

/// Exact signed distance field of `mask`. Throws DegenerateMask when the
/// mask has no interface.
inline SignedDistanceField signed_distance(const BinaryMask& mask) {
  const auto& shape = mask.shape();
  auto bd = boundaries(mask);
  if (bd.foreground.empty() || bd.background.empty())
    throw DegenerateMask("signed_distance: mask " + shape.to_string() +
                         " has no foreground/background interface");
  auto from_bg = detail::bfs_from(shape, bd.background);
  auto from_fg = detail::bfs_from(shape, bd.foreground);
  std::vector<double> values(shape.size());
  for (std::size_t i = 0; i < shape.size(); ++i)
    values[i] = mask[i] ? -static_cast<double>(from_fg[i]) : static_cast<double>(from_bg[i]);
  return SignedDistanceField(shape, std::move(values));
}

/// Mean per-site difference (predicted - reference).
inline double sdf_gap(const SignedDistanceField& predicted, const SignedDistanceField& reference) {
  require_same_shape(predicted.shape(), reference.shape(), "sdf_gap");
  double sum = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) sum += predicted[i] - reference[i];
  return sum / static_cast<double>(predicted.size());
}

inline BinaryMask threshold(const SignedDistanceField& phi, Compare mode, double tau) {
  return threshold(phi.values(), phi.shape(), mode, tau);
}

}  // namespace segnoise
