#include <gtest/gtest.h>

#include <algorithm>
#include <vector>

#include "oracles.hpp"
#include "segnoise/grid.hpp"

namespace segnoise {
namespace {

using oracle::as_ints;
using oracle::from_rows;

TEST(GridShape, RejectsZeroExtent) {
  EXPECT_THROW(GridShape(0, 4), InvalidArgument);
  EXPECT_THROW(GridShape(2, 0, 4), InvalidArgument);
  const std::vector<std::size_t> four{1, 2, 3, 4};
  EXPECT_THROW(GridShape::from_dims(four), InvalidArgument);
}

TEST(GridShape, NeighborhoodIsSymmetricWithoutSelfLoops) {
  for (const GridShape shape : {GridShape(1, 1), GridShape(3, 5), GridShape(3, 4, 2)}) {
    for (std::size_t i = 0; i < shape.size(); ++i) {
      std::vector<std::size_t> nbrs;
      shape.for_each_neighbor(i, [&](std::size_t j) { nbrs.push_back(j); });
      EXPECT_LE(nbrs.size(), shape.ndim() == 2 ? 4u : 6u);
      for (auto j : nbrs) {
        EXPECT_NE(i, j);
        bool back = false;
        shape.for_each_neighbor(j, [&](std::size_t k) { back |= k == i; });
        EXPECT_TRUE(back);
      }
    }
  }
  // corners are truncated
  std::size_t corner = 0;
  GridShape(3, 3).for_each_neighbor(0, [&](std::size_t) { ++corner; });
  EXPECT_EQ(corner, 2u);
}

TEST(Boundaries, SinglePixelRow) {
  const auto m = from_rows({{0, 0, 1, 0, 0}});
  const auto bd = boundaries(m);
  EXPECT_EQ(as_ints(bd.foreground), (std::vector<int>{0, 0, 1, 0, 0}));
  EXPECT_EQ(as_ints(bd.background), (std::vector<int>{0, 1, 0, 1, 0}));
}

TEST(Boundaries, CenterPixel) {
  const auto m = from_rows({{0, 0, 0}, {0, 1, 0}, {0, 0, 0}});
  const auto bd = boundaries(m);
  EXPECT_EQ(as_ints(bd.foreground), (std::vector<int>{0, 0, 0, 0, 1, 0, 0, 0, 0}));
  EXPECT_EQ(as_ints(bd.background), (std::vector<int>{0, 1, 0, 1, 0, 1, 0, 1, 0}));
}

TEST(Boundaries, DegenerateMasksHaveNoBoundary) {
  for (bool fill : {false, true}) {
    const auto bd = boundaries(BinaryMask(GridShape(4, 6), fill));
    EXPECT_TRUE(bd.foreground.empty());
    EXPECT_TRUE(bd.background.empty());
  }
}

TEST(Boundaries, RandomMasksSatisfyLayerProperties) {
  Pcg32 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const GridShape shape = trial % 2 ? GridShape(1 + rng.below(9), 1 + rng.below(9))
                                      : GridShape(1 + rng.below(4), 1 + rng.below(4), 1 + rng.below(4));
    const auto m = oracle::random_mask(shape, 0.5, rng);
    const auto bd = boundaries(m);
    const auto cbd = boundaries(complement(m));
    EXPECT_EQ(bd.foreground, cbd.background);
    EXPECT_EQ(bd.background, cbd.foreground);
    EXPECT_EQ(complement(complement(m)), m);
    for (std::size_t i = 0; i < m.size(); ++i) {
      if (bd.foreground[i]) {
        EXPECT_TRUE(m[i]);
      }
      if (bd.background[i]) {
        EXPECT_FALSE(m[i]);
      }
    }
    // monotone morphology
    const auto d = dilate_one(m);
    const auto de = dilate_one(erode_one(m));
    for (std::size_t i = 0; i < m.size(); ++i) {
      if (m[i]) {
        EXPECT_TRUE(d[i]);
      }
      if (de[i]) {
        EXPECT_TRUE(m[i]);
      }
    }
  }
}

TEST(Morphology, Examples) {
  const auto m = from_rows({{0, 0, 1, 0, 0}});
  EXPECT_EQ(as_ints(dilate_one(m)), (std::vector<int>{0, 1, 1, 1, 0}));
  EXPECT_EQ(as_ints(erode_one(m)), (std::vector<int>{0, 0, 0, 0, 0}));
  const BinaryMask full(GridShape(3, 3), true);
  EXPECT_EQ(dilate_one(full), full);
}

TEST(Dice, Examples) {
  const auto a = from_rows({{0, 0, 1, 0, 0}});
  const auto b = from_rows({{0, 1, 1, 1, 0}});
  EXPECT_DOUBLE_EQ(dice(b, b), 1.0);
  EXPECT_DOUBLE_EQ(dice(a, b), 0.5);
  EXPECT_DOUBLE_EQ(dice(b, a), 0.5);
  EXPECT_DOUBLE_EQ(dice(from_rows({{1, 0}}), from_rows({{0, 1}})), 0.0);
  EXPECT_DOUBLE_EQ(dice(BinaryMask(GridShape(2, 2)), BinaryMask(GridShape(2, 2))), 1.0);
  EXPECT_THROW(dice(a, BinaryMask(GridShape(5, 1))), ShapeMismatch);
}

TEST(Aggregate, MajorityTieGoesToBackground) {
  const auto on = from_rows({{1}});
  const auto off = from_rows({{0}});
  const std::vector<BinaryMask> four{on, on, off, off};
  EXPECT_FALSE(aggregate(four, AggregateRule::majority)[0]);
  const std::vector<BinaryMask> three{on, on, off};
  EXPECT_TRUE(aggregate(three, AggregateRule::majority)[0]);
}

TEST(Aggregate, UnionAndIdentity) {
  const auto m = from_rows({{0, 1, 1}, {1, 0, 0}});
  const BinaryMask empty(m.shape());
  const std::vector<BinaryMask> pair{m, empty};
  EXPECT_EQ(aggregate(pair, AggregateRule::union_of), m);
  const std::vector<BinaryMask> same{m, m, m};
  EXPECT_EQ(aggregate(same, AggregateRule::majority), m);
  EXPECT_EQ(aggregate(same, AggregateRule::union_of), m);
}

TEST(Aggregate, OrderIndependent) {
  Pcg32 rng(5);
  const GridShape shape(6, 7);
  std::vector<BinaryMask> masks;
  for (int k = 0; k < 5; ++k) masks.push_back(oracle::random_mask(shape, 0.5, rng));
  const auto maj = aggregate(masks, AggregateRule::majority);
  const auto uni = aggregate(masks, AggregateRule::union_of);
  std::reverse(masks.begin(), masks.end());
  std::rotate(masks.begin(), masks.begin() + 2, masks.end());
  EXPECT_EQ(aggregate(masks, AggregateRule::majority), maj);
  EXPECT_EQ(aggregate(masks, AggregateRule::union_of), uni);
  const std::vector<BinaryMask> twice{uni, uni};
  EXPECT_EQ(aggregate(twice, AggregateRule::union_of), uni);
}

TEST(Aggregate, Errors) {
  EXPECT_THROW(aggregate(std::vector<BinaryMask>{}, AggregateRule::union_of), InvalidArgument);
  const std::vector<BinaryMask> mixed{BinaryMask(GridShape(2, 2)), BinaryMask(GridShape(2, 3))};
  EXPECT_THROW(aggregate(mixed, AggregateRule::majority), ShapeMismatch);
}

TEST(OneVsRest, ClassesPartitionTheGrid) {
  const GridShape shape(4, 4);
  std::vector<std::uint32_t> labels(shape.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto [z, r, c] = shape.coords(i);
    labels[i] = static_cast<std::uint32_t>((r + c) % 3);
  }
  const LabelField field(shape, 3, labels);
  std::vector<int> cover(shape.size(), 0);
  for (std::size_t cls = 0; cls < 3; ++cls) {
    const auto m = one_vs_rest(field, cls);
    for (std::size_t i = 0; i < m.size(); ++i) {
      EXPECT_EQ(m[i], labels[i] == cls);
      cover[i] += m[i];
    }
  }
  EXPECT_TRUE(std::all_of(cover.begin(), cover.end(), [](int c) { return c == 1; }));
  EXPECT_THROW(one_vs_rest(field, 3), InvalidArgument);

  const LabelField zeros(GridShape(2, 2), 2, {0, 0, 0, 0});
  EXPECT_TRUE(one_vs_rest(zeros, 1).empty());
  EXPECT_THROW(LabelField(GridShape(1, 2), 2, {0, 2}), InvalidArgument);
}

TEST(Threshold, InclusiveComparisons) {
  const GridShape shape(2, 2);
  EXPECT_TRUE(threshold(ScalarField(shape, 0.5), Compare::greater_equal, 0.5).full());
  EXPECT_TRUE(threshold(ScalarField(shape, 0.3), Compare::greater_equal, 0.5).empty());
  const ScalarField f(shape, {0.1, 0.5, 0.7, -2.0});
  const auto ge = threshold(f, Compare::greater_equal, 0.5);
  const auto le = threshold(f, Compare::less_equal, 0.5);
  EXPECT_EQ(as_ints(ge), (std::vector<int>{0, 1, 1, 0}));
  EXPECT_EQ(as_ints(le), (std::vector<int>{1, 1, 0, 1}));
  // together they cover the grid and overlap only where the value equals tau
  for (std::size_t i = 0; i < f.size(); ++i) {
    EXPECT_TRUE(ge[i] || le[i]);
    EXPECT_EQ(ge[i] && le[i], f[i] == 0.5);
  }
}

TEST(ScalarField, RejectsNonFinite) {
  EXPECT_THROW(ScalarField(GridShape(1, 2), {0.0, std::nan("")}), InvalidArgument);
  EXPECT_THROW(ScalarField(GridShape(1, 2), std::vector<double>{0.0}), ShapeMismatch);
}

}  // namespace
}  // namespace segnoise
