#include <gtest/gtest.h>

#include <cmath>

#include "segnoise/harness.hpp"

namespace segnoise {
namespace {

TEST(Synth, DeterministicPerSeed) {
  SynthSpec spec;
  spec.count = 4;
  spec.noise_sigma = 0.2;
  spec.blur_sigma = 1.0;
  spec.seed = 11;
  const auto a = synth_dataset(spec);
  const auto b = synth_dataset(spec);
  EXPECT_EQ(a.images, b.images);
  EXPECT_EQ(a.clean_masks, b.clean_masks);
  spec.seed = 12;
  EXPECT_NE(synth_dataset(spec).clean_masks, a.clean_masks);
}

TEST(Synth, PrefixStable) {
  SynthSpec spec;
  spec.count = 3;
  spec.seed = 5;
  const auto small = synth_dataset(spec);
  spec.count = 6;
  const auto large = synth_dataset(spec);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(small.clean_masks[i], large.clean_masks[i]);
}

TEST(Synth, NoiselessImageIsScaledMask) {
  for (auto family : {ShapeFamily::disks, ShapeFamily::ellipses}) {
    SynthSpec spec;
    spec.count = 5;
    spec.family = family;
    spec.contrast = 2.5;
    const auto d = synth_dataset(spec);
    for (std::size_t n = 0; n < spec.count; ++n) {
      const auto& m = d.clean_masks[n];
      const auto bd = boundaries(m);
      EXPECT_FALSE(bd.foreground.empty());
      EXPECT_FALSE(bd.background.empty());
      for (std::size_t i = 0; i < m.size(); ++i) EXPECT_EQ(d.images[n][i], m[i] ? 2.5 : 0.0);
      // shapes keep a margin from the grid edge
      const auto& s = m.shape();
      for (std::size_t i = 0; i < m.size(); ++i) {
        const auto [z, r, c] = s.coords(i);
        if (r < 2 || c < 2 || r + 2 >= s.height() || c + 2 >= s.width()) EXPECT_FALSE(m[i]);
      }
    }
  }
}

TEST(Synth, HolesAreInteriorAndRound) {
  SynthSpec spec;
  spec.count = 6;
  spec.holes = {2, 2.0};
  spec.seed = 3;
  const auto d = synth_dataset(spec);
  ASSERT_EQ(d.holed_masks.size(), spec.count);
  for (std::size_t n = 0; n < spec.count; ++n) {
    const auto phi = signed_distance(d.clean_masks[n]);
    std::size_t carved = 0;
    for (std::size_t i = 0; i < phi.size(); ++i) {
      EXPECT_LE(d.holed_masks[n][i], d.clean_masks[n][i]);
      if (d.clean_masks[n][i] && !d.holed_masks[n][i]) {
        ++carved;
        EXPECT_LE(phi[i], -2.0) << "hole touches the outer boundary layer";
      }
    }
    EXPECT_GE(carved, 13u);  // one digital disk of radius 2
  }
}

TEST(Synth, Validation) {
  SynthSpec spec;
  spec.height = 8;
  EXPECT_THROW(synth_dataset(spec), InvalidArgument);
  spec = {};
  spec.count = 0;
  EXPECT_THROW(synth_dataset(spec), InvalidArgument);
  spec = {};
  spec.holes = {1, 40.0};
  EXPECT_THROW(synth_dataset(spec), InvalidArgument);
}

BinaryMask disk64() { return disk_mask(GridShape(64, 64), 31.5, 31.5, 16); }

TEST(Lemma1, RegimesAgreeWithBayesMask) {
  for (auto [t1, t2] : {std::pair{0.7, 0.9}, std::pair{0.2, 0.8}, std::pair{0.5, 0.5}}) {
    Lemma1Config cfg;
    cfg.theta1 = t1;
    cfg.theta2 = t2;
    cfg.samples = 10000;
    cfg.seed = 4;
    const auto r = verify_lemma1(disk64(), cfg);
    EXPECT_TRUE(r.passed) << t1 << "," << t2;
    EXPECT_EQ(r.get("agreement"), 1.0);
    EXPECT_GT(r.get("decided_fraction"), 0.9);
  }
}

TEST(Lemma1, Errors) {
  Lemma1Config cfg;
  cfg.samples = 100;
  EXPECT_THROW(verify_lemma1(disk64(), cfg), InvalidArgument);
  cfg.samples = 10000;
  EXPECT_THROW(verify_lemma1(BinaryMask(GridShape(8, 8), true), cfg), DegenerateMask);
}

Theorem1Config small_theorem1() {
  Theorem1Config cfg;
  cfg.pool_side = 32;
  cfg.pool_size = 300;
  cfg.bound = {1.0, 20.0, 2.0, 0.05, 1024};
  cfg.trials = 100;
  cfg.seed = 9;
  return cfg;
}

TEST(Theorem1, ScaledRunPasses) {
  auto cfg = small_theorem1();
  cfg.validation_size = 150;
  const auto res = verify_theorem1(cfg);
  EXPECT_TRUE(res.report.passed);
  EXPECT_EQ(res.trials.size(), 100u);
  EXPECT_LE(res.report.get("ci_lower"), res.report.get("failure_rate"));
  EXPECT_GE(res.report.get("ci_upper"), res.report.get("failure_rate"));
  for (const auto& t : res.trials) EXPECT_EQ(t.failed, t.error > 3.0);
}

TEST(Theorem1, ExactOracleNeverFails) {
  auto cfg = small_theorem1();
  cfg.bound.eps0 = 0.0;
  cfg.validation_size = 1;
  const auto res = verify_theorem1(cfg);
  EXPECT_EQ(res.report.get("failures"), 0.0);
}

TEST(Theorem1, Deterministic) {
  auto cfg = small_theorem1();
  cfg.validation_size = 20;
  const auto a = verify_theorem1(cfg);
  cfg.threads = 3;
  const auto b = verify_theorem1(cfg);
  for (std::size_t t = 0; t < a.trials.size(); ++t) EXPECT_EQ(a.trials[t].error, b.trials[t].error);
  EXPECT_EQ(a.report.measurements.size(), b.report.measurements.size());
}

TEST(Theorem1, Errors) {
  auto cfg = small_theorem1();
  EXPECT_THROW(verify_theorem1(cfg), InvalidArgument);  // bound V exceeds the pool
  cfg.validation_size = 10;
  cfg.trials = 50;
  EXPECT_THROW(verify_theorem1(cfg), InvalidArgument);
  cfg = small_theorem1();
  cfg.validation_size = 10;
  cfg.bound.image_size = 4096;
  EXPECT_THROW(verify_theorem1(cfg), InvalidArgument);
}

PipelineConfig small_pipeline() {
  PipelineConfig cfg;
  cfg.data = {40, 24, 24, ShapeFamily::disks, 1.0, 0.2, 1.0, {}, 0};
  cfg.noise = preset("tiny-se");
  cfg.noise.steps = 3;
  cfg.val_count = 4;
  cfg.test_count = 10;
  cfg.model.epochs = 60;
  cfg.correction.max_iters = 2;
  cfg.seed = 1;
  return cfg;
}

TEST(Pipeline, RunsAndIsDeterministic) {
  const auto cfg = small_pipeline();
  const auto a = run_pipeline(cfg);
  const auto b = run_pipeline(cfg);
  ASSERT_TRUE(a.clean_dsc && a.noisy_dsc);
  EXPECT_EQ(*a.clean_dsc, *b.clean_dsc);
  EXPECT_EQ(a.sc_dsc, b.sc_dsc);
  EXPECT_GT(*a.clean_dsc, 0.8);
  EXPECT_LT(a.noisy_label_dsc, 1.0);
  EXPECT_GE(a.iterations.size(), 1u);
  EXPECT_LE(a.iterations.size(), 3u);
  EXPECT_LT(a.iterations[0].delta_hat, 0.0);  // expansion noise biases the SDF outward
  EXPECT_FALSE(a.hole_agreement);
}

TEST(Pipeline, HoleAgreementReported) {
  auto cfg = small_pipeline();
  cfg.data.holes = {1, 1.0};
  cfg.run_reference_arms = false;
  const auto r = run_pipeline(cfg);
  ASSERT_TRUE(r.hole_agreement);
  EXPECT_GE(*r.hole_agreement, 0.0);
  EXPECT_LE(*r.hole_agreement, 1.0);
  EXPECT_FALSE(r.clean_dsc);
}

TEST(Pipeline, Errors) {
  auto cfg = small_pipeline();
  cfg.val_count = 30;
  cfg.test_count = 10;
  EXPECT_THROW(run_pipeline(cfg), InvalidArgument);
  cfg = small_pipeline();
  cfg.val_used = 5;
  EXPECT_THROW(run_pipeline(cfg), InvalidArgument);
}

TEST(Sweep, RowsPerSetting) {
  auto cfg = small_pipeline();
  const std::vector<double> vs{1, 2};
  const auto rows = sweep(SweepKind::val_size, vs, cfg);
  ASSERT_EQ(rows.size(), 6u);
  EXPECT_EQ(rows[0].arm, "clean");
  EXPECT_EQ(rows[3].test_dsc, rows[0].test_dsc);  // reference arms shared across V
  EXPECT_EQ(rows[4].test_dsc, rows[1].test_dsc);
  EXPECT_EQ(rows[5].setting, 2.0);
  const std::vector<double> none;
  EXPECT_THROW(sweep(SweepKind::noise_level, none, cfg), InvalidArgument);
}

}  // namespace
}  // namespace segnoise
