#include <gtest/gtest.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <thread>

#include "oracles.hpp"
#include "segnoise/external.hpp"
#include "segnoise/io.hpp"

namespace fs = std::filesystem;

namespace segnoise {
namespace {

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("segnoise_io_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

template <class F>
FormatError format_error(F&& f) {
  try {
    f();
  } catch (const FormatError& e) {
    return e;
  }
  ADD_FAILURE() << "no FormatError thrown";
  return FormatError("", 0, "");
}

TEST(Gtf, HeaderLayout) {
  const auto bytes = io::encode_gtf(BinaryMask(GridShape(2, 3, 5), true));
  ASSERT_EQ(bytes.size(), 8u + 12u + 30u);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "GTF1");
  EXPECT_EQ(bytes[4], 0);
  EXPECT_EQ(bytes[5], 3);
  EXPECT_EQ(bytes[6], 0);
  EXPECT_EQ(bytes[7], 0);
  EXPECT_EQ(bytes[8], 2);
  EXPECT_EQ(bytes[12], 3);
  EXPECT_EQ(bytes[16], 5);
  EXPECT_EQ(bytes[20], 1);
}

TEST(Gtf, MaskRoundTripIsBitExact) {
  Pcg32 rng(1);
  for (int t = 0; t < 30; ++t) {
    const GridShape shape = t % 3 ? GridShape(1 + rng.below(12), 1 + rng.below(12))
                                  : GridShape(1 + rng.below(5), 1 + rng.below(5), 1 + rng.below(5));
    const auto m = oracle::random_mask(shape, 0.5, rng);
    const auto bytes = io::encode_gtf(m);
    const auto back = io::decode_gtf_mask(bytes);
    EXPECT_EQ(back, m);
    EXPECT_EQ(io::encode_gtf(back), bytes);
  }
}

TEST(Gtf, FieldRoundTripIsBitExact) {
  Pcg32 rng(2);
  const GridShape shape(7, 9);
  std::vector<double> values(shape.size());
  for (auto& v : values) v = static_cast<float>(100.0 * rng.normal());
  const auto bytes = io::encode_gtf(values, shape);
  const auto field = io::decode_gtf_field(bytes);
  for (std::size_t i = 0; i < values.size(); ++i) EXPECT_EQ(field[i], values[i]);
  EXPECT_EQ(io::encode_gtf(field.values(), shape), bytes);
}

TEST(Gtf, SdfFileRoundTrip) {
  const auto dir = scratch("sdf");
  const auto phi = signed_distance(disk_mask(GridShape(12, 14), 6, 7, 4));
  io::save_sdf(phi, dir / "phi.gtf");
  EXPECT_EQ(io::load_sdf(dir / "phi.gtf"), phi);
  fs::remove_all(dir);
}

TEST(Gtf, BadMagicReportsOffsetZero) {
  auto bytes = io::encode_gtf(BinaryMask(GridShape(2, 2), false));
  bytes[1] = 'X';
  const auto e = format_error([&] { io::decode_gtf_mask(bytes, "m.gtf"); });
  EXPECT_EQ(e.offset(), 0u);
  EXPECT_EQ(e.file(), "m.gtf");
  EXPECT_NE(std::string(e.what()).find("m.gtf"), std::string::npos);
}

TEST(Gtf, DtypeMismatch) {
  const auto mask_bytes = io::encode_gtf(BinaryMask(GridShape(2, 2), true));
  const auto e = format_error([&] { io::decode_gtf_field(mask_bytes); });
  EXPECT_EQ(e.offset(), 4u);
  EXPECT_NE(std::string(e.what()).find("dtype"), std::string::npos);
  const std::vector<double> v(4, 1.0);
  EXPECT_EQ(format_error([&] { io::decode_gtf_mask(io::encode_gtf(v, GridShape(2, 2))); }).offset(), 4u);
}

TEST(Gtf, StructuralErrors) {
  const auto good = io::encode_gtf(BinaryMask(GridShape(2, 2), true));
  auto ndim = good;
  ndim[5] = 4;
  EXPECT_EQ(format_error([&] { io::decode_gtf_mask(ndim); }).offset(), 5u);
  auto reserved = good;
  reserved[7] = 1;
  EXPECT_EQ(format_error([&] { io::decode_gtf_mask(reserved); }).offset(), 6u);
  auto shortened = good;
  shortened.pop_back();
  EXPECT_EQ(format_error([&] { io::decode_gtf_mask(shortened); }).offset(), shortened.size());
  auto longer = good;
  longer.push_back(0);
  format_error([&] { io::decode_gtf_mask(longer); });
  std::vector<double> v(4, 1.0);
  auto nan = io::encode_gtf(v, GridShape(2, 2));
  const auto qnan = std::bit_cast<std::uint32_t>(std::numeric_limits<float>::quiet_NaN());
  for (int k = 0; k < 4; ++k) nan[16 + 4 + k] = static_cast<std::uint8_t>(qnan >> (8 * k));
  EXPECT_EQ(format_error([&] { io::decode_gtf_field(nan); }).offset(), 20u);
}

TEST(Pgm, RoundTripAndThreshold) {
  Pcg32 rng(3);
  const auto m = oracle::random_mask(GridShape(9, 13), 0.5, rng);
  const auto bytes = io::encode_pgm(m);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 2), "P5");
  EXPECT_EQ(io::decode_pgm(bytes), m);

  const std::string raw = "P5\n# comment\n3 1\n255\n";
  std::vector<std::uint8_t> grey(raw.begin(), raw.end());
  for (std::uint8_t v : {std::uint8_t{127}, std::uint8_t{128}, std::uint8_t{255}}) grey.push_back(v);
  const auto t = io::decode_pgm(grey);
  EXPECT_EQ(oracle::as_ints(t), (std::vector<int>{0, 1, 1}));
}

TEST(Pgm, Errors) {
  const std::string p2 = "P2\n1 1\n255\n0";
  EXPECT_THROW(io::decode_pgm({p2.begin(), p2.end()}), FormatError);
  const std::string maxval = "P5\n1 1\n65535\n";
  std::vector<std::uint8_t> b(maxval.begin(), maxval.end());
  b.push_back(0);
  b.push_back(0);
  EXPECT_THROW(io::decode_pgm(b), FormatError);
  const std::string truncated = "P5\n4 4\n255\n";
  EXPECT_THROW(io::decode_pgm({truncated.begin(), truncated.end()}), FormatError);
}

TEST(Pgm, GtfConversionIsLossless) {
  const auto dir = scratch("convert");
  Pcg32 rng(4);
  for (int t = 0; t < 10; ++t) {
    const auto m = oracle::random_mask(GridShape(1 + rng.below(16), 1 + rng.below(16)), 0.5, rng);
    io::save_mask(m, dir / "a.pgm");
    io::save_mask(io::load_mask(dir / "a.pgm"), dir / "b.gtf");
    io::save_mask(io::load_mask(dir / "b.gtf"), dir / "c.pgm");
    EXPECT_EQ(io::load_mask(dir / "c.pgm"), m);
    EXPECT_EQ(io::detail::read_file(dir / "a.pgm"), io::detail::read_file(dir / "c.pgm"));
  }
  EXPECT_THROW(io::save_mask(BinaryMask(GridShape(2, 2, 2), true), dir / "x.pgm"), InvalidArgument);
  EXPECT_THROW(io::load_mask(dir / "x.png"), FormatError);
  fs::remove_all(dir);
}

TEST(ListFiles, SortedAndFiltered) {
  const auto dir = scratch("list");
  for (auto n : {"b.pgm", "a.pgm", "c.gtf", "notes.txt"}) std::ofstream(dir / n) << "x";
  const auto files = io::list_files(dir, {".pgm", ".gtf"});
  ASSERT_EQ(files.size(), 3u);
  EXPECT_EQ(files[0].filename(), "a.pgm");
  EXPECT_EQ(files[1].filename(), "b.pgm");
  EXPECT_EQ(files[2].filename(), "c.gtf");
  fs::remove_all(dir);
}

TEST(ExternalSegmenter, Handshake) {
  const auto dir = scratch("external");
  const GridShape shape(6, 6);
  std::vector<ScalarField> train{ScalarField(shape, 0.25), ScalarField(shape, 0.75)}, val{ScalarField(shape, 0.5)};
  std::vector<BinaryMask> labels{disk_mask(shape, 3, 3, 1), disk_mask(shape, 2, 3, 2)};

  // Stand-in external trainer: for every label i, writes logits +1 on FG and -1 on BG,
  // and for the validation image a constant 7.
  std::thread trainer([&] {
    for (int round = 0; round < 2; ++round) {
      const auto rd = dir / ("round_" + std::to_string(round));
      while (!fs::exists(rd / "READY")) std::this_thread::sleep_for(std::chrono::milliseconds(2));
      for (std::size_t i = 0; i < 2; ++i) {
        const auto m = io::load_mask(rd / "labels" / indexed_name(i, ".pgm"));
        ScalarField f(shape);
        for (std::size_t s = 0; s < f.size(); ++s) f[s] = m[s] ? 1.0 : -1.0;
        io::save_logits(f, rd / "train_logits" / indexed_name(i, ".gtf"));
      }
      io::save_logits(ScalarField(shape, 7.0), rd / "val_logits" / indexed_name(0, ".gtf"));
      std::ofstream(rd / "DONE") << "ok\n";
    }
  });

  ExternalSegmenter ext(dir, train, val, {std::chrono::milliseconds(2), std::chrono::seconds(30), true});
  ext.fit(train, labels, 0);
  EXPECT_EQ(ext.rounds_completed(), 1u);
  EXPECT_EQ(ext.predict_mask(train[0]), labels[0]);
  EXPECT_EQ(ext.predict_mask(train[1]), labels[1]);
  EXPECT_EQ(ext.predict_logits(val[0])[0], 7.0);
  std::swap(labels[0], labels[1]);
  ext.fit(train, labels, 0);
  trainer.join();
  EXPECT_EQ(ext.rounds_completed(), 2u);
  EXPECT_EQ(ext.predict_mask(train[0]), labels[0]);
  EXPECT_THROW(ext.predict_logits(ScalarField(shape, 0.1)), Error);
  fs::remove_all(dir);
}

TEST(ExternalSegmenter, TimesOut) {
  const auto dir = scratch("timeout");
  const GridShape shape(3, 3);
  std::vector<ScalarField> train{ScalarField(shape, 0.0)};
  std::vector<BinaryMask> labels{disk_mask(shape, 1, 1, 1)};
  ExternalSegmenter ext(dir, train, {}, {std::chrono::milliseconds(1), std::chrono::milliseconds(20), false});
  EXPECT_THROW(ext.fit(train, labels, 0), Error);
  EXPECT_TRUE(fs::exists(dir / "round_0" / "labels" / "0000.gtf"));
  EXPECT_TRUE(fs::exists(dir / "round_0" / "READY"));
  fs::remove_all(dir);
}

}  // namespace
}  // namespace segnoise
