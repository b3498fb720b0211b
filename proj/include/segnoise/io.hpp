#pragma once

// File formats.
//
// GTF1 container, all integers little-endian:
//   offset 0  magic "GTF1"
//   offset 4  dtype u8   (0 = u8 mask, 1 = f32)
//   offset 5  ndim  u8   (2 or 3)
//   offset 6  reserved u16 = 0
//   offset 8  dims  ndim x u32, ordered [depth,] height, width
//   then      payload, row-major
//
// PGM: binary P5, maxval 255. Loading marks values >= 128 as foreground;
// saving writes 255 / 0.

#include <bit>
#include <cctype>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "segnoise/grid.hpp"
#include "segnoise/sdf.hpp"

namespace segnoise::io {

enum class GtfType : std::uint8_t { u8 = 0, f32 = 1 };

namespace detail {

inline std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(path.string(), 0, "cannot open file");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError(path.string(), 0, "cannot open file for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError(path.string(), 0, "write failed");
}

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
}

inline std::uint32_t get_u32(const std::uint8_t* p) {
  return std::uint32_t{p[0]} | (std::uint32_t{p[1]} << 8) | (std::uint32_t{p[2]} << 16) |
         (std::uint32_t{p[3]} << 24);
}

inline std::vector<std::uint8_t> gtf_header(const GridShape& shape, GtfType type) {
  std::vector<std::uint8_t> out{'G', 'T', 'F', '1', static_cast<std::uint8_t>(type),
                                static_cast<std::uint8_t>(shape.ndim()), 0, 0};
  for (auto d : shape.dims()) put_u32(out, static_cast<std::uint32_t>(d));
  return out;
}

struct GtfView {
  GridShape shape;
  GtfType type;
  std::size_t payload_offset;
};

inline GtfView parse_gtf(const std::vector<std::uint8_t>& bytes, const std::string& name,
                         GtfType expected) {
  if (bytes.size() < 8) throw FormatError(name, bytes.size(), "truncated GTF header");
  if (std::memcmp(bytes.data(), "GTF1", 4) != 0) throw FormatError(name, 0, "bad magic, expected GTF1");
  const auto type = bytes[4];
  if (type > 1) throw FormatError(name, 4, "unknown dtype " + std::to_string(type));
  if (type != static_cast<std::uint8_t>(expected))
    throw FormatError(name, 4, std::string("dtype is ") + (type == 0 ? "u8" : "f32") + ", expected " +
                                   (expected == GtfType::u8 ? "u8" : "f32"));
  const auto ndim = bytes[5];
  if (ndim != 2 && ndim != 3) throw FormatError(name, 5, "ndim must be 2 or 3, got " + std::to_string(ndim));
  if (bytes[6] != 0 || bytes[7] != 0) throw FormatError(name, 6, "reserved field must be zero");
  const std::size_t header = 8 + 4 * std::size_t{ndim};
  if (bytes.size() < header) throw FormatError(name, bytes.size(), "truncated GTF dims");
  std::vector<std::size_t> dims;
  for (std::size_t k = 0; k < ndim; ++k) {
    const auto d = get_u32(bytes.data() + 8 + 4 * k);
    if (d == 0) throw FormatError(name, 8 + 4 * k, "zero extent");
    dims.push_back(d);
  }
  const auto shape = GridShape::from_dims(dims);
  const std::size_t elem = type == 0 ? 1 : 4;
  const std::size_t expected_len = header + shape.size() * elem;
  if (bytes.size() != expected_len)
    throw FormatError(name, std::min(bytes.size(), expected_len),
                      "payload length " + std::to_string(bytes.size() - header) + " does not match dims (" +
                          std::to_string(shape.size() * elem) + " bytes expected)");
  return {shape, static_cast<GtfType>(type), header};
}

}  // namespace detail

inline std::vector<std::uint8_t> encode_gtf(const BinaryMask& mask) {
  auto out = detail::gtf_header(mask.shape(), GtfType::u8);
  out.insert(out.end(), mask.bits().begin(), mask.bits().end());
  return out;
}

inline std::vector<std::uint8_t> encode_gtf(std::span<const double> values, const GridShape& shape) {
  auto out = detail::gtf_header(shape, GtfType::f32);
  out.reserve(out.size() + 4 * values.size());
  for (double v : values) detail::put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  return out;
}

inline BinaryMask decode_gtf_mask(const std::vector<std::uint8_t>& bytes, const std::string& name = "<memory>") {
  const auto view = detail::parse_gtf(bytes, name, GtfType::u8);
  std::vector<std::uint8_t> bits(bytes.begin() + static_cast<std::ptrdiff_t>(view.payload_offset), bytes.end());
  return BinaryMask(view.shape, std::move(bits));
}

inline ScalarField decode_gtf_field(const std::vector<std::uint8_t>& bytes, const std::string& name = "<memory>") {
  const auto view = detail::parse_gtf(bytes, name, GtfType::f32);
  std::vector<double> values(view.shape.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const std::size_t off = view.payload_offset + 4 * i;
    const float f = std::bit_cast<float>(detail::get_u32(bytes.data() + off));
    if (!std::isfinite(f)) throw FormatError(name, off, "non-finite value");
    values[i] = f;
  }
  return ScalarField(view.shape, std::move(values));
}

inline void save_mask_gtf(const BinaryMask& mask, const std::filesystem::path& path) {
  detail::write_file(path, encode_gtf(mask));
}

inline BinaryMask load_mask_gtf(const std::filesystem::path& path) {
  return decode_gtf_mask(detail::read_file(path), path.string());
}

/// Writes f32 logits (or any scalar field). Values are rounded to float.
inline void save_logits(const ScalarField& field, const std::filesystem::path& path) {
  detail::write_file(path, encode_gtf(field.values(), field.shape()));
}

inline ScalarField load_external_logits(const std::filesystem::path& path) {
  return decode_gtf_field(detail::read_file(path), path.string());
}

/// Any f32 GTF tensor, e.g. a synthetic image.
inline ScalarField load_field(const std::filesystem::path& path) { return load_external_logits(path); }

inline void save_sdf(const SignedDistanceField& phi, const std::filesystem::path& path) {
  detail::write_file(path, encode_gtf(phi.values(), phi.shape()));
}

inline SignedDistanceField load_sdf(const std::filesystem::path& path) {
  return SignedDistanceField(load_external_logits(path));
}

inline std::vector<std::uint8_t> encode_pgm(const BinaryMask& mask) {
  if (mask.shape().ndim() != 2) throw InvalidArgument("PGM holds 2D masks only");
  const std::string header = "P5\n" + std::to_string(mask.shape().width()) + " " +
                             std::to_string(mask.shape().height()) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  for (auto b : mask.bits()) out.push_back(b ? 255 : 0);
  return out;
}

inline BinaryMask decode_pgm(const std::vector<std::uint8_t>& bytes, const std::string& name = "<memory>") {
  std::size_t pos = 0;
  auto skip_space = [&] {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto read_int = [&](const char* what) {
    skip_space();
    const std::size_t start = pos;
    std::uint64_t v = 0;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) {
      v = v * 10 + (bytes[pos] - '0');
      if (v > 0xFFFFFFFFu) throw FormatError(name, start, std::string(what) + " too large");
      ++pos;
    }
    if (pos == start) throw FormatError(name, start, std::string("expected ") + what);
    return static_cast<std::size_t>(v);
  };
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') throw FormatError(name, 0, "bad magic, expected P5");
  pos = 2;
  const std::size_t width = read_int("width");
  const std::size_t height = read_int("height");
  const std::size_t maxval_pos = pos;
  const std::size_t maxval = read_int("maxval");
  if (maxval != 255) throw FormatError(name, maxval_pos, "maxval must be 255, got " + std::to_string(maxval));
  if (pos >= bytes.size() || !std::isspace(bytes[pos])) throw FormatError(name, pos, "expected whitespace after maxval");
  ++pos;
  if (width == 0 || height == 0) throw FormatError(name, 3, "zero extent");
  if (bytes.size() - pos != width * height)
    throw FormatError(name, pos, "payload length " + std::to_string(bytes.size() - pos) + ", expected " +
                                     std::to_string(width * height));
  GridShape shape(height, width);
  std::vector<std::uint8_t> bits(width * height);
  for (std::size_t i = 0; i < bits.size(); ++i) bits[i] = bytes[pos + i] >= 128 ? 1 : 0;
  return BinaryMask(shape, std::move(bits));
}

inline void save_mask_pgm(const BinaryMask& mask, const std::filesystem::path& path) {
  detail::write_file(path, encode_pgm(mask));
}

inline BinaryMask load_mask_pgm(const std::filesystem::path& path) {
  return decode_pgm(detail::read_file(path), path.string());
}

/// Loads a mask by extension (.pgm or .gtf).
inline BinaryMask load_mask(const std::filesystem::path& path) {
  if (path.extension() == ".pgm") return load_mask_pgm(path);
  if (path.extension() == ".gtf") return load_mask_gtf(path);
  throw FormatError(path.string(), 0, "unsupported mask extension (expected .pgm or .gtf)");
}

inline void save_mask(const BinaryMask& mask, const std::filesystem::path& path) {
  if (path.extension() == ".pgm") return save_mask_pgm(mask, path);
  if (path.extension() == ".gtf") return save_mask_gtf(mask, path);
  throw FormatError(path.string(), 0, "unsupported mask extension (expected .pgm or .gtf)");
}

/// Regular files in `dir` with one of the given extensions, sorted by name.
inline std::vector<std::filesystem::path> list_files(const std::filesystem::path& dir,
                                                     std::initializer_list<const char*> extensions) {
  if (!std::filesystem::is_directory(dir)) throw FormatError(dir.string(), 0, "not a directory");
  std::vector<std::filesystem::path> out;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    for (const char* ext : extensions)
      if (entry.path().extension() == ext) out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace segnoise::io
