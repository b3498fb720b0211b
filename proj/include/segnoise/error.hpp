#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace segnoise {

/// Base class for every error the library raises.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Two grids that must agree on shape do not.
class ShapeMismatch : public Error {
 public:
  using Error::Error;
};

/// A mask without an interface (all foreground or all background).
class DegenerateMask : public Error {
 public:
  using Error::Error;
};

/// No site of the predicted SDF falls into the bias band.
class EmptyBand : public Error {
 public:
  using Error::Error;
};

/// Bad argument or precondition violation on an input value.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Malformed file content. Carries the file name and byte offset.
class FormatError : public Error {
 public:
  FormatError(std::string file, std::uint64_t offset, const std::string& what)
      : Error(file + ": byte offset " + std::to_string(offset) + ": " + what),
        file_(std::move(file)),
        offset_(offset) {}

  const std::string& file() const noexcept { return file_; }
  std::uint64_t offset() const noexcept { return offset_; }

 private:
  std::string file_;
  std::uint64_t offset_;
};

}  // namespace segnoise
