#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fseg3d {

/// Raised when a precondition on an argument does not hold.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised by readers when a file deviates from its documented layout.
/// `location` is a byte offset for binary formats and a 1-based line number
/// for text formats.
class FormatError : public std::runtime_error {
 public:
  enum class Unit { kByteOffset, kLine };

  FormatError(const std::string& what, Unit unit, std::size_t location)
      : std::runtime_error(what + (unit == Unit::kByteOffset ? " (at byte offset " : " (at line ") +
                           std::to_string(location) + ")"),
        unit_(unit),
        location_(location) {}

  Unit unit() const { return unit_; }
  std::size_t location() const { return location_; }

 private:
  Unit unit_;
  std::size_t location_;
};

}  // namespace fseg3d
