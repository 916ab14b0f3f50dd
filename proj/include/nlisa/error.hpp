#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace nlisa {

// Input that could not be read as a formula, triple file or config.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t position)
      : std::runtime_error(what + " (at " + std::to_string(position) + ")"), position_(position) {}

  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

// Well-formed input that is inconsistent with the loaded data: unknown
// symbols, dimension mismatches, missing files.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A formula outside the supported EFO1 fragment.
class UnsupportedQuery : public ParseError {
 public:
  using ParseError::ParseError;
};

}  // namespace nlisa
