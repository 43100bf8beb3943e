// include/sfl/numerics/errors.h

#pragma once

#include <stdexcept>
#include <string>

namespace sfl {

// Base class for every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// A mask row without any unmasked entry.
class InvalidMaskError : public Error {
 public:
  using Error::Error;
};

class StatsError : public Error {
 public:
  using Error::Error;
};

class InputTooShortError : public Error {
 public:
  using Error::Error;
};

class InfeasibleAlignmentError : public Error {
 public:
  InfeasibleAlignmentError(const std::string &what, std::size_t required)
      : Error(what), required_length_(required) {}
  std::size_t required_length() const { return required_length_; }

 private:
  std::size_t required_length_;
};

class SearchError : public Error {
 public:
  using Error::Error;
};

class UnsupportedVariantError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

// A metric whose denominator is zero (WER of an empty reference).
class UndefinedMetricError : public Error {
 public:
  using Error::Error;
};

}  // namespace sfl
