#pragma once

#include <stdexcept>
#include <string>

namespace overlapctl {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file (bad row, non-numeric feature, unknown format token).
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Label column problems: not exactly two classes, class-count tie without an
/// explicit positive label, or a designated label absent from the data.
class LabelError : public Error {
 public:
  using Error::Error;
};

/// Fold planning cannot satisfy the per-fold minority guarantee.
class FoldError : public Error {
 public:
  using Error::Error;
};

/// Vector/matrix dimensions do not line up.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Too few instances to estimate the statistics a kernel needs.
class DegenerateError : public Error {
 public:
  using Error::Error;
};

/// An under-sampler would empty the majority class.
class ExhaustionError : public Error {
 public:
  using Error::Error;
};

/// A parameter is outside the range the data supports.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace overlapctl
