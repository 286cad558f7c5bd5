#pragma once

#include <stdexcept>
#include <string>

namespace ndf {

/// Operand dimensions do not agree.
class shape_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Caller supplied an out-of-contract value (bad label, empty set, bad config).
class input_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A file on disk is malformed or truncated.
class format_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An update produced NaN or Inf.
class numeric_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ndf
