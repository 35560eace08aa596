#pragma once

#include <stdexcept>
#include <string>

namespace micrometric {

// Numeric failure in an optimizer or kernel (non-finite objective, exhausted
// bracket, degenerate normal equations).
class NumericError : public std::runtime_error {
public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

// The closed-form scale factor requires strictly positive means, variances
// and covariance; anything else has no defined solution.
class ClosedFormUndefined : public NumericError {
public:
  explicit ClosedFormUndefined(const std::string& what) : NumericError(what) {}
};

// Operation invoked on an object in the wrong state, e.g. scoring with an
// unfitted calibration.
class InvalidState : public std::logic_error {
public:
  explicit InvalidState(const std::string& what) : std::logic_error(what) {}
};

// File contents not decodable: unknown magic, truncated payload, or a format
// feature we deliberately do not support.
class FormatError : public std::runtime_error {
public:
  explicit FormatError(const std::string& what) : std::runtime_error(what) {}
};

// Malformed structured text (manifest, calibration file); carries the
// offending line when known.
class ParseError : public FormatError {
public:
  explicit ParseError(const std::string& what, long line = -1)
      : FormatError(line >= 0 ? what + " (line " + std::to_string(line) + ")" : what),
        line_(line) {}

  long line() const { return line_; }

private:
  long line_ = -1;
};

}  // namespace micrometric
