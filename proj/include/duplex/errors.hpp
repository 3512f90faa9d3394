#pragma once

#include <stdexcept>
#include <string>

namespace duplex {

// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// The basis matrix handed to invert() is numerically singular. `row` is a row
// left without an acceptable pivot and `position` the basis position of a
// dependent column; the caller repairs the basis (typically by putting the
// logical of `row` into `position`) and retries.
class SingularBasis : public Error {
 public:
  SingularBasis(int row, int position)
      : Error("singular basis: no acceptable pivot for row " + std::to_string(row)),
        row(row),
        position(position) {}
  int row;
  int position;
};

// A pivot magnitude fell below the acceptability floor.
class TinyPivot : public Error {
 public:
  explicit TinyPivot(double value)
      : Error("pivot too small: " + std::to_string(value)), value(value) {}
  double value;
};

// A product-form style update produced unacceptable growth; the caller should
// refactorize instead.
class FtFailure : public Error {
 public:
  explicit FtFailure(const std::string& what) : Error("update rejected: " + what) {}
};

// The update log outgrew its limit; solves refuse to run until refactorization.
class StaleFactors : public Error {
 public:
  StaleFactors() : Error("factorization is stale: refactorization required") {}
};

// Malformed model file.
class ParseError : public Error {
 public:
  ParseError(int line, const std::string& reason)
      : Error("parse error at line " + std::to_string(line) + ": " + reason), line(line) {}
  int line;
};

// A column's lower bound exceeds its upper bound.
class InconsistentBounds : public Error {
 public:
  InconsistentBounds(const std::string& col, double lo, double up)
      : Error("inconsistent bounds on column " + col + ": [" + std::to_string(lo) + ", " +
              std::to_string(up) + "]"),
        column(col) {}
  std::string column;
};

// A pricing weight that must be positive is not.
class NonPositiveWeight : public Error {
 public:
  NonPositiveWeight(int row, double value)
      : Error("non-positive pricing weight " + std::to_string(value) + " at row " +
              std::to_string(row)),
        row(row),
        value(value) {}
  int row;
  double value;
};

// Two run sets that must cover the same models do not.
class MismatchedSets : public Error {
 public:
  explicit MismatchedSets(const std::string& what) : Error("mismatched model sets: " + what) {}
};

}  // namespace duplex
