#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace finsler {

/// Parse failure with a 1-based source position and the token set the
/// parser would have accepted at that point.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& message, int line, int column,
             std::vector<std::string> expected = {})
      : std::runtime_error(message + " (line " + std::to_string(line) +
                           ", column " + std::to_string(column) + ")"),
        line_(line),
        column_(column),
        expected_(std::move(expected)) {}

  int line() const { return line_; }
  int column() const { return column_; }
  const std::vector<std::string>& expected() const { return expected_; }

 private:
  int line_;
  int column_;
  std::vector<std::string> expected_;
};

/// Numeric domain failure during expression evaluation; carries the printed
/// form of the offending subexpression.
class EvalError : public std::runtime_error {
 public:
  EvalError(const std::string& message, std::string subexpr)
      : std::runtime_error(subexpr.empty() ? message
                                           : message + " in `" + subexpr + "`"),
        subexpr_(std::move(subexpr)) {}

  const std::string& subexpr() const { return subexpr_; }

 private:
  std::string subexpr_;
};

/// Invalid or inconsistent spec content: bad dimensions, unbound parameters,
/// empty sample regions, malformed files.
class SpecError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A construction is undefined because the quantity it divides by vanishes
/// (e.g., a frame along the mean torsion direction when the torsion is zero).
class DegenerateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Metric tensor unusable at a support element (singular or not
/// positive-definite); carries the offending minimum eigenvalue.
class MetricError : public std::runtime_error {
 public:
  MetricError(const std::string& message, double min_eigenvalue)
      : std::runtime_error(message + " (min eigenvalue " +
                           std::to_string(min_eigenvalue) + ")"),
        min_eigenvalue_(min_eigenvalue) {}

  double min_eigenvalue() const { return min_eigenvalue_; }

 private:
  double min_eigenvalue_;
};

}  // namespace finsler
