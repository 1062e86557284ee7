#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace qctx {

// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// --- linear algebra / spectral ---------------------------------------------

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class NotHermitian : public Error {
 public:
  using Error::Error;
};

class DidNotConverge : public Error {
 public:
  using Error::Error;
};

class Incompatible : public Error {
 public:
  using Error::Error;
};

class OutOfRange : public Error {
 public:
  using Error::Error;
};

// --- scenario ingestion -----------------------------------------------------

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line, std::size_t column)
      : Error(what + " (line " + std::to_string(line) + ", column " +
              std::to_string(column) + ")"),
        line_(line),
        column_(column) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

class ValidationError : public Error {
 public:
  ValidationError(std::string label, const std::string& what)
      : Error(label + ": " + what), label_(std::move(label)) {}

  // Observable label, "rho", or the offending top-level key.
  const std::string& label() const noexcept { return label_; }

 private:
  std::string label_;
};

class NotPositive : public Error {
 public:
  explicit NotPositive(double min_eigenvalue)
      : Error("density operator has negative eigenvalue " +
              std::to_string(min_eigenvalue)),
        min_eigenvalue_(min_eigenvalue) {}

  double min_eigenvalue() const noexcept { return min_eigenvalue_; }

 private:
  double min_eigenvalue_;
};

class BadTrace : public Error {
 public:
  explicit BadTrace(double trace)
      : Error("density operator has trace " + std::to_string(trace)),
        trace_(trace) {}

  double trace() const noexcept { return trace_; }

 private:
  double trace_;
};

// --- contexts ---------------------------------------------------------------

class EmptySubset : public Error {
 public:
  using Error::Error;
};

class NotSubset : public Error {
 public:
  using Error::Error;
};

class IncompatibleMarginals : public Error {
 public:
  using Error::Error;
};

// --- global fit -------------------------------------------------------------

class ModelIncoherent : public Error {
 public:
  using Error::Error;
};

class NumericalFailure : public Error {
 public:
  using Error::Error;
};

class InfeasibleSystem : public Error {
 public:
  using Error::Error;
};

class NotInfeasible : public Error {
 public:
  using Error::Error;
};

class UnknownCell : public Error {
 public:
  using Error::Error;
};

// --- simulator --------------------------------------------------------------

class DegenerateDistribution : public Error {
 public:
  using Error::Error;
};

class ZeroConditional : public Error {
 public:
  using Error::Error;
};

class CalibrationFailure : public Error {
 public:
  CalibrationFailure(std::size_t run, std::size_t expected, std::size_t got)
      : Error("calibration failed on run " + std::to_string(run) +
              ": expected pointer " + std::to_string(expected) + ", got " +
              std::to_string(got)),
        run_(run) {}

  // 1-based index of the first offending run.
  std::size_t run() const noexcept { return run_; }

 private:
  std::size_t run_;
};

class EmptyInput : public Error {
 public:
  using Error::Error;
};

class MixedHandles : public Error {
 public:
  using Error::Error;
};

}  // namespace qctx
