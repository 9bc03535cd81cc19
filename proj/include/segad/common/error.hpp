#pragma once

#include <stdexcept>
#include <string>

namespace segad {

// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* kind() const noexcept { return "error"; }
};

// Input violates an operation's contract (malformed file, bad parameter).
class RejectedInput : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "rejected_input"; }
};

// Iterative solver stopped without meeting its tolerance.
class ConvergenceFailure : public Error {
 public:
  ConvergenceFailure(const std::string& what, double residual)
      : Error(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }
  const char* kind() const noexcept override { return "convergence_failure"; }

 private:
  double residual_;
};

// Serialized artifact carries an unknown format or version.
class SchemaMismatch : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "schema_mismatch"; }
};

// File could not be opened, read or written.
class IoError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "io_error"; }
};

}  // namespace segad
