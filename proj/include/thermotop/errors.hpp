#pragma once

#include <stdexcept>
#include <string>

namespace thermotop {

/// Root of every error raised by the library. The CLI maps subclasses to
/// process exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Thermal problem without any heat sink (no Dirichlet nodes, h = 0, no
/// radiation).
class IllPosedSystem : public Error {
 public:
  using Error::Error;
};

/// Elastic problem with unconstrained rigid-body modes.
class SingularSystem : public Error {
 public:
  using Error::Error;
};

class LinearSolverError : public Error {
 public:
  LinearSolverError(const std::string& what, double residual)
      : Error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

class NonConvergence : public Error {
 public:
  NonConvergence(const std::string& what, double last_residual)
      : Error(what), last_residual_(last_residual) {}
  double last_residual() const { return last_residual_; }

 private:
  double last_residual_;
};

/// Newton iterate left the physical range (non-positive absolute temperature).
class DivergedState : public Error {
 public:
  using Error::Error;
};

class DegenerateCell : public Error {
 public:
  using Error::Error;
};

class OptimizerStall : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  ConfigError(const std::string& what, int line = 0)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace thermotop
