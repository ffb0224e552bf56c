#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace fsflow {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation
/// (parameter outside the knot range, zero reference mass, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Degenerate geometry: zero-length tangent, zero-length faces,
/// direction vector tangential to the surface.
class SingularityError : public Error {
 public:
  using Error::Error;
};

/// Least-squares fit with rank-deficient normal equations.
class FitError : public Error {
 public:
  using Error::Error;
};

/// Invalid or inconsistent configuration. Carries the offending key
/// and, for file input, the line number (0 when not applicable).
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& msg, std::string key = {}, int line = 0)
      : Error(msg), key_(std::move(key)), line_(line) {}
  const std::string& key() const noexcept { return key_; }
  int line() const noexcept { return line_; }

 private:
  std::string key_;
  int line_;
};

/// Nonpositive Jacobian somewhere in the mesh.
class TangledMeshError : public Error {
 public:
  explicit TangledMeshError(const std::string& msg, double time = 0.0)
      : Error(msg), time_(time) {}
  double time() const noexcept { return time_; }
  void set_time(double t) noexcept { time_ = t; }

 private:
  double time_;
};

/// Newton iteration hit its iteration limit.
class NonconvergenceError : public Error {
 public:
  NonconvergenceError(const std::string& msg, std::vector<double> history, double time = 0.0)
      : Error(msg), history_(std::move(history)), time_(time) {}
  const std::vector<double>& residual_history() const noexcept { return history_; }
  double time() const noexcept { return time_; }

 private:
  std::vector<double> history_;
  double time_;
};

/// File input/output failures, including corrupt or mismatched checkpoints.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace fsflow
