#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace invreg {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class NonFiniteValue : public Error {
 public:
  using Error::Error;
};

class NotSymmetric : public Error {
 public:
  using Error::Error;
};

class NotPositiveDefinite : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Raised when a state or a right-hand side evaluation contains NaN/Inf.
class NonFiniteState : public Error {
 public:
  NonFiniteState(double time, const std::string& what)
      : Error(what), time_(time) {}
  double time() const noexcept { return time_; }

 private:
  double time_;
};

class MaxStepsExceeded : public Error {
 public:
  using Error::Error;
};

class EmptyTrajectory : public Error {
 public:
  using Error::Error;
};

class WindowTooLong : public Error {
 public:
  using Error::Error;
};

class DegenerateSeries : public Error {
 public:
  using Error::Error;
};

class UnknownSignal : public Error {
 public:
  using Error::Error;
};

class UnknownScenario : public Error {
 public:
  using Error::Error;
};

/// One problem found while reading a configuration tree.
struct SchemaIssue {
  std::string path;  // e.g. "overrides.t_end"
  std::string message;
};

class SchemaError : public Error {
 public:
  explicit SchemaError(std::vector<SchemaIssue> issues)
      : Error(format(issues)), issues_(std::move(issues)) {}
  const std::vector<SchemaIssue>& issues() const noexcept { return issues_; }

 private:
  static std::string format(const std::vector<SchemaIssue>& issues) {
    std::string out = "invalid configuration:";
    for (const auto& issue : issues) {
      out += "\n  " + issue.path + ": " + issue.message;
    }
    return out;
  }

  std::vector<SchemaIssue> issues_;
};

}  // namespace invreg
