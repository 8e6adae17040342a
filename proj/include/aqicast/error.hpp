#pragma once

#include <stdexcept>
#include <string>

namespace aqicast {

/// Process exit codes shared by the CLI and the pipeline runner.
enum class ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kConfig = 2,
  kData = 3,
  kConvergence = 4,
};

class Error : public std::runtime_error {
 public:
  Error(ExitCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ExitCode code() const noexcept { return code_; }

 private:
  ExitCode code_;
};

/// Invalid parameters, unknown names, malformed config files.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ExitCode::kConfig, what) {}
};

/// Anything wrong with the data itself: schema, empty input, too short, bad domain.
class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(ExitCode::kData, what) {}
};

class SchemaError : public DataError {
 public:
  explicit SchemaError(const std::string& what) : DataError(what) {}
};

class DomainError : public DataError {
 public:
  explicit DomainError(const std::string& what) : DataError(what) {}
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double violation)
      : Error(ExitCode::kConvergence, what), violation_(violation) {}

  /// Largest optimality-condition violation at the point where iteration stopped.
  double violation() const noexcept { return violation_; }

 private:
  double violation_;
};

/// Raised when preprocessing steps run out of order or on the wrong split.
class PipelineOrderError : public ConfigError {
 public:
  explicit PipelineOrderError(const std::string& what) : ConfigError(what) {}
};

}  // namespace aqicast
