#pragma once

#include <stdexcept>
#include <string>

namespace disnn {

// Process exit codes used by the command-line tools.
enum class ExitCode : int {
  kOk = 0,
  kConfig = 2,
  kData = 3,
  kNoise = 4,
};

class Error : public std::runtime_error {
 public:
  Error(ExitCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ExitCode code() const noexcept { return code_; }

 private:
  ExitCode code_;
};

// Inconsistent or invalid parameters (dimension mismatch, bad moduli, ...).
class ParameterError : public Error {
 public:
  explicit ParameterError(const std::string& what)
      : Error(ExitCode::kConfig, "parameter error: " + what) {}
};

// Input value outside the domain of an operation.
class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what)
      : Error(ExitCode::kConfig, "domain error: " + what) {}
};

// Bad configuration file or flag combination.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what)
      : Error(ExitCode::kConfig, "config error: " + what) {}
};

// A lookup table that breaks the negacyclic constraint.
class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what)
      : Error(ExitCode::kConfig, "validation error: " + what) {}
};

// Files whose parameter lineage does not match.
class LineageError : public Error {
 public:
  explicit LineageError(const std::string& what)
      : Error(ExitCode::kConfig, "lineage error: " + what) {}
};

// Training diverged.
class TrainingError : public Error {
 public:
  explicit TrainingError(const std::string& what)
      : Error(ExitCode::kConfig, "training error: " + what) {}
};

// Missing, truncated or malformed input files.
class DataError : public Error {
 public:
  explicit DataError(const std::string& what)
      : Error(ExitCode::kData, "data error: " + what) {}
};

// Predicted ciphertext noise would exceed the decryption bound.
class NoiseBudgetError : public Error {
 public:
  explicit NoiseBudgetError(const std::string& what)
      : Error(ExitCode::kNoise, "noise budget error: " + what) {}
};

// Plaintext values would leave the message space.
class RangeError : public Error {
 public:
  explicit RangeError(const std::string& what)
      : Error(ExitCode::kNoise, "range error: " + what) {}
};

}  // namespace disnn
