#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace gapkit {

// Broad categories used by the CLI to pick an exit code.
enum class ErrorKind {
  kIo,          // environment / filesystem failures (exit 1)
  kFormat,      // bad magic, version, header fields
  kCorruption,  // truncated or trailing payload
  kValidation,  // invariant violations in user data
  kDegenerate,  // near-zero vector where a direction is required
  kParameter,   // out-of-range argument
  kSingular,    // normal equations cannot be solved
  kNotPsd,      // covariance could not be factored
  kInsufficientData,
  kExhausted,   // keyword sampler ran out of under-represented words
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

  // 1 for environment errors, 2 for anything the user can fix.
  int exit_code() const noexcept { return kind_ == ErrorKind::kIo ? 1 : 2; }

 private:
  ErrorKind kind_;
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorKind::kIo, what) {}
};

class FormatError : public Error {
 public:
  explicit FormatError(const std::string& what)
      : Error(ErrorKind::kFormat, what) {}
};

class CorruptionError : public Error {
 public:
  explicit CorruptionError(const std::string& what)
      : Error(ErrorKind::kCorruption, what) {}
};

class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what,
                           std::optional<std::size_t> row = std::nullopt)
      : Error(ErrorKind::kValidation, what), row_(row) {}

  std::optional<std::size_t> row() const noexcept { return row_; }

 private:
  std::optional<std::size_t> row_;
};

class DegenerateVectorError : public Error {
 public:
  explicit DegenerateVectorError(std::optional<std::size_t> row = std::nullopt);

  std::optional<std::size_t> row() const noexcept { return row_; }

 private:
  std::optional<std::size_t> row_;
};

class ParameterError : public Error {
 public:
  explicit ParameterError(const std::string& what)
      : Error(ErrorKind::kParameter, what) {}
};

class SingularityError : public Error {
 public:
  explicit SingularityError(const std::string& what)
      : Error(ErrorKind::kSingular, what) {}
};

class NotPsdError : public Error {
 public:
  explicit NotPsdError(const std::string& what)
      : Error(ErrorKind::kNotPsd, what) {}
};

class InsufficientDataError : public Error {
 public:
  explicit InsufficientDataError(const std::string& what)
      : Error(ErrorKind::kInsufficientData, what) {}
};

class ExhaustionError : public Error {
 public:
  explicit ExhaustionError(const std::string& what)
      : Error(ErrorKind::kExhausted, what) {}
};

}  // namespace gapkit
