#pragma once

#include <stdexcept>
#include <string>

namespace lccvqe {

/// Broad failure classes; the CLI maps each onto a distinct exit code.
enum class ErrorCategory : int {
  kInvalidArgument = 3,
  kSizeLimit = 4,
  kCapacity = 5,
  kParse = 6,
  kRetryExhausted = 7,
  kUnsupported = 8,
  kContract = 9,
  kIo = 10,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

struct InvalidArgument : Error {
  explicit InvalidArgument(const std::string& what)
      : Error(ErrorCategory::kInvalidArgument, what) {}
};

struct SizeLimitError : Error {
  explicit SizeLimitError(const std::string& what)
      : Error(ErrorCategory::kSizeLimit, what) {}
};

struct CapacityError : Error {
  explicit CapacityError(const std::string& what)
      : Error(ErrorCategory::kCapacity, what) {}
};

struct ParseError : Error {
  explicit ParseError(const std::string& what)
      : Error(ErrorCategory::kParse, what) {}
};

struct RetryExhausted : Error {
  explicit RetryExhausted(const std::string& what)
      : Error(ErrorCategory::kRetryExhausted, what) {}
};

struct Unsupported : Error {
  explicit Unsupported(const std::string& what)
      : Error(ErrorCategory::kUnsupported, what) {}
};

/// Internal inconsistency or a violated precondition on data produced by
/// this library (e.g. an untranspiled gate reaching the noisy engine).
struct ContractViolation : Error {
  explicit ContractViolation(const std::string& what)
      : Error(ErrorCategory::kContract, what) {}
};

struct IoError : Error {
  explicit IoError(const std::string& what)
      : Error(ErrorCategory::kIo, what) {}
};

}  // namespace lccvqe
