#ifndef RANKDTE_ERRORS_HPP
#define RANKDTE_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace rankdte {

// Base class for all errors raised by the library.  The `code()` string is
// stable and machine-readable; the what() message carries context.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& msg)
      : std::runtime_error(msg), code_(std::move(code)) {}
  const std::string& code() const { return code_; }

 private:
  std::string code_;
};

struct RankDeficientError : Error {
  explicit RankDeficientError(const std::string& msg)
      : Error("RankDeficient", msg) {}
};

struct DegenerateVectorError : Error {
  explicit DegenerateVectorError(const std::string& msg)
      : Error("DegenerateVector", msg) {}
};

struct DegenerateRegressorError : Error {
  explicit DegenerateRegressorError(const std::string& msg)
      : Error("DegenerateRegressor", msg) {}
};

struct SchemaMismatchError : Error {
  explicit SchemaMismatchError(const std::string& msg)
      : Error("SchemaMismatch", msg) {}
};

struct EmptyGroupError : Error {
  explicit EmptyGroupError(const std::string& msg)
      : Error("EmptyGroup", msg) {}
};

struct ReplicateFailureError : Error {
  explicit ReplicateFailureError(const std::string& msg)
      : Error("ReplicateFailure", msg) {}
};

struct IoError : Error {
  explicit IoError(const std::string& msg) : Error("IoFailure", msg) {}
};

struct InvalidConfigError : Error {
  explicit InvalidConfigError(const std::string& msg)
      : Error("InvalidConfig", msg) {}
};

}  // namespace rankdte

#endif  // RANKDTE_ERRORS_HPP
