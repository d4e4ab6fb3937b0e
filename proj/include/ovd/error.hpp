#pragma once

#include <stdexcept>
#include <string>

namespace ovd {

/// Coarse failure class; the CLI maps these to exit codes.
enum class ErrorClass { Usage, Data, Numerical };

/// Exception carrying a machine-parseable code ("OutOfBounds",
/// "ShapeMismatch", ...) alongside the human-readable message.
class Error : public std::runtime_error {
 public:
  Error(ErrorClass cls, std::string code, const std::string& message)
      : std::runtime_error(code + ": " + message),
        cls_(cls),
        code_(std::move(code)) {}

  ErrorClass error_class() const { return cls_; }
  const std::string& code() const { return code_; }

  static Error usage(const std::string& msg) {
    return {ErrorClass::Usage, "UsageError", msg};
  }
  static Error data(std::string code, const std::string& msg) {
    return {ErrorClass::Data, std::move(code), msg};
  }
  static Error numerical(std::string code, const std::string& msg) {
    return {ErrorClass::Numerical, std::move(code), msg};
  }

 private:
  ErrorClass cls_;
  std::string code_;
};

}  // namespace ovd
