#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace anisoflow {

// Base of every error raised by the library. `kind()` is the stable,
// machine-readable tag used by the CLI error object.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

// Shape mismatch, invariant violation or otherwise malformed argument.
// Carries every violation found, not just the first.
class InvalidInput : public Error {
 public:
  explicit InvalidInput(const std::string& message)
      : Error("invalid_input", message), details_{message} {}
  explicit InvalidInput(std::vector<std::string> details)
      : Error("invalid_input", join(details)), details_(std::move(details)) {}

  const std::vector<std::string>& details() const noexcept { return details_; }

 private:
  static std::string join(const std::vector<std::string>& items) {
    std::string out;
    for (const auto& item : items) {
      if (!out.empty()) out += "; ";
      out += item;
    }
    return out;
  }

  std::vector<std::string> details_;
};

class InvalidState : public Error {
 public:
  explicit InvalidState(const std::string& message) : Error("invalid_state", message) {}
};

class NumericalFailure : public Error {
 public:
  NumericalFailure(const std::string& message, double residual)
      : Error("numerical_failure", message), residual_(residual) {}

  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& message) : Error("io_error", message) {}
};

}  // namespace anisoflow
