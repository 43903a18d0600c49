#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace dynpanel {

// All library failures are thrown as Error. `code` is a stable machine-readable
// tag naming the violated invariant (e.g. "RaggedPanel", "NoSwitchers"); `kind`
// separates malformed input/config from in-sample numerical failures so callers
// can map them to distinct exit codes.
class Error : public std::runtime_error {
 public:
  enum class Kind { Data, Numerical };

  Error(Kind kind, std::string code, const std::string& message)
      : std::runtime_error(code + ": " + message), kind_(kind), code_(std::move(code)) {}

  Kind kind() const noexcept { return kind_; }
  const std::string& code() const noexcept { return code_; }

  static Error data(std::string code, const std::string& message) {
    return Error(Kind::Data, std::move(code), message);
  }
  static Error numerical(std::string code, const std::string& message) {
    return Error(Kind::Numerical, std::move(code), message);
  }

 private:
  Kind kind_;
  std::string code_;
};

}  // namespace dynpanel
