#pragma once

#include <stdexcept>
#include <string>

namespace chiral {

/// Base class for every error raised by the library. `kind()` is a short
/// machine-readable tag used by the CLI error line.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}
  [[nodiscard]] const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

class InvalidParameter : public Error {
 public:
  explicit InvalidParameter(const std::string& what) : Error("invalid-parameter", what) {}
};

class SchemeShapeError : public Error {
 public:
  explicit SchemeShapeError(const std::string& what) : Error("scheme-shape", what) {}
};

class InvalidInput : public Error {
 public:
  explicit InvalidInput(const std::string& what) : Error("invalid-input", what) {}
};

/// Raised when the integrator cannot continue; carries the time reached.
class IntegrationError : public Error {
 public:
  IntegrationError(const std::string& what, double time)
      : Error("integration-failure", what + " at t=" + std::to_string(time) + " ns"),
        time_(time) {}
  [[nodiscard]] double time() const noexcept { return time_; }

 private:
  double time_;
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error("io", what) {}
};

/// Configuration error. `line`/`column` are 1-based, 0 when unknown; `key`
/// names the offending entry for semantic errors.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& what, std::string key = {}, int line = 0, int column = 0)
      : Error(key.empty() ? "config-syntax" : "config-semantic", format(what, key, line, column)),
        key_(std::move(key)),
        line_(line),
        column_(column) {}

  [[nodiscard]] const std::string& key() const noexcept { return key_; }
  [[nodiscard]] int line() const noexcept { return line_; }
  [[nodiscard]] int column() const noexcept { return column_; }

 private:
  static std::string format(const std::string& what, const std::string& key, int line, int column) {
    std::string out;
    if (line > 0) out += "line " + std::to_string(line) + ", column " + std::to_string(column) + ": ";
    if (!key.empty()) out += "key '" + key + "': ";
    return out + what;
  }

  std::string key_;
  int line_;
  int column_;
};

}  // namespace chiral
