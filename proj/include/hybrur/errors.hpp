#pragma once

#include <stdexcept>
#include <string>

namespace hybrur {

/// Raised when a caller breaks an operation's precondition (shape, range).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// File could not be read, decoded or written.
class IoError : public std::runtime_error {
 public:
  IoError(const std::string& path, const std::string& what)
      : std::runtime_error(path + ": " + what), path_(path) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

/// Invalid configuration document or key.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& what)
      : std::runtime_error(what), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

}  // namespace hybrur
