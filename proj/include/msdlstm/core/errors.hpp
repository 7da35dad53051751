#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace msd {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tensor extents do not line up for an operation.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Invalid hyperparameters or configuration combination.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// An argument lies outside its valid domain, e.g. negative rainfall.
class ValueError : public Error {
 public:
  using Error::Error;
};

// A non-finite value appeared. `op()` names the producing op, and `context()`
// carries the caller's location (gate name, parameter name, epoch/step).
class NumericError : public Error {
 public:
  NumericError(std::string op, std::string context)
      : Error(format(op, context)), op_(std::move(op)), context_(std::move(context)) {}

  const std::string& op() const { return op_; }
  const std::string& context() const { return context_; }

 private:
  static std::string format(const std::string& op, const std::string& context) {
    std::string msg = "non-finite value produced by " + op;
    if (!context.empty()) msg += " (" + context + ")";
    return msg;
  }

  std::string op_;
  std::string context_;
};

// Misuse of the recording tape, e.g. a second backward pass.
class TapeError : public Error {
 public:
  using Error::Error;
};

// Malformed binary payload. `offset()` is the byte position of the problem.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::uint64_t offset)
      : Error(what + " at byte offset " + std::to_string(offset)), offset_(offset) {}

  std::uint64_t offset() const { return offset_; }

 private:
  std::uint64_t offset_;
};

class IoError : public Error {
 public:
  IoError(const std::string& what, std::string path)
      : Error(what + ": " + path), path_(std::move(path)) {}

  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

}  // namespace msd
