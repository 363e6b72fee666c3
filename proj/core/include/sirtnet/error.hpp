#pragma once

#include <stdexcept>
#include <string>

namespace sirtnet {

/// Input that violates an operation's preconditions (shape mismatch, bad
/// configuration value, stale activation record, ...).
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// File system or format failure; the message carries the offending path.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Training produced a non-finite loss.
class TrainingDiverged : public std::runtime_error {
 public:
  TrainingDiverged(std::size_t stage, std::size_t epoch, const std::string& what)
      : std::runtime_error(what), stage_(stage), epoch_(epoch) {}

  std::size_t stage() const noexcept { return stage_; }
  std::size_t epoch() const noexcept { return epoch_; }

 private:
  std::size_t stage_;
  std::size_t epoch_;
};

}  // namespace sirtnet
