#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dlab {

/// Invalid experiment configuration (bad key, bad value, impossible geometry).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed on-disk container. Carries the byte offset where parsing failed.
class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& what, std::size_t byte_offset)
      : std::runtime_error(what + " (byte offset " + std::to_string(byte_offset) + ")"),
        byte_offset_(byte_offset) {}

  std::size_t byte_offset() const { return byte_offset_; }

 private:
  std::size_t byte_offset_;
};

/// Training aborted (non-finite loss or gradient). Carries phase/step diagnostics.
class TrainingError : public std::runtime_error {
 public:
  TrainingError(const std::string& what, int phase, long step)
      : std::runtime_error(what + " [phase " + std::to_string(phase) + ", step " +
                           std::to_string(step) + "]"),
        phase_(phase),
        step_(step) {}

  int phase() const { return phase_; }
  long step() const { return step_; }

 private:
  int phase_;
  long step_;
};

}  // namespace dlab
