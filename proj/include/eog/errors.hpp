#pragma once

#include <stdexcept>
#include <string>

namespace eog {

// Bad flags, bad config keys, inconsistent flag combinations. CLI exit code 1.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed input files, duplicate ids, dimension mismatches in data. Exit code 2.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Non-finite loss during training. Exit code 3.
struct DivergenceError : std::runtime_error {
  DivergenceError(int epoch, int batch, const std::string& what)
      : std::runtime_error("divergence at epoch " + std::to_string(epoch) +
                           ", batch " + std::to_string(batch) + ": " + what),
        epoch(epoch),
        batch(batch) {}
  int epoch;
  int batch;
};

}  // namespace eog
