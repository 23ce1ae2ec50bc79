#pragma once

#include <stdexcept>
#include <string>

namespace sdmvae {

// Error taxonomy. Everything derives from std::runtime_error so the CLI can
// report any failure uniformly while tests can still match the exact kind.

// Dimension mismatch between operands; message carries both shapes.
struct ShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Value outside an operation's documented domain (log of non-positive,
// negative power, division by zero, ...).
struct DomainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Caller violated a precondition (backward on a non-scalar, odd window
// length, optimizer stepped without gradients, ...).
struct ContractError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Non-finite values showed up where finite ones are required.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// File / format problems (unreadable WAV, malformed checkpoint, ...).
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Invalid experiment configuration; message names the offending field.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace sdmvae
