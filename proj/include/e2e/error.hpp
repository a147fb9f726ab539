#pragma once

#include <stdexcept>
#include <string>

namespace e2e {

// Base of every recoverable failure raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operand dimensions do not agree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// An argument violates a documented precondition (bad one-hot row, zero trials, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

// NaN/Inf reached a loss or gradient.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Inconsistent configuration (pilot presence, channel/system pairing, config keys).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Checkpoint or CSV I/O failure; message carries the path.
class IoError : public Error {
 public:
  using Error::Error;
};

// Coherent demodulation with a zero channel estimate.
class DegenerateChannelError : public Error {
 public:
  using Error::Error;
};

// Someone asked the real channel for a gradient. This is a programming error,
// not a runtime condition, hence logic_error.
class NoGradientError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace e2e
