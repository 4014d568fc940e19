#pragma once

#include <stdexcept>
#include <string>

namespace orpa {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed environment, oracle, or parameter data.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// |X|·|Y|² exceeds the configured enumeration cap.
class EnumerationCapExceeded : public Error {
 public:
  using Error::Error;
};

/// Uncertainty radius rho is not strictly below the oracle margin delta.
class InadmissibleRadius : public Error {
 public:
  using Error::Error;
};

/// [p - rho, p + rho] is not contained in [0, 1].
class IntervalOutOfRange : public Error {
 public:
  using Error::Error;
};

/// Envelope parameter outside (0, 1/kappa).
class InvalidEnvelopeParam : public Error {
 public:
  using Error::Error;
};

/// An optimizer iterate picked up a NaN or infinity.
class NonFiniteIterate : public Error {
 public:
  using Error::Error;
};

/// Experiment configuration failed validation. The message names the field.
class ConfigInvalid : public Error {
 public:
  using Error::Error;
};

}  // namespace orpa
