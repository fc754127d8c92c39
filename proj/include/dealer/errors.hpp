#pragma once

#include <stdexcept>
#include <string>

namespace dealer {

// Invalid parameters or configuration. The message names the violated key.
class ConfigError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

// Argument outside the mathematical domain of a closed-form law.
class DomainError : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

// d >= 2c^2/L^2: the diffusion formula has no finite value.
class BubbleRegimeError : public DomainError {
public:
  using DomainError::DomainError;
};

class RangeError : public std::out_of_range {
public:
  using std::out_of_range::out_of_range;
};

// Input series too short or degenerate for an estimator.
class DataError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Root finder or series failed to converge.
class NumericalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Market price reached zero or below; the simulation is halted.
class PositivityError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// No transaction within the configured step budget.
class TimeoutError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace dealer
