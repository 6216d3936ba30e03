#pragma once

#include <stdexcept>
#include <string>

namespace tce {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid argument shapes, ranges or orderings passed to an operation.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// A numerical kernel could not be built (bad configuration or non-finite values).
class ConstructionError : public Error {
 public:
  using Error::Error;
};

/// Factorization failure or non-finite result; the message names the offending quantity.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// A runtime contract between components was broken (e.g. trajectory/robot boundary mismatch).
class ContractError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace tce
