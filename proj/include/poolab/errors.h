// Copyright 2026 The poolab Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef POOLAB_ERRORS_H_
#define POOLAB_ERRORS_H_

#include <stdexcept>
#include <string>

namespace poolab {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operand shapes do not agree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// A precondition of an API was violated by the caller.
class ContractError : public Error {
 public:
  using Error::Error;
};

// Invalid or inconsistent configuration (CLI exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed or inconsistent input data (CLI exit code 3).
class DataError : public Error {
 public:
  using Error::Error;
};

// Input sequence longer than the model supports.
class LengthError : public DataError {
 public:
  using DataError::DataError;
};

// Non-finite values during training (CLI exit code 4).
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace poolab

#endif  // POOLAB_ERRORS_H_
