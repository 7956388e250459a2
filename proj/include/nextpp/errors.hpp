#pragma once

#include <stdexcept>
#include <string>

namespace nextpp {

// Base of every error thrown by the library. The CLI maps the concrete
// subclasses onto exit codes (see tools/nextpp.cpp).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Violated precondition of an operation (wrong call, not bad data).
class ContractError : public Error {
public:
    using Error::Error;
};

class DimensionError : public ContractError {
public:
    using ContractError::ContractError;
};

class DomainError : public ContractError {
public:
    using ContractError::ContractError;
};

// Non-finite values produced during computation.
class NumericError : public Error {
public:
    using Error::Error;
};

class SamplingError : public NumericError {
public:
    using NumericError::NumericError;
};

class PredictionError : public NumericError {
public:
    using NumericError::NumericError;
};

// Malformed input files.
class ParseError : public Error {
public:
    using Error::Error;
};

// Well-formed input that breaks a data invariant.
class ValidationError : public Error {
public:
    using Error::Error;
};

class IncompatibleError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace nextpp
