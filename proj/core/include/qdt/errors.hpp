#pragma once

#include <stdexcept>
#include <string>

namespace qdt {

// Base class for all library errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A CSV row has the wrong column count or an unparseable field.
class MalformedRow : public Error {
public:
    using Error::Error;
};

// A domain invariant on the data does not hold (probability bounds,
// fair-trial equality, score consistency, ...).
class InvariantViolation : public Error {
public:
    using Error::Error;
};

class EmptyFile : public Error {
public:
    using Error::Error;
};

// trial_index is not strictly increasing within a block.
class OrderingError : public Error {
public:
    using Error::Error;
};

// A subject has fewer trials than requested folds.
class TooFewTrials : public Error {
public:
    using Error::Error;
};

// An argument lies outside the mathematical domain of an operation.
class DomainError : public Error {
public:
    using Error::Error;
};

class LengthMismatch : public Error {
public:
    using Error::Error;
};

class EmptyInput : public Error {
public:
    using Error::Error;
};

class NoCatchTrials : public Error {
public:
    using Error::Error;
};

class MissingParams : public Error {
public:
    using Error::Error;
};

class InvalidDescriptor : public Error {
public:
    using Error::Error;
};

} // namespace qdt
