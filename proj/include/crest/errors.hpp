#pragma once

#include <stdexcept>
#include <string>

namespace crest {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A caller broke an operation's precondition (stepping a finished episode, bad shapes).
class ContractError : public Error {
public:
    using Error::Error;
};

/// World generation could not satisfy its constraints.
class GenerationError : public Error {
public:
    using Error::Error;
};

/// Malformed input file.
class ParseError : public Error {
public:
    using Error::Error;
};

/// NaN or infinity reached the optimizer or the loss.
class NumericError : public Error {
public:
    using Error::Error;
};

}  // namespace crest
