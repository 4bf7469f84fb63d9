// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <stdexcept>
#include <string>

namespace latentem {

/// Base class for every error raised by this library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NegativeEntryError : Error {
    using Error::Error;
};
struct ZeroTableError : Error {
    using Error::Error;
};
/// An all-zero row or column; the message names the offending line.
struct ZeroLineError : Error {
    using Error::Error;
};
struct NotSquareError : Error {
    using Error::Error;
};
struct NotSymmetricError : Error {
    using Error::Error;
};
/// F has positive mass where the model assigns none. Signals a broken
/// model, deliberately not reported as an infinite divergence.
struct SupportMismatchError : Error {
    using Error::Error;
};
struct LambdaOutOfRangeError : Error {
    using Error::Error;
};
struct EmptyGroupError : Error {
    using Error::Error;
};
struct SquareOnlyError : Error {
    using Error::Error;
};
struct ZeroRowGroupError : Error {
    using Error::Error;
};
struct MarginMismatchError : Error {
    using Error::Error;
};
struct SymmetryViolationError : Error {
    using Error::Error;
};
struct InfeasibleWeightsError : Error {
    using Error::Error;
};
struct EmptyTextError : Error {
    using Error::Error;
};
struct UnmappableEncodingError : Error {
    using Error::Error;
};
struct ParseError : Error {
    using Error::Error;
};
struct IoError : Error {
    using Error::Error;
};
struct ConfigError : Error {
    using Error::Error;
};

}  // namespace latentem
