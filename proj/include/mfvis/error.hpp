#pragma once

#include <stdexcept>
#include <string>

namespace mfvis {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad user input: invalid spec, config, or precondition.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Wrong magic bytes or an unparseable header.
class FormatError : public Error {
public:
    using Error::Error;
};

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

class TruncatedPayload : public Error {
public:
    using Error::Error;
};

/// Non-finite loss during optimization.
class DivergenceError : public Error {
public:
    using Error::Error;
};

}  // namespace mfvis
