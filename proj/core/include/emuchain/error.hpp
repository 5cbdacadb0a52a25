#pragma once

#include <stdexcept>
#include <string>

namespace emuchain {

// Base class for every domain failure raised by the library. The CLI maps
// these to exit code 1; anything else is treated as a usage problem.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
    virtual const char* kind() const noexcept { return "error"; }
};

class InvalidArgument : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "invalid_argument"; }
};

class SimulatorError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "simulator"; }
};

class FitError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "fit"; }
};

class FormatError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "format"; }
};

class IntegrityError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "integrity"; }
};

}  // namespace emuchain
