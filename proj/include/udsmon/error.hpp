#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace udsmon {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class MalformedFrame : public Error {
public:
    using Error::Error;
};

class NotAResponse : public Error {
public:
    using Error::Error;
};

class NoContextDefined : public Error {
public:
    using Error::Error;
};

class TopologyError : public Error {
public:
    using Error::Error;
};

class LookupError : public Error {
public:
    using Error::Error;
};

class PreconditionError : public Error {
public:
    using Error::Error;
};

// Raised when a contextual check has no store snapshot for the vehicle.
class ContextUnavailable : public Error {
public:
    using Error::Error;
};

// File parse failure; carries the file and 1-based line number.
class ParseError : public Error {
public:
    ParseError(std::string path, std::size_t line, const std::string &what)
        : Error(path + ":" + std::to_string(line) + ": " + what),
          path_(std::move(path)),
          line_(line) {}

    const std::string &path() const noexcept { return path_; }
    std::size_t line() const noexcept { return line_; }

private:
    std::string path_;
    std::size_t line_;
};

} // namespace udsmon
