#pragma once

#include <stdexcept>
#include <string>

namespace fedsim {

// Base class for everything thrown by this library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Caller violated an operation's preconditions (empty input, bad range, ...).
class UsageError : public Error {
public:
    using Error::Error;
};

// Incompatible parameter-vector layouts.
class StructuralError : public Error {
public:
    using Error::Error;
};

// Malformed data encountered at runtime (labels out of range, tau == 0, ...).
class DataError : public Error {
public:
    using Error::Error;
};

// Invalid experiment configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Object is in a state that does not admit the requested operation.
class StateError : public Error {
public:
    using Error::Error;
};

// Local training blew up (non-finite or runaway loss).
class DivergenceError : public Error {
public:
    DivergenceError(std::string collaborator_id, int round, const std::string& what)
        : Error(what), collaborator_id_(std::move(collaborator_id)), round_(round) {}

    const std::string& collaborator_id() const { return collaborator_id_; }
    int round() const { return round_; }

private:
    std::string collaborator_id_;
    int round_ = -1;
};

} // namespace fedsim
