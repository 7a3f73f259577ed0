#pragma once

#include <stdexcept>
#include <string>

namespace framing {

// Every failure raised by the library derives from Error so callers (the CLI in
// particular) can report it with a single handler.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParseError : public Error {
public:
    using Error::Error;
};

class ValidationError : public Error {
public:
    ValidationError(std::string field, const std::string& what)
        : Error(what), field_(std::move(field)) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

class SizingError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

class FetchError : public Error {
public:
    FetchError(int status, const std::string& what) : Error(what), status_(status) {}
    // HTTP status of the last attempt, or -1 when no response was received.
    int status() const noexcept { return status_; }

private:
    int status_;
};

class BackoffExhaustedError : public FetchError {
public:
    using FetchError::FetchError;
};

class ShapeError : public Error {
public:
    using Error::Error;
};

class TrainingError : public Error {
public:
    TrainingError(int epoch, const std::string& what) : Error(what), epoch_(epoch) {}
    int epoch() const noexcept { return epoch_; }

private:
    int epoch_;
};

class DegenerateDataError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace framing
