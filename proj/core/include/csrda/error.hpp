#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace csrda {

// Base of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed or missing on-disk data. `subjects` names the offending paths or
// sample ids so callers can report them without parsing the message.
class DataError : public Error {
public:
    DataError(const std::string& what, std::vector<std::string> subjects = {})
        : Error(what), subjects_(std::move(subjects)) {}

    const std::vector<std::string>& subjects() const noexcept { return subjects_; }

private:
    std::vector<std::string> subjects_;
};

class ShapeError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

// Non-finite parameters, gradients or losses.
class NumericError : public Error {
public:
    using Error::Error;
};

}  // namespace csrda
