#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace segmeta {

// All recoverable failures carry a short machine-readable code such as
// "BadMagic" or "ShapeMismatch". The CLI prints them as error[<code>]: msg.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& msg)
        : std::runtime_error(msg), code_(std::move(code)) {}

    const std::string& code() const { return code_; }

private:
    std::string code_;
};

// Bad inputs, malformed files, contract violations. CLI exit code 1.
class ValidationError : public Error {
public:
    using Error::Error;
};

// Filesystem-level failures. CLI exit code 2.
class IoError : public Error {
public:
    using Error::Error;
};

[[noreturn]] inline void fail(const std::string& code, const std::string& msg) {
    throw ValidationError(code, msg);
}

[[noreturn]] inline void fail_io(const std::string& code, const std::string& msg) {
    throw IoError(code, msg);
}

}  // namespace segmeta
