#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace acam {

/// Base of every error thrown by the simulator.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

class OutOfRange : public Error {
public:
    using Error::Error;
};

/// Zero-norm or otherwise numerically meaningless input.
class DegenerateInput : public Error {
public:
    using Error::Error;
};

class SingularSystem : public Error {
public:
    SingularSystem(const std::string& what, double condition_estimate)
        : Error(what), condition_estimate_(condition_estimate) {}

    double condition_estimate() const noexcept { return condition_estimate_; }

private:
    double condition_estimate_;
};

/// File or text parse failure. Line numbers are 1-based; 0 means "no line".
class ParseError : public Error {
public:
    ParseError(const std::string& source, std::size_t line, const std::string& msg)
        : Error(format(source, line, msg)), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    static std::string format(const std::string& source, std::size_t line, const std::string& msg) {
        std::string out = source.empty() ? std::string("<input>") : source;
        if (line > 0) out += ":" + std::to_string(line);
        return out + ": " + msg;
    }

    std::size_t line_;
};

}  // namespace acam
