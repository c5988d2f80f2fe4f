#pragma once

#include <stdexcept>
#include <string>

namespace romsram {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidParams : public Error {
public:
    using Error::Error;
};

class NonConvergence : public Error {
public:
    using Error::Error;
};

class PreconditionViolation : public Error {
public:
    using Error::Error;
};

class OutOfRange : public Error {
public:
    using Error::Error;
};

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

class ModeStateMismatch : public Error {
public:
    using Error::Error;
};

/// No (v_ref, t_strobe) point separates the mode's cases with the required margin.
class CalibrationInfeasible : public Error {
public:
    CalibrationInfeasible(const std::string& what, double best_margin)
        : Error(what), best_margin_(best_margin) {}
    double best_margin() const { return best_margin_; }

private:
    double best_margin_;
};

class IoError : public Error {
public:
    using Error::Error;
};

/// Configuration or schema error. `line` is 1-based, 0 when unknown.
class ConfigError : public Error {
public:
    ConfigError(const std::string& what, int line = 0)
        : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
    int line() const { return line_; }

private:
    int line_;
};

}  // namespace romsram
