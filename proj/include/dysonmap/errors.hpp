#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace dysonmap {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidDimension : public Error {
public:
    using Error::Error;
};

/// Raised when a matrix exponential cannot be represented (norm too large).
class RangeError : public Error {
public:
    using Error::Error;
};

class UndefinedNorm : public Error {
public:
    using Error::Error;
};

/// A linear solve whose reciprocal condition estimate fell below the floor.
class IllConditioned : public Error {
public:
    IllConditioned(const std::string& what, double rcond, double time)
        : Error(what), rcond_(rcond), time_(time) {}

    double rcond() const noexcept { return rcond_; }
    /// NaN when the solve was not tied to a trajectory sample.
    double time() const noexcept { return time_; }

private:
    double rcond_;
    double time_;
};

/// The integrator refuses a step size that violates ‖H‖·dt ≤ guard.
class StepSizeRefused : public Error {
public:
    StepSizeRefused(const std::string& what, long recommended_steps)
        : Error(what), recommended_steps_(recommended_steps) {}

    long recommended_steps() const noexcept { return recommended_steps_; }

private:
    long recommended_steps_;
};

class Divergence : public Error {
public:
    Divergence(const std::string& what, double time) : Error(what), time_(time) {}
    double time() const noexcept { return time_; }

private:
    double time_;
};

class PreconditionFailed : public Error {
public:
    using Error::Error;
};

/// Scenario constraints cannot be met; `failed` lists the offending checks.
class ScenarioInvalid : public Error {
public:
    ScenarioInvalid(const std::string& what, std::vector<std::string> failed)
        : Error(what), failed_(std::move(failed)) {}

    const std::vector<std::string>& failed_checks() const noexcept { return failed_; }

private:
    std::vector<std::string> failed_;
};

/// Configuration or scenario-file problem. `key_path` is empty for syntax errors.
class ConfigError : public Error {
public:
    ConfigError(const std::string& what, std::string key_path = {}, int line = -1, int column = -1)
        : Error(what), key_path_(std::move(key_path)), line_(line), column_(column) {}

    const std::string& key_path() const noexcept { return key_path_; }
    int line() const noexcept { return line_; }
    int column() const noexcept { return column_; }

private:
    std::string key_path_;
    int line_;
    int column_;
};

}  // namespace dysonmap
