#pragma once

#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace dalm {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// bad model or config parameters
class ParameterError : public Error {
public:
    using Error::Error;
};

// argument outside the finiteness domain of the exponents
class DomainError : public Error {
public:
    DomainError(const std::string& what, double bound = std::numeric_limits<double>::quiet_NaN())
        : Error(what), bound_(bound) {}
    double bound() const { return bound_; }

private:
    double bound_;
};

// damping parameter outside the admissible region; carries a suggestion
class DampingError : public DomainError {
public:
    DampingError(const std::string& what, std::vector<double> suggested)
        : DomainError(what), suggested_(std::move(suggested)) {}
    const std::vector<double>& suggested() const { return suggested_; }

private:
    std::vector<double> suggested_;
};

class NumericalError : public Error {
public:
    using Error::Error;
};

class CalibrationError : public Error {
public:
    CalibrationError(const std::string& what, double attained, double target)
        : Error(what), attained_(attained), target_(target) {}
    double attained() const { return attained_; }
    double target() const { return target_; }

private:
    double attained_;
    double target_;
};

class ValidationError : public Error {
public:
    using Error::Error;
};

class AssemblyError : public Error {
public:
    AssemblyError(const std::string& what, std::size_t index) : Error(what), index_(index) {}
    std::size_t index() const { return index_; }

private:
    std::size_t index_;
};

class IndexError : public Error {
public:
    using Error::Error;
};

// malformed config, model or curve file
class ParseError : public Error {
public:
    using Error::Error;
};

} // namespace dalm
