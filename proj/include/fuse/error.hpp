#pragma once

#include <stdexcept>
#include <string>

namespace fuse {

// Base class for all engine errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Shape disagreement between grids/maps/kernels.
class DimensionError : public Error {
public:
    explicit DimensionError(const std::string& msg) : Error(msg) {}
};

// Invalid scalar argument (timestep out of range, negative guidance, ...).
class ParameterError : public Error {
public:
    explicit ParameterError(const std::string& msg) : Error(msg) {}
};

// Unknown condition id passed to a predictor.
class ConditionError : public Error {
public:
    explicit ConditionError(const std::string& msg) : Error(msg) {}
};

// Malformed or inconsistent model/mask file.
class LoadError : public Error {
public:
    explicit LoadError(const std::string& msg) : Error(msg) {}
};

// Malformed or inconsistent experiment config.
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

} // namespace fuse
