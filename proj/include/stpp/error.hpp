#pragma once

#include <stdexcept>
#include <string>

namespace stpp {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid user input: malformed configs, bad CSV rows, violated preconditions.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Non-finite losses or statistics during training / online updates.
class DivergenceError : public Error {
public:
    using Error::Error;
};

// Simulation exceeded its event budget.
class BudgetError : public Error {
public:
    using Error::Error;
};

// Intensity evaluated to zero where its logarithm is required.
class DegenerateIntensityError : public Error {
public:
    using Error::Error;
};

}  // namespace stpp
