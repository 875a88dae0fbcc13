#pragma once

#include <stdexcept>
#include <string>

namespace asd {

// Shapes, layouts, plans or config values that do not fit together.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Argument outside the mathematical domain of an operation (t outside [0,1], ...).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Non-finite values during evaluation or optimisation.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Caller broke an operation's precondition (e.g. ASD evaluated at the last step).
class ContractViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

// A required input artifact (checkpoint, CSV, config) is absent or unreadable.
class MissingInput : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace asd
