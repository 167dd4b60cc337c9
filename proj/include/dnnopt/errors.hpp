#pragma once

#include <stdexcept>
#include <string>

namespace dnnopt {

// Violated precondition of a library call (bad dimensions, empty sets, ...).
class ContractError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class CanonicalizationError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Non-finite data or a diverging loss during network training.
class TrainingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Unrecoverable external-evaluator failure; aborts the run.
class ProtocolError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace dnnopt
