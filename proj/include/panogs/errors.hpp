#pragma once

#include <stdexcept>
#include <string>

namespace panogs {

/// Input outside the mathematical domain of an operation (out-of-range pixel, zero vector).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// A caller or adapter broke an interface contract (wrong dims, modified pixels, bad pose).
class ContractError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Invalid or inconsistent configuration.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Failure reported by (or while talking to) an external model adapter.
class AdapterError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class PipelineError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class AlignmentError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class CalibrationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace panogs
