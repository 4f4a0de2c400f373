#pragma once

#include <stdexcept>
#include <string>

namespace wma {

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Inconsistent or invalid configuration (profiles, grids, market spec).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A simulated quantity left the region the user model allows.
class ModelViolation : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A guaranteed bound or identity failed during a run.
class InvariantViolation : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input file; the message names the file and line.
class IngestError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace wma
