#pragma once

#include <stdexcept>
#include <string>

namespace fliu {

// Base class for every failure this library reports.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed IDX image/label files (bad magic, truncation, count mismatch).
struct IdxFormatError : Error {
    using Error::Error;
};

// Malformed CIFAR-10 binary batches (partial record, label out of range).
struct CifarFormatError : Error {
    using Error::Error;
};

// Invalid sizes or arguments to a constructor/operation.
struct InvalidArgumentError : Error {
    using Error::Error;
};

// Shape disagreement between parameter vectors, batches and model specs.
struct DimensionError : Error {
    using Error::Error;
};

// Sinkhorn-Knopp / IPF could not meet the requested marginal tolerance.
struct ConvergenceError : Error {
    using Error::Error;
};

// Environment constructor could not produce a valid client assignment.
struct PartitionError : Error {
    using Error::Error;
};

// Experiment configuration file is missing, malformed or inconsistent.
struct ConfigError : Error {
    using Error::Error;
};

// Checkpoint / parameter blob file is unreadable or from a different model.
struct SerializationError : Error {
    using Error::Error;
};

} // namespace fliu
