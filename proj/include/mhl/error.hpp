#pragma once

#include <stdexcept>
#include <string>

namespace mhl {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Operand shapes are incompatible.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// A NaN or Inf was produced or consumed.
class NumericError : public Error {
public:
    using Error::Error;
};

class IndexError : public Error {
public:
    using Error::Error;
};

class ArgumentError : public Error {
public:
    using Error::Error;
};

/// Malformed on-disk data (bad magic, truncated payload, bad JSON schema).
class FormatError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

/// Synthetic dataset spec that cannot be realised.
class SpecError : public Error {
public:
    using Error::Error;
};

/// Metric is undefined for the input (e.g. no positives).
class MetricError : public Error {
public:
    using Error::Error;
};

/// Checkpoint does not match the model configuration.
class LoadError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace mhl
