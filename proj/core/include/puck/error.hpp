#pragma once

#include <stdexcept>
#include <string>

namespace puck {

/// Violated precondition on an argument value.
class ArgumentError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// Index outside the valid range of a series.
class RangeError : public std::out_of_range {
  public:
    using std::out_of_range::out_of_range;
};

/// The likelihood is unbounded (e.g. every residual is exactly zero).
class DegenerateFitError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Not enough observations survive for the requested statistic.
class InsufficientDataError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// The potential has no finite barrier next to a well at the origin.
class NoBarrierError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class EmptyInputError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

}  // namespace puck
