#pragma once

#include <stdexcept>
#include <string>

namespace flyer {

/// Base class for all domain failures raised by the library. Precondition
/// violations on plain arguments use std::invalid_argument / std::out_of_range.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DegeneratePathError : public Error {
 public:
  using Error::Error;
};

class SimulationError : public Error {
 public:
  using Error::Error;
};

/// No admissible trajectory exists under the given limits or durations.
class PlanningError : public Error {
 public:
  using Error::Error;
};

}  // namespace flyer
