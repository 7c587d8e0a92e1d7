#pragma once

#include <stdexcept>
#include <string>

namespace crone {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid numeric parameters (ordering, ranges, dimensions).
class ParameterError : public Error {
 public:
  using Error::Error;
};

// A transfer or resolvent could not be evaluated at a frequency.
class EvaluationError : public Error {
 public:
  EvaluationError(const std::string& what, double frequency)
      : Error(what + " at omega = " + std::to_string(frequency) + " rad/s"), frequency_(frequency) {}
  double frequency() const { return frequency_; }

 private:
  double frequency_;
};

class RealizationError : public Error {
 public:
  using Error::Error;
};

// Computed fractional order falls outside the admissible interval of the generation.
class DesignInfeasible : public Error {
 public:
  DesignInfeasible(const std::string& what, double value)
      : Error(what + " (computed value " + std::to_string(value) + ")"), value_(value) {}
  double value() const { return value_; }

 private:
  double value_;
};

class DecompositionError : public Error {
 public:
  using Error::Error;
};

// Describing function undefined (singular Lambda or Delta_D).
class DescribingFunctionUndefined : public Error {
 public:
  DescribingFunctionUndefined(const std::string& what, double frequency)
      : Error(what + " at omega = " + std::to_string(frequency) + " rad/s"), frequency_(frequency) {}
  double frequency() const { return frequency_; }

 private:
  double frequency_;
};

class OracleUnstable : public Error {
 public:
  using Error::Error;
};

class StabilityPreconditionError : public Error {
 public:
  using Error::Error;
};

class SimulationDiverged : public Error {
 public:
  SimulationDiverged(const std::string& what, double time)
      : Error(what + " at t = " + std::to_string(time) + " s"), time_(time) {}
  double time() const { return time_; }

 private:
  double time_;
};

class ProfileError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace crone
