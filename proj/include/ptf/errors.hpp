#pragma once

#include <stdexcept>
#include <string>

namespace ptf {

/// Base of every error raised by the library. Each subclass names one
/// failure mode so callers can dispatch on type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class NonFiniteValue : public Error {
 public:
  using Error::Error;
};

class SingularMatrix : public Error {
 public:
  using Error::Error;
};

class NoSolution : public Error {
 public:
  NoSolution(const std::string& what, double residual)
      : Error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

class CareDiverged : public Error {
 public:
  using Error::Error;
};

class NotSymmetric : public Error {
 public:
  using Error::Error;
};

class RankDeficient : public Error {
 public:
  using Error::Error;
};

class NotConnected : public Error {
 public:
  using Error::Error;
};

class HNotPositiveDefinite : public Error {
 public:
  using Error::Error;
};

class TimeBeforeWindow : public Error {
 public:
  using Error::Error;
};

class GainConditionViolated : public Error {
 public:
  using Error::Error;
};

class UnmatchedUncertainty : public Error {
 public:
  using Error::Error;
};

class DivergenceDetected : public Error {
 public:
  DivergenceDetected(const std::string& what, double time)
      : Error(what), time_(time) {}
  double time() const { return time_; }

 private:
  double time_;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

/// A scenario that parses but breaks a modelling assumption. The message
/// starts with the assumption label, e.g. "Assumption 3: ...".
class ValidationError : public Error {
 public:
  using Error::Error;
};

}  // namespace ptf
