#pragma once

#include <stdexcept>
#include <string>
#include <utility>

#include <Eigen/Dense>

namespace stratfib {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed arguments: dimension mismatches, non-finite coordinates, bad radii.
class InputError : public Error {
 public:
  using Error::Error;
};

/// A point where a geometric object is undefined (sphere tangent at the origin).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Gauss-Newton projection onto a zero set did not converge.
class ProjectionError : public Error {
 public:
  ProjectionError(const std::string& what, double residual, Eigen::VectorXd last)
      : Error(what), residual_(residual), last_(std::move(last)) {}
  double residual() const { return residual_; }
  const Eigen::VectorXd& last_point() const { return last_; }

 private:
  double residual_;
  Eigen::VectorXd last_;
};

/// Two strata claim the same point.
class ConsistencyError : public Error {
 public:
  using Error::Error;
};

/// The restriction of an audit function to a stratum changes rank between samples.
class ConstantRankError : public Error {
 public:
  using Error::Error;
};

/// d(f|stratum) restricted to the sphere tangent is not onto: the point is rho-nonregular.
class MilnorPointError : public Error {
 public:
  using Error::Error;
};

/// d(f|stratum) itself is not onto.
class SingularPointError : public Error {
 public:
  using Error::Error;
};

/// Step size underflow in the flow integrator.
class IntegrationError : public Error {
 public:
  IntegrationError(const std::string& what, double time, Eigen::VectorXd last_good)
      : Error(what), time_(time), last_good_(std::move(last_good)) {}
  double time() const { return time_; }
  const Eigen::VectorXd& last_good() const { return last_good_; }

 private:
  double time_;
  Eigen::VectorXd last_good_;
};

/// An operation was called with a box that meets the non-regular value estimate.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

class SafeRadiusNotFound : public Error {
 public:
  using Error::Error;
};

/// Problem-file problems; `field` names the offending key path.
class ValidationError : public Error {
 public:
  ValidationError(const std::string& field, const std::string& what)
      : Error(field + ": " + what), field_(field) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line, std::size_t column)
      : Error(what), line_(line), column_(column) {}
  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

}  // namespace stratfib
