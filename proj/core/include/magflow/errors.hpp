#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace magflow {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed arguments: wrong dimensions, broken invariants of an input type.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A 2-form is (numerically) singular where it must be nondegenerate.
/// Carries the offending Gram matrix.
class DegenerateFormError : public Error {
 public:
  DegenerateFormError(const std::string& what, Eigen::MatrixXd gram)
      : Error(what), gram_(std::move(gram)) {}
  const Eigen::MatrixXd& gram() const noexcept { return gram_; }

 private:
  Eigen::MatrixXd gram_;
};

/// The metric is singular (or badly conditioned) at a base point.
class SingularMetricError : public Error {
 public:
  SingularMetricError(const std::string& what, Eigen::VectorXd q, double condition)
      : Error(what), q_(std::move(q)), condition_(condition) {}
  const Eigen::VectorXd& base_point() const noexcept { return q_; }
  double condition_number() const noexcept { return condition_; }

 private:
  Eigen::VectorXd q_;
  double condition_;
};

/// Configuration documents that fail to parse or validate.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace magflow
