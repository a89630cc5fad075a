#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace fpx {

// Every catalog model lives in one or two dimensions, so state vectors and
// Jacobians use fixed-capacity Eigen types: dynamic size, no heap traffic.
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, 2, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, 2, 2>;

inline Vec vec1(double y) {
  Vec v(1);
  v(0) = y;
  return v;
}

inline Vec vec2(double a, double b) {
  Vec v(2);
  v(0) = a;
  v(1) = b;
  return v;
}

/// Base class for all library errors.
class error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Rejected parameters or malformed experiment specs (CLI exit code 2).
class invalid_argument : public error {
 public:
  using error::error;
};

/// Quadrature non-convergence, solver blow-up, singular matrices (exit code 3).
class numerical_error : public error {
 public:
  using error::error;
};

inline constexpr double kPi = 3.14159265358979323846;

}  // namespace fpx
