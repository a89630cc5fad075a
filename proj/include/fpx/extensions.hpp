#pragma once

#include <Eigen/Dense>
#include <memory>

#include "fpx/common.hpp"
#include "fpx/models.hpp"

namespace fpx::ext {

/// Far-from-equilibrium regime |A(y)| << theta |y - mu_inf|: no mean
/// reversion in the leading balance.
struct FarFieldContext {
  std::shared_ptr<const DriftModel> model;
  Vec y0;
  bool include_divA = false;  // keep the div A term in B1
};

/// g ~ e^{-|y-y0|^2/4tau} e^{-(|A(y)|^2+|A(y0)|^2) tau/8}
///     / ((4 pi tau)^{m/2} sqrt(f_inf(y) f_inf(y0))).
double log_far_field_g(const FarFieldContext& ctx, double tau, const Vec& y);
double far_field_g(const FarFieldContext& ctx, double tau, const Vec& y);
double far_field_f(const FarFieldContext& ctx, double tau, const Vec& y);

/// B1(y) = (y-y0)^{-1} int_{y0}^{y} (A^2/4 [+ A'/2]) dz (1D only).  With
/// slowly_varying the endpoint average (|A(y)|^2+|A(y0)|^2)/8 is returned
/// (requires include_divA == false).
double b1_far_field(const FarFieldContext& ctx, double y,
                    bool slowly_varying = false);

/// Half-line (square-root process) leading-order h:
///   2 theta sqrt(q)(1 - sqrt(y0/y))/(1-q)
///   + (sqrt(q)/(1+sqrt(q))) (A(y)/y - 1/(2y)),  A(y) = nu - y.
/// theta = 1/2 reproduces the exact process at short time.
double sqrt_h_leading(double theta, double nu, double y0, double tau, double y);

/// H for the non-conservative OU, from the bracket
/// M = e^{a tau} sigma_inf - sigma_inf e^{-a^T tau}:
///   H = M^{-1}(y-y0) + M^{-1} sigma_inf (e^{-a^T tau} - I) sigma_inf^{-1} y.
Eigen::VectorXd nonconservative_h(const Eigen::MatrixXd& a,
                                  const Eigen::MatrixXd& sigma_inf, double tau,
                                  const Eigen::VectorXd& y,
                                  const Eigen::VectorXd& y0);

}  // namespace fpx::ext
