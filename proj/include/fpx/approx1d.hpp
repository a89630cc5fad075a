#pragma once

#include <memory>
#include <optional>

#include "fpx/common.hpp"
#include "fpx/models.hpp"

namespace fpx {

/// Frozen ingredients of the 1D leading-order product expansion: the
/// reversion speed theta, the starting point, and log f_inf(y0).
struct Approx1DContext {
  std::shared_ptr<const DriftModel> model;
  double theta;
  double y0;
  double log_f_inf_y0;  // includes the normalizing constant
};

/// theta defaults to the model's closed form when present, else the Fisher
/// quadrature estimate; an override supports sensitivity studies.
Approx1DContext make_approx1d(std::shared_ptr<const DriftModel> model,
                              double y0,
                              std::optional<double> theta_override = {});

/// Leading-order h = -d/dy log g:
///   theta sqrt(q)(y-y0)/(1-q) + (sqrt(q)/(1+sqrt(q))) A(y),  q = e^{-2 theta tau},
/// evaluated through cancellation-free forms (exact as tau -> 0).
double h_leading(const Approx1DContext& ctx, double tau, double y);

/// Leading-order transition density (log form never under/overflows).
double log_f_leading(const Approx1DContext& ctx, double tau, double y);
double f_leading(const Approx1DContext& ctx, double tau, double y);

/// Normalized density g = f/f_inf; symmetric under (y, y0) exchange.
double log_g_leading(const Approx1DContext& ctx, double tau, double y);
double g_leading(const Approx1DContext& ctx, double tau, double y);

/// First correction term of the remainder series:
///   b1(y) = (theta (y-y0)^2)^{-1} int_{y0}^{y} (z-y0)
///           (d/dz + A(z) + theta/2 (z-y0)) d/dz (A(z) + theta z) dz,
/// zero whenever A + theta y is constant.  The y -> y0 limit is finite and
/// evaluated from the Taylor expansion of the integral.
double b1_correction(const Approx1DContext& ctx, double y);

/// h including the first remainder term:
///   (p/(1+p)) (theta (y-y0)/(1-p) + A(y) + (1-p) b1(y)),  p = e^{-theta tau}.
double h_with_b1(const Approx1DContext& ctx, double tau, double y);

}  // namespace fpx
