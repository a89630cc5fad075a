#pragma once

#include <array>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>

#include "fpx/common.hpp"

namespace fpx {

/// One drift/invariant-density pair in normalized coordinates
/// (dY = A(Y)dtau + sqrt(2)dW).  Immutable after construction; safe to share
/// across threads.
struct DriftModel {
  std::string id;
  int dim = 1;

  std::function<Vec(const Vec&)> drift;          // A(y)
  std::function<Mat(const Vec&)> jacobian;       // grad A, symmetric if conservative
  std::function<double(const Vec&)> log_f_inf;   // log f(inf,y) up to a constant
  double log_norm = 0.0;                         // log of the normalizing constant

  bool conservative = true;
  // Dry-friction: grad A is a flagged discontinuity at the kink; averages must
  // use the <A A^T> form instead of pointwise differentiation.
  bool jacobian_discontinuous = false;

  std::optional<Mat> closed_form_theta;
  Vec mean_inf;

  // Truncated domain for normalization and invariant-density averages:
  // quad_center +- quad_halfwidth per axis.
  Vec quad_center;
  double quad_halfwidth = 12.0;
  // Analytic mass of f_inf beyond +-L for fat-tailed models (else zero).
  std::function<double(double)> tail_mass;

  // Optional closed-form log Omega(tau,y) given S = sqrt(q)(I+sqrt(q))^{-1};
  // the straight-line quadrature is the fallback.
  std::function<double(const Vec& y, const Mat& S, const Vec& mu_inf)>
      log_omega_closed;

  // Mollified drift for spectral solves of discontinuous fields (width w).
  std::function<Vec(const Vec&, double w)> smoothed_drift;

  double f_inf(const Vec& y) const {
    return std::exp(log_norm + log_f_inf(y));
  }
  double log_f_inf_full(const Vec& y) const { return log_norm + log_f_inf(y); }

  // Scalar conveniences for the 1D modules.
  double drift1(double y) const { return drift(vec1(y))(0); }
  double jacobian1(double y) const { return jacobian(vec1(y))(0, 0); }
  double f_inf1(double y) const { return f_inf(vec1(y)); }
  double log_f_inf1(double y) const { return log_f_inf_full(vec1(y)); }
};

DriftModel make_ou_1d(double theta, double y_inf);
DriftModel make_sech_power(double gamma_hat, double delta_hat);
DriftModel make_dry_friction();
DriftModel make_student_t_1d(double gamma_hat);
DriftModel make_double_well_1d(const std::array<double, 2>& alpha,
                               const std::array<double, 2>& beta, double gamma);
DriftModel make_student_t_2d(double a1, double a2, double nu);
DriftModel make_double_well_2d(const Mat& a, const Vec& alpha1,
                               const Vec& alpha2,
                               const std::array<double, 2>& beta, double gamma);
/// Symmetric OU in m dimensions, A(y) = -a(y - mean); a symmetric positive
/// definite.  Used as the exactness baseline for the multivariate modules.
DriftModel make_ou_nd(const Mat& a, const Vec& mean);

/// Construct a catalog model from its config-file id and parameter table.
/// Known ids: ou, sech, dryfric, student1d, dwell1d, student2d, dwell2d.
DriftModel make_from_params(const std::string& id,
                            const std::map<std::string, double>& params);

/// Quadrature mass of f_inf over the truncated domain plus any analytic tail.
double normalization_mass(const DriftModel& model);

/// Long-term mean by quadrature of y f_inf (used when not analytic).
Vec mean_by_quadrature(const DriftModel& model);

}  // namespace fpx
