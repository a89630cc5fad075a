#pragma once

#include <functional>
#include <memory>
#include <optional>

#include "fpx/common.hpp"
#include "fpx/models.hpp"

namespace fpx {

/// Symmetric positive-definite reversion matrix with its eigendecomposition;
/// every matrix function of theta (q, sqrt q, rational combinations) is the
/// scalar function applied to the eigenvalues, so they all commute.
struct MatrixKernel {
  Mat theta;
  Vec eigvals;
  Mat eigvecs;

  static MatrixKernel from_theta(const Mat& theta);

  int dim() const { return static_cast<int>(eigvals.size()); }
  Mat fn(const std::function<double(double)>& scalar) const;

  Mat q(double tau) const;       // exp(-2 theta tau)
  Mat sqrt_q(double tau) const;  // exp(-theta tau)
  Mat S(double tau) const;       // sqrt(q) (I + sqrt(q))^{-1}
  Mat M(double tau) const;       // theta sqrt(q) (I - q)^{-1}
  double log_det_I_minus_q(double tau) const;
  double log_det_theta_over_2pi() const;
};

/// tr(sqrt(q)(I+sqrt(q))^{-1}) / m: interpolates the prefactor exponent from
/// 1/2 at tau=0 to 0 at tau=infinity.
double rho(const MatrixKernel& kernel, double tau);

struct ApproxNDContext {
  std::shared_ptr<const DriftModel> model;
  MatrixKernel kernel;
  Vec y0;
  Vec mu_inf;
  double log_f_inf_mu;  // log f(inf, mu_inf), including the constant
};

ApproxNDContext make_approxnd(std::shared_ptr<const DriftModel> model,
                              const Vec& y0,
                              std::optional<Mat> theta_override = {});

/// log Omega(tau,y) = int_{mu_inf}^{y} dx . (S(tau) A(x)) along the straight
/// line; uses the model's registered closed form when present, otherwise
/// adaptive Gauss-Legendre on the path parameter.
double log_omega(const ApproxNDContext& ctx, double tau, const Vec& y);
double omega(const ApproxNDContext& ctx, double tau, const Vec& y);

double log_f_leading_nd(const ApproxNDContext& ctx, double tau, const Vec& y);
double f_leading_nd(const ApproxNDContext& ctx, double tau, const Vec& y);
double log_g_leading_nd(const ApproxNDContext& ctx, double tau, const Vec& y);
double g_leading_nd(const ApproxNDContext& ctx, double tau, const Vec& y);

/// max_{ij} |dB_i/dy_j - dB_j/dy_i| with B = S(tau) A, by central differences;
/// diagnoses the non-conservative remainder of the mid-time field (O(tau)).
double curl_defect(const ApproxNDContext& ctx, double tau, const Vec& y);

}  // namespace fpx
