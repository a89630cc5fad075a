#pragma once

#include <Eigen/Dense>

#include "fpx/common.hpp"

namespace fpx::exact {

// 1D Ornstein-Uhlenbeck transition density: Gaussian with mean
// y_inf + (y0-y_inf)e^{-theta tau} and variance (1-e^{-2 theta tau})/theta.
// ic_var > 0 starts from a Gaussian of that variance instead of a point mass
// (adds ic_var e^{-2 theta tau}); used when benchmarking the spectral solver.
double log_ou_density_1d(double theta, double y_inf, double tau, double y,
                         double y0, double ic_var = 0.0);
double ou_density_1d(double theta, double y_inf, double tau, double y,
                     double y0, double ic_var = 0.0);

// Symmetric multivariate OU with generator a (symmetric positive definite):
// mean e^{-a tau} y0, covariance a^{-1}(I - e^{-2 a tau}).
double log_ou_density_nd(const Eigen::MatrixXd& a, double tau,
                         const Eigen::VectorXd& y, const Eigen::VectorXd& y0,
                         double ic_var = 0.0);
double ou_density_nd(const Eigen::MatrixXd& a, double tau,
                     const Eigen::VectorXd& y, const Eigen::VectorXd& y0,
                     double ic_var = 0.0);

// Closed-form dry-friction (drift -sgn y) transition density and its
// normalized form g = f/f_inf.
double dryfric_density(double tau, double y, double y0);
double dryfric_g(double tau, double y, double y0);

// Square-root (CIR-type) process on the half-line in normal form
// dY = (nu - Y) dtau + sqrt(2Y) dW; Bessel-form transition density,
// invariant density y^{nu-1} e^{-y} / Gamma(nu).
double log_sqrt_process_density(double nu, double tau, double y, double y0);
double sqrt_process_density(double nu, double tau, double y, double y0);
double sqrt_process_f_inf(double nu, double y);

/// Stationary covariance of dY = -aY dtau + sqrt(2) dW for a general stable
/// generator: solves a s + s a^T = 2I as a linear system in the elements of s.
Eigen::MatrixXd lyapunov_sigma_inf(const Eigen::MatrixXd& a);

/// sigma(tau) = sigma_inf - e^{-a tau} sigma_inf e^{-a^T tau}.
Eigen::MatrixXd nonconservative_sigma(const Eigen::MatrixXd& a,
                                      const Eigen::MatrixXd& sigma_inf,
                                      double tau);

double log_nonconservative_ou_density(const Eigen::MatrixXd& a, double tau,
                                      const Eigen::VectorXd& y,
                                      const Eigen::VectorXd& y0);
double nonconservative_ou_density(const Eigen::MatrixXd& a, double tau,
                                  const Eigen::VectorXd& y,
                                  const Eigen::VectorXd& y0);

/// Two stable generators are equivalent when they share sigma_inf (same
/// short- and long-time behaviour); equivalent generators share their trace.
struct EquivalenceReport {
  bool equivalent;
  double max_diff;
  double trace1, trace2;
  Eigen::MatrixXd sigma1, sigma2;
};
EquivalenceReport equivalence_class_check(const Eigen::MatrixXd& a1,
                                          const Eigen::MatrixXd& a2);

}  // namespace fpx::exact
