#include "fpx/exact.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_sf_bessel.h>

#include <cmath>
#include <mutex>
#include <sstream>
#include <unsupported/Eigen/MatrixFunctions>

namespace fpx::exact {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

void check_stable(const Eigen::MatrixXd& a, const char* who) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(a);
  if (es.eigenvalues().real().minCoeff() <= 0) {
    std::ostringstream oss;
    oss << who << ": generator must have eigenvalues with positive real part";
    throw invalid_argument(oss.str());
  }
}

std::once_flag gsl_handler_once;

// log of the exponentially scaled I_nu; order may lie in (-1,0) for nu < 1.
double log_bessel_i_scaled(double order, double z) {
  std::call_once(gsl_handler_once, [] { gsl_set_error_handler_off(); });
  if (order >= 0.0) {
    const double v = gsl_sf_bessel_Inu_scaled(order, z);
    if (!(v > 0.0) || !std::isfinite(v))
      throw numerical_error("scaled Bessel evaluation failed");
    return std::log(v);
  }
  const double mu = -order;
  const double i = gsl_sf_bessel_Inu_scaled(mu, z);
  const double k = gsl_sf_bessel_Knu_scaled(mu, z);  // e^{+z} K_mu
  const double v = i + (2.0 / kPi) * std::sin(mu * kPi) * k * std::exp(-2.0 * z);
  if (!(v > 0.0) || !std::isfinite(v))
    throw numerical_error("scaled Bessel evaluation failed (negative order)");
  return std::log(v);
}

}  // namespace

double log_ou_density_1d(double theta, double y_inf, double tau, double y,
                         double y0, double ic_var) {
  if (theta <= 0) throw invalid_argument("ou_density_1d: theta must be positive");
  if (tau <= 0) throw invalid_argument("ou_density_1d: tau must be positive");
  const double u = std::exp(-theta * tau);
  const double var = -std::expm1(-2.0 * theta * tau) / theta + ic_var * u * u;
  const double mean = y_inf + (y0 - y_inf) * u;
  const double r = y - mean;
  return -0.5 * (std::log(var) + kLog2Pi) - 0.5 * r * r / var;
}

double ou_density_1d(double theta, double y_inf, double tau, double y,
                     double y0, double ic_var) {
  return std::exp(log_ou_density_1d(theta, y_inf, tau, y, y0, ic_var));
}

double log_ou_density_nd(const Eigen::MatrixXd& a, double tau,
                         const Eigen::VectorXd& y, const Eigen::VectorXd& y0,
                         double ic_var) {
  const int m = static_cast<int>(a.rows());
  if ((a - a.transpose()).cwiseAbs().maxCoeff() > 1e-12)
    throw invalid_argument(
        "ou_density_nd: generator must be symmetric; use "
        "nonconservative_ou_density otherwise");
  if (tau <= 0) throw invalid_argument("ou_density_nd: tau must be positive");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
  if (es.eigenvalues().minCoeff() <= 0)
    throw invalid_argument("ou_density_nd: generator must be positive definite");

  // work in the eigenbasis: each coordinate is an independent 1D OU
  const Eigen::VectorXd zy = es.eigenvectors().transpose() * y;
  const Eigen::VectorXd z0 = es.eigenvectors().transpose() * y0;
  double logf = 0.0;
  for (int i = 0; i < m; ++i) {
    const double lam = es.eigenvalues()(i);
    const double u = std::exp(-lam * tau);
    const double var = -std::expm1(-2.0 * lam * tau) / lam + ic_var * u * u;
    const double r = zy(i) - z0(i) * u;
    logf += -0.5 * (std::log(var) + kLog2Pi) - 0.5 * r * r / var;
  }
  return logf;
}

double ou_density_nd(const Eigen::MatrixXd& a, double tau,
                     const Eigen::VectorXd& y, const Eigen::VectorXd& y0,
                     double ic_var) {
  return std::exp(log_ou_density_nd(a, tau, y, y0, ic_var));
}

double dryfric_density(double tau, double y, double y0) {
  if (tau <= 0) throw invalid_argument("dryfric_density: tau must be positive");
  const double d = y - y0;
  const double far = std::exp(-d * d / (4.0 * tau)) / std::sqrt(4.0 * kPi * tau) *
                     std::exp(-tau / 4.0) *
                     std::exp((std::abs(y0) - std::abs(y)) / 2.0);
  const double relax = 0.5 * std::exp(-std::abs(y)) *
                       normal_cdf((tau - std::abs(y) - std::abs(y0)) /
                                  std::sqrt(2.0 * tau));
  return far + relax;
}

double dryfric_g(double tau, double y, double y0) {
  if (tau <= 0) throw invalid_argument("dryfric_g: tau must be positive");
  const double d = y - y0;
  const double far = std::exp(-d * d / (4.0 * tau)) / std::sqrt(kPi * tau) *
                     std::exp(-tau / 4.0) *
                     std::exp((std::abs(y0) + std::abs(y)) / 2.0);
  return far + normal_cdf((tau - std::abs(y) - std::abs(y0)) /
                          std::sqrt(2.0 * tau));
}

double log_sqrt_process_density(double nu, double tau, double y, double y0) {
  if (nu <= 0) throw invalid_argument("sqrt_process_density: nu must be positive");
  if (tau <= 0) throw invalid_argument("sqrt_process_density: tau must be positive");
  if (y <= 0 || y0 <= 0)
    throw invalid_argument("sqrt_process_density: state must be positive");
  const double em = std::exp(-tau);
  const double c = 1.0 / (-std::expm1(-tau));
  const double z = 2.0 * c * std::sqrt(y * y0 * em);
  const double log_ratio = 0.5 * (nu - 1.0) * (std::log(y) + tau - std::log(y0));
  if (z < 1e-8) {
    // series around z=0; the scaled form loses the (z/2)^{nu-1} factor
    const double log_i = (nu - 1.0) * std::log(0.5 * z) - std::lgamma(nu) +
                         std::log1p(z * z / (4.0 * nu));
    return std::log(c) + log_ratio - c * (y + y0 * em) + log_i;
  }
  const double s = std::sqrt(y) - std::sqrt(y0 * em);
  return std::log(c) + log_ratio - c * s * s + log_bessel_i_scaled(nu - 1.0, z);
}

double sqrt_process_density(double nu, double tau, double y, double y0) {
  return std::exp(log_sqrt_process_density(nu, tau, y, y0));
}

double sqrt_process_f_inf(double nu, double y) {
  if (y <= 0) throw invalid_argument("sqrt_process_f_inf: state must be positive");
  return std::exp((nu - 1.0) * std::log(y) - y - std::lgamma(nu));
}

Eigen::MatrixXd lyapunov_sigma_inf(const Eigen::MatrixXd& a) {
  const int m = static_cast<int>(a.rows());
  if (a.cols() != m) throw invalid_argument("lyapunov_sigma_inf: square matrix required");
  check_stable(a, "lyapunov_sigma_inf");

  // unknowns: upper triangle of the symmetric sigma
  const int n = m * (m + 1) / 2;
  auto idx = [m](int r, int c) {
    if (r > c) std::swap(r, c);
    return r * m - r * (r - 1) / 2 + (c - r);
  };
  Eigen::MatrixXd sys = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  int row = 0;
  for (int i = 0; i < m; ++i) {
    for (int j = i; j < m; ++j, ++row) {
      for (int k = 0; k < m; ++k) {
        sys(row, idx(k, j)) += a(i, k);
        sys(row, idx(k, i)) += a(j, k);
      }
      rhs(row) = (i == j) ? 2.0 : 0.0;
    }
  }
  const Eigen::VectorXd sol = sys.fullPivLu().solve(rhs);
  Eigen::MatrixXd sigma(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = i; j < m; ++j) sigma(i, j) = sigma(j, i) = sol(idx(i, j));

  const double resid =
      (a * sigma + sigma * a.transpose() - 2.0 * Eigen::MatrixXd::Identity(m, m))
          .cwiseAbs()
          .maxCoeff();
  if (resid > 1e-10)
    throw numerical_error("lyapunov_sigma_inf: residual " + std::to_string(resid));
  return sigma;
}

Eigen::MatrixXd nonconservative_sigma(const Eigen::MatrixXd& a,
                                      const Eigen::MatrixXd& sigma_inf,
                                      double tau) {
  const Eigen::MatrixXd e = (-a * tau).exp();
  return sigma_inf - e * sigma_inf * e.transpose();
}

double log_nonconservative_ou_density(const Eigen::MatrixXd& a, double tau,
                                      const Eigen::VectorXd& y,
                                      const Eigen::VectorXd& y0) {
  if (tau <= 0)
    throw invalid_argument("nonconservative_ou_density: tau must be positive");
  const int m = static_cast<int>(a.rows());
  const Eigen::MatrixXd sigma_inf = lyapunov_sigma_inf(a);
  const Eigen::MatrixXd e = (-a * tau).exp();
  const Eigen::MatrixXd sigma = sigma_inf - e * sigma_inf * e.transpose();
  const Eigen::VectorXd r = y - e * y0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sigma);
  if (es.eigenvalues().minCoeff() <= 0)
    throw numerical_error("nonconservative_ou_density: degenerate covariance");
  const Eigen::VectorXd z = es.eigenvectors().transpose() * r;
  double logf = 0.0;
  for (int i = 0; i < m; ++i) {
    const double s = es.eigenvalues()(i);
    logf += -0.5 * (std::log(s) + kLog2Pi) - 0.5 * z(i) * z(i) / s;
  }
  return logf;
}

double nonconservative_ou_density(const Eigen::MatrixXd& a, double tau,
                                  const Eigen::VectorXd& y,
                                  const Eigen::VectorXd& y0) {
  return std::exp(log_nonconservative_ou_density(a, tau, y, y0));
}

EquivalenceReport equivalence_class_check(const Eigen::MatrixXd& a1,
                                          const Eigen::MatrixXd& a2) {
  EquivalenceReport rep;
  rep.sigma1 = lyapunov_sigma_inf(a1);
  rep.sigma2 = lyapunov_sigma_inf(a2);
  rep.max_diff = (rep.sigma1 - rep.sigma2).cwiseAbs().maxCoeff();
  rep.equivalent = rep.max_diff < 1e-8;
  rep.trace1 = a1.trace();
  rep.trace2 = a2.trace();
  return rep;
}

}  // namespace fpx::exact
