#include "fpx/extensions.hpp"

#include <cmath>
#include <sstream>
#include <unsupported/Eigen/MatrixFunctions>

#include "fpx/quadrature.hpp"

namespace fpx::ext {

double log_far_field_g(const FarFieldContext& ctx, double tau, const Vec& y) {
  if (!(tau > 0)) throw invalid_argument("far_field_g: tau must be positive");
  const DriftModel& m = *ctx.model;
  const Vec d = y - ctx.y0;
  const double a2 = m.drift(y).squaredNorm() + m.drift(ctx.y0).squaredNorm();
  return -d.squaredNorm() / (4.0 * tau) - a2 * tau / 8.0 -
         0.5 * m.dim * std::log(4.0 * kPi * tau) -
         0.5 * (m.log_f_inf_full(y) + m.log_f_inf_full(ctx.y0));
}

double far_field_g(const FarFieldContext& ctx, double tau, const Vec& y) {
  return std::exp(log_far_field_g(ctx, tau, y));
}

double far_field_f(const FarFieldContext& ctx, double tau, const Vec& y) {
  return std::exp(log_far_field_g(ctx, tau, y) + ctx.model->log_f_inf_full(y));
}

double b1_far_field(const FarFieldContext& ctx, double y, bool slowly_varying) {
  const DriftModel& m = *ctx.model;
  if (m.dim != 1) throw invalid_argument("b1_far_field: 1D only");
  const double y0 = ctx.y0(0);
  if (slowly_varying) {
    if (ctx.include_divA)
      throw invalid_argument(
          "b1_far_field: the endpoint-average shortcut drops the div A term");
    const double ay = m.drift1(y), a0 = m.drift1(y0);
    return (ay * ay + a0 * a0) / 8.0;
  }
  auto integrand = [&](double z) {
    const double a = m.drift1(z);
    double v = 0.25 * a * a;
    if (ctx.include_divA) v += 0.5 * m.jacobian1(z);
    return v;
  };
  if (std::abs(y - y0) < 1e-10) return integrand(y0);
  const double val =
      quad::adaptive(integrand, y0, y, 1e-14, 1e-10) / (y - y0);
  return val;
}

double sqrt_h_leading(double theta, double nu, double y0, double tau, double y) {
  if (!(theta > 0)) throw invalid_argument("sqrt_h_leading: theta must be positive");
  if (!(nu > 0)) throw invalid_argument("sqrt_h_leading: nu must be positive");
  if (!(tau > 0)) throw invalid_argument("sqrt_h_leading: tau must be positive");
  if (!(y > 0) || !(y0 > 0))
    throw invalid_argument("sqrt_h_leading: state must be positive");
  const double x = theta * tau;
  // 2 theta sqrt(q)/(1-q) = theta / sinh(theta tau)
  const double c1 = theta / std::sinh(x);
  const double u = std::exp(-x);
  const double p = u / (1.0 + u);
  const double a_over_y = (nu - y) / y;  // A(y)/y with A = nu - y
  return c1 * (1.0 - std::sqrt(y0 / y)) + p * (a_over_y - 0.5 / y);
}

Eigen::VectorXd nonconservative_h(const Eigen::MatrixXd& a,
                                  const Eigen::MatrixXd& sigma_inf, double tau,
                                  const Eigen::VectorXd& y,
                                  const Eigen::VectorXd& y0) {
  if (!(tau > 0)) throw invalid_argument("nonconservative_h: tau must be positive");
  const int m = static_cast<int>(a.rows());
  const Eigen::MatrixXd ep = (a * tau).exp();
  const Eigen::MatrixXd emt = (-a.transpose() * tau).exp();
  const Eigen::MatrixXd bracket = ep * sigma_inf - sigma_inf * emt;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(bracket);
  if (!lu.isInvertible()) {
    std::ostringstream oss;
    oss << "nonconservative_h: singular bracket at tau = " << tau;
    throw numerical_error(oss.str());
  }
  const Eigen::MatrixXd rest =
      sigma_inf * (emt - Eigen::MatrixXd::Identity(m, m)) * sigma_inf.inverse();
  return lu.solve((y - y0) + rest * y);
}

}  // namespace fpx::ext
