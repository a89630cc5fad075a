#include "fpx/approx1d.hpp"

#include <cmath>

#include "fpx/fisher.hpp"
#include "fpx/quadrature.hpp"

namespace fpx {

namespace {

void check_tau(double tau) {
  if (!(tau > 0)) throw invalid_argument("approx1d: tau must be positive");
}

// second derivative of the drift from the analytic Jacobian
double d2drift(const DriftModel& m, double y) {
  const double h = 1e-5;
  return (m.jacobian1(y + h) - m.jacobian1(y - h)) / (2.0 * h);
}

// integrand factor F(z) with (z-y0) stripped:
//   F(z) = A''(z) + (A(z) + theta/2 (z-y0)) (A'(z) + theta)
double b1_factor(const DriftModel& m, double theta, double y0, double z) {
  return d2drift(m, z) +
         (m.drift1(z) + 0.5 * theta * (z - y0)) * (m.jacobian1(z) + theta);
}

}  // namespace

Approx1DContext make_approx1d(std::shared_ptr<const DriftModel> model,
                              double y0, std::optional<double> theta_override) {
  if (!model) throw invalid_argument("make_approx1d: null model");
  if (model->dim != 1) throw invalid_argument("make_approx1d: 1D models only");
  Approx1DContext ctx;
  ctx.model = std::move(model);
  ctx.theta = theta_override ? *theta_override : theta_for(*ctx.model).theta(0, 0);
  if (!(ctx.theta > 0)) throw invalid_argument("make_approx1d: theta must be positive");
  ctx.y0 = y0;
  ctx.log_f_inf_y0 = ctx.model->log_f_inf1(y0);
  if (!std::isfinite(ctx.log_f_inf_y0))
    throw invalid_argument("make_approx1d: log f_inf(y0) is not finite");
  return ctx;
}

double h_leading(const Approx1DContext& ctx, double tau, double y) {
  check_tau(tau);
  const double x = ctx.theta * tau;
  // theta sqrt(q)/(1-q) = theta / (2 sinh x); sqrt(q)/(1+sqrt(q)) = 1/(e^x+1)
  const double c1 = ctx.theta / (2.0 * std::sinh(x));
  const double u = std::exp(-x);
  const double p = u / (1.0 + u);
  return c1 * (y - ctx.y0) + p * ctx.model->drift1(y);
}

double log_f_leading(const Approx1DContext& ctx, double tau, double y) {
  check_tau(tau);
  const double x = ctx.theta * tau;
  const double u = std::exp(-x);
  const double one_minus_q = -std::expm1(-2.0 * x);
  const double p = u / (1.0 + u);                    // sqrt(q)/(1+sqrt(q))
  const double c1 = ctx.theta / (2.0 * std::sinh(x));  // theta sqrt(q)/(1-q)
  const double d = y - ctx.y0;
  const double log_f = p * std::log(ctx.theta / (2.0 * kPi)) -
                       0.5 * std::log(one_minus_q) - 0.5 * c1 * d * d +
                       ctx.model->log_f_inf1(y) / (1.0 + u) -
                       p * ctx.log_f_inf_y0;
  if (log_f > 700.0)
    throw numerical_error("f_leading: log-space overflow (|log f| > 700)");
  return log_f;
}

double f_leading(const Approx1DContext& ctx, double tau, double y) {
  return std::exp(log_f_leading(ctx, tau, y));
}

double log_g_leading(const Approx1DContext& ctx, double tau, double y) {
  check_tau(tau);
  const double x = ctx.theta * tau;
  const double u = std::exp(-x);
  const double p = u / (1.0 + u);
  const double c1 = ctx.theta / (2.0 * std::sinh(x));
  const double d = y - ctx.y0;
  return p * std::log(ctx.theta / (2.0 * kPi)) -
         0.5 * std::log(-std::expm1(-2.0 * x)) - 0.5 * c1 * d * d -
         p * (ctx.model->log_f_inf1(y) + ctx.log_f_inf_y0);
}

double g_leading(const Approx1DContext& ctx, double tau, double y) {
  return std::exp(log_g_leading(ctx, tau, y));
}

double b1_correction(const Approx1DContext& ctx, double y) {
  const DriftModel& m = *ctx.model;
  const double theta = ctx.theta;
  const double y0 = ctx.y0;
  const double d = y - y0;
  if (std::abs(d) <= 1e-8) {
    // Taylor limit: integrand ~ (z-y0)(C + D(z-y0) + ...) so
    // b1 -> C/(2 theta) + D (y-y0)/(3 theta)
    const double c = b1_factor(m, theta, y0, y0);
    const double hs = 1e-4;
    const double dgrad = (b1_factor(m, theta, y0, y0 + hs) -
                          b1_factor(m, theta, y0, y0 - hs)) /
                         (2.0 * hs);
    return c / (2.0 * theta) + dgrad * d / (3.0 * theta);
  }
  const double integral = quad::adaptive(
      [&](double z) { return (z - y0) * b1_factor(m, theta, y0, z); },
      y0, y, 1e-14, 1e-10);
  return integral / (theta * d * d);
}

double h_with_b1(const Approx1DContext& ctx, double tau, double y) {
  check_tau(tau);
  const double x = ctx.theta * tau;
  const double u = std::exp(-x);
  const double p = u / (1.0 + u);
  const double c1 = ctx.theta / (2.0 * std::sinh(x));
  const double one_minus_p = -std::expm1(-x);
  return c1 * (y - ctx.y0) +
         p * (ctx.model->drift1(y) + one_minus_p * b1_correction(ctx, y));
}

}  // namespace fpx
