#include "fpx/approxnd.hpp"

#include <cmath>
#include <sstream>

#include "fpx/fisher.hpp"
#include "fpx/quadrature.hpp"

namespace fpx {

namespace {

void check_tau(double tau) {
  if (!(tau > 0)) throw invalid_argument("approxnd: tau must be positive");
}

}  // namespace

MatrixKernel MatrixKernel::from_theta(const Mat& theta) {
  if (theta.rows() != theta.cols())
    throw invalid_argument("MatrixKernel: theta must be square");
  if ((theta - theta.transpose()).cwiseAbs().maxCoeff() > 1e-10)
    throw invalid_argument(
        "MatrixKernel: theta must be symmetric (non-conservative generators "
        "are out of scope here)");
  Eigen::SelfAdjointEigenSolver<Mat> es(theta);
  if (es.eigenvalues().minCoeff() <= 0)
    throw invalid_argument("MatrixKernel: theta must be positive definite");
  MatrixKernel k;
  k.theta = 0.5 * (theta + theta.transpose());
  k.eigvals = es.eigenvalues();
  k.eigvecs = es.eigenvectors();
  return k;
}

Mat MatrixKernel::fn(const std::function<double(double)>& scalar) const {
  Vec d(eigvals.size());
  for (int i = 0; i < eigvals.size(); ++i) d(i) = scalar(eigvals(i));
  return eigvecs * d.asDiagonal() * eigvecs.transpose();
}

Mat MatrixKernel::q(double tau) const {
  return fn([tau](double l) { return std::exp(-2.0 * l * tau); });
}

Mat MatrixKernel::sqrt_q(double tau) const {
  return fn([tau](double l) { return std::exp(-l * tau); });
}

Mat MatrixKernel::S(double tau) const {
  return fn([tau](double l) {
    const double u = std::exp(-l * tau);
    return u / (1.0 + u);
  });
}

Mat MatrixKernel::M(double tau) const {
  return fn([tau](double l) { return l / (2.0 * std::sinh(l * tau)); });
}

double MatrixKernel::log_det_I_minus_q(double tau) const {
  double s = 0.0;
  for (int i = 0; i < eigvals.size(); ++i)
    s += std::log(-std::expm1(-2.0 * eigvals(i) * tau));
  return s;
}

double MatrixKernel::log_det_theta_over_2pi() const {
  double s = 0.0;
  for (int i = 0; i < eigvals.size(); ++i)
    s += std::log(eigvals(i) / (2.0 * kPi));
  return s;
}

double rho(const MatrixKernel& kernel, double tau) {
  if (tau < 0) throw invalid_argument("rho: tau must be nonnegative");
  double tr = 0.0;
  for (int i = 0; i < kernel.eigvals.size(); ++i) {
    const double u = std::exp(-kernel.eigvals(i) * tau);
    tr += u / (1.0 + u);
  }
  return tr / kernel.dim();
}

ApproxNDContext make_approxnd(std::shared_ptr<const DriftModel> model,
                              const Vec& y0, std::optional<Mat> theta_override) {
  if (!model) throw invalid_argument("make_approxnd: null model");
  if (y0.size() != model->dim)
    throw invalid_argument("make_approxnd: y0 dimension mismatch");
  ApproxNDContext ctx;
  ctx.model = std::move(model);
  const Mat theta = theta_override ? *theta_override : theta_for(*ctx.model).theta;
  if (theta.rows() != ctx.model->dim)
    throw invalid_argument("make_approxnd: theta dimension mismatch");
  ctx.kernel = MatrixKernel::from_theta(theta);
  ctx.y0 = y0;
  ctx.mu_inf = ctx.model->mean_inf;
  ctx.log_f_inf_mu = ctx.model->log_f_inf_full(ctx.mu_inf);
  return ctx;
}

double log_omega(const ApproxNDContext& ctx, double tau, const Vec& y) {
  check_tau(tau);
  const Mat S = ctx.kernel.S(tau);
  if (ctx.model->log_omega_closed)
    return ctx.model->log_omega_closed(y, S, ctx.mu_inf);
  if (ctx.model->dim == 1) {
    // 1D reduction: Omega = (f_inf(y)/f_inf(mu))^{sqrt q/(1+sqrt q)}
    return S(0, 0) *
           (ctx.model->log_f_inf(y) - ctx.model->log_f_inf(ctx.mu_inf));
  }
  const Vec d = y - ctx.mu_inf;
  if (d.cwiseAbs().maxCoeff() == 0.0) return 0.0;
  auto integrand = [&](double s) {
    const Vec x = ctx.mu_inf + s * d;
    const double v = d.dot(S * ctx.model->drift(x));
    if (!std::isfinite(v)) {
      std::ostringstream oss;
      oss << "omega: non-finite integrand on the path at s=" << s;
      throw numerical_error(oss.str());
    }
    return v;
  };
  return quad::adaptive(integrand, 0.0, 1.0, 1e-13, 1e-9);
}

double omega(const ApproxNDContext& ctx, double tau, const Vec& y) {
  return std::exp(log_omega(ctx, tau, y));
}

double log_f_leading_nd(const ApproxNDContext& ctx, double tau, const Vec& y) {
  return log_g_leading_nd(ctx, tau, y) + ctx.model->log_f_inf_full(y);
}

double f_leading_nd(const ApproxNDContext& ctx, double tau, const Vec& y) {
  const double lf = log_f_leading_nd(ctx, tau, y);
  if (lf > 700.0)
    throw numerical_error("f_leading_nd: log-space overflow (|log f| > 700)");
  return std::exp(lf);
}

double log_g_leading_nd(const ApproxNDContext& ctx, double tau, const Vec& y) {
  check_tau(tau);
  if (y.size() != ctx.model->dim)
    throw invalid_argument("approxnd: dimension mismatch");
  const Vec d = y - ctx.y0;
  const Mat M = ctx.kernel.M(tau);
  const double r = rho(ctx.kernel, tau);
  return -0.5 * ctx.kernel.log_det_I_minus_q(tau) - 0.5 * d.dot(M * d) +
         r * (ctx.kernel.log_det_theta_over_2pi() - 2.0 * ctx.log_f_inf_mu) -
         log_omega(ctx, tau, y) - log_omega(ctx, tau, ctx.y0);
}

double g_leading_nd(const ApproxNDContext& ctx, double tau, const Vec& y) {
  return std::exp(log_g_leading_nd(ctx, tau, y));
}

double curl_defect(const ApproxNDContext& ctx, double tau, const Vec& y) {
  check_tau(tau);
  const int m = ctx.model->dim;
  if (m == 1) return 0.0;
  const Mat S = ctx.kernel.S(tau);
  const double h = 1e-5;
  Mat grad_b(m, m);  // grad_b(i,j) = dB_i/dy_j
  for (int j = 0; j < m; ++j) {
    Vec yp = y, ym = y;
    yp(j) += h;
    ym(j) -= h;
    const Vec bp = S * ctx.model->drift(yp);
    const Vec bm = S * ctx.model->drift(ym);
    for (int i = 0; i < m; ++i) grad_b(i, j) = (bp(i) - bm(i)) / (2.0 * h);
  }
  return (grad_b - grad_b.transpose()).cwiseAbs().maxCoeff();
}

}  // namespace fpx
