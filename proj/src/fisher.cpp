#include "fpx/fisher.hpp"

#include <cmath>
#include <sstream>

#include "fpx/quadrature.hpp"

namespace fpx {

namespace {

constexpr double kTol = 1e-8;

Mat integrand(const DriftModel& model, const Vec& y, bool tensor_square) {
  if (tensor_square) {
    const Vec a = model.drift(y);
    return Mat(a * a.transpose() * model.f_inf(y));
  }
  return Mat(-model.jacobian(y) * model.f_inf(y));
}

}  // namespace

ThetaEstimate estimate_theta(const DriftModel& model, ThetaForm form) {
  const bool tensor_square =
      form == ThetaForm::tensor_square ||
      (form == ThetaForm::automatic && model.jacobian_discontinuous);
  if (form == ThetaForm::jacobian && model.jacobian_discontinuous)
    throw invalid_argument(
        "estimate_theta: jacobian form requested for a model with "
        "distributional grad A; use the tensor_square form");

  const double L = model.quad_halfwidth;
  Mat prev, cur;
  bool converged = false;
  double diff = 0.0;
  if (model.dim == 1) {
    const double c = model.quad_center(0);
    auto f = [&](double y) { return integrand(model, vec1(y), tensor_square); };
    prev = quad::panels_mat(f, c - L, c + L, 8);
    for (int n = 16; n <= (1 << 13); n *= 2) {
      cur = quad::panels_mat(f, c - L, c + L, n);
      diff = (cur - prev).cwiseAbs().maxCoeff();
      if (diff < kTol) {
        converged = true;
        break;
      }
      prev = cur;
    }
  } else {
    const Vec c = model.quad_center;
    auto f = [&](double x, double y) {
      return integrand(model, vec2(x, y), tensor_square);
    };
    prev = quad::panels2d_mat(f, c(0) - L, c(0) + L, c(1) - L, c(1) + L, 8);
    for (int n = 16; n <= 512; n *= 2) {
      cur = quad::panels2d_mat(f, c(0) - L, c(0) + L, c(1) - L, c(1) + L, n);
      diff = (cur - prev).cwiseAbs().maxCoeff();
      if (diff < kTol) {
        converged = true;
        break;
      }
      prev = cur;
    }
  }
  if (!converged) {
    std::ostringstream oss;
    oss << "estimate_theta: quadrature failed to stabilize to " << kTol
        << "; last iterates\n" << prev << "\nand\n" << cur;
    throw numerical_error(oss.str());
  }

  ThetaEstimate est;
  est.theta = 0.5 * (cur + cur.transpose());  // symmetrize roundoff
  est.quad_error = diff;
  est.source = ThetaEstimate::Source::quadrature;
  Eigen::SelfAdjointEigenSolver<Mat> es(est.theta);
  if (es.eigenvalues().minCoeff() <= 0)
    throw numerical_error("estimate_theta: estimate is not positive definite");
  return est;
}

ThetaEstimate theta_for(const DriftModel& model) {
  if (model.closed_form_theta) {
    ThetaEstimate est;
    est.theta = *model.closed_form_theta;
    est.quad_error = 0.0;
    est.source = ThetaEstimate::Source::closed_form;
    return est;
  }
  return estimate_theta(model);
}

}  // namespace fpx
