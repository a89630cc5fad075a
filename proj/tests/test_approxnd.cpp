#include <doctest.h>

#include <cmath>
#include <memory>
#include <random>

#include "fpx/approx1d.hpp"
#include "fpx/approxnd.hpp"
#include "fpx/exact.hpp"
#include "fpx/fisher.hpp"
#include "fpx/models.hpp"
#include "fpx/quadrature.hpp"

using namespace fpx;

namespace {

std::shared_ptr<const DriftModel> shared(DriftModel m) {
  return std::make_shared<const DriftModel>(std::move(m));
}

// line-integral Omega evaluated directly in the test (independent route)
double log_omega_by_line(const DriftModel& m, const Mat& S, const Vec& mu,
                         const Vec& y) {
  const Vec d = y - mu;
  return quad::adaptive(
      [&](double s) { return d.dot(S * m.drift(Vec(mu + s * d))); }, 0.0, 1.0,
      1e-13, 1e-10);
}

// product of two identical 1D sech models: diagonal theta with equal entries
DriftModel make_sech_product() {
  const DriftModel base = make_sech_power(1.0, 2.0);
  DriftModel m;
  m.id = "sech_product";
  m.dim = 2;
  m.drift = [base](const Vec& y) {
    return vec2(base.drift1(y(0)), base.drift1(y(1)));
  };
  m.jacobian = [base](const Vec& y) {
    Mat j = Mat::Zero(2, 2);
    j(0, 0) = base.jacobian1(y(0));
    j(1, 1) = base.jacobian1(y(1));
    return j;
  };
  m.log_f_inf = [base](const Vec& y) {
    return base.log_f_inf(vec1(y(0))) + base.log_f_inf(vec1(y(1)));
  };
  m.log_norm = 2.0 * base.log_norm;
  Mat th = Mat::Zero(2, 2);
  th(0, 0) = th(1, 1) = (*base.closed_form_theta)(0, 0);
  m.closed_form_theta = th;
  m.mean_inf = vec2(0.0, 0.0);
  m.quad_center = vec2(0.0, 0.0);
  m.quad_halfwidth = base.quad_halfwidth;
  return m;
}

}  // namespace

TEST_CASE("matrix kernel reconstruction and commutation") {
  Mat theta(2, 2);
  theta << 2.0, 0.5, 0.5, 1.0;
  const MatrixKernel k = MatrixKernel::from_theta(theta);
  const Mat rebuilt = k.eigvecs * k.eigvals.asDiagonal() * k.eigvecs.transpose();
  CHECK((rebuilt - theta).cwiseAbs().maxCoeff() < 1e-12);

  const Mat q = k.q(0.7);
  CHECK((q * theta - theta * q).cwiseAbs().maxCoeff() < 1e-10);

  // semigroup property of q
  const Mat q_sum = k.q(0.9);
  const Mat q_prod = k.q(0.4) * k.q(0.5);
  CHECK((q_sum - q_prod).cwiseAbs().maxCoeff() < 1e-12);

  Mat bad(2, 2);
  bad << 1.0, 0.5, -0.5, 1.0;
  CHECK_THROWS_AS(MatrixKernel::from_theta(bad), invalid_argument);
  Mat npd(2, 2);
  npd << 1.0, 2.0, 2.0, 1.0;
  CHECK_THROWS_AS(MatrixKernel::from_theta(npd), invalid_argument);
}

TEST_CASE("rho endpoints and frozen value") {
  Mat theta = Mat::Zero(2, 2);
  theta(0, 0) = 1.0;
  theta(1, 1) = 3.0;
  const MatrixKernel k = MatrixKernel::from_theta(theta);
  CHECK(rho(k, 0.0) == 0.5);
  CHECK(std::abs(rho(k, 40.0)) < 1e-10);
  // (1/2)(e^-1/(1+e^-1) + e^-3/(1+e^-3)), scalar evaluation oracle
  CHECK(rho(k, 1.0) == doctest::Approx(0.15818364727378095).epsilon(1e-14));
}

TEST_CASE("omega: 1d reduction") {
  const auto model = shared(make_sech_power(1.0, 2.0));
  const ApproxNDContext ctx = make_approxnd(model, vec1(-2.0));
  for (double tau : {0.2, 1.0}) {
    const Mat S = ctx.kernel.S(tau);
    for (double y : {-2.0, 0.5, 3.0}) {
      const double closed =
          S(0, 0) * (model->log_f_inf(vec1(y)) - model->log_f_inf(vec1(0.0)));
      CHECK(log_omega(ctx, tau, vec1(y)) == doctest::Approx(closed).epsilon(1e-12));
      CHECK(std::abs(log_omega(ctx, tau, vec1(y)) -
                     log_omega_by_line(*model, S, ctx.mu_inf, vec1(y))) < 1e-10);
    }
  }
}

TEST_CASE("omega: symmetric OU closed form vs quadrature") {
  Mat a(2, 2);
  a << 1.0, 0.3, 0.3, 2.0;
  const auto model = shared(make_ou_nd(a, vec2(0.0, 0.0)));
  const ApproxNDContext ctx = make_approxnd(model, vec2(1.0, -1.0));
  for (double tau : {0.3, 1.5}) {
    const Mat S = ctx.kernel.S(tau);
    for (const Vec& y : {vec2(0.7, -0.4), vec2(-1.5, 2.0)}) {
      const double closed = -0.5 * y.dot(S * (a * y));
      CHECK(log_omega(ctx, tau, y) == doctest::Approx(closed).epsilon(1e-12));
      CHECK(std::abs(log_omega(ctx, tau, y) -
                     log_omega_by_line(*model, S, ctx.mu_inf, y)) < 1e-10);
    }
  }
  CHECK(omega(ctx, 0.7, vec2(0.0, 0.0)) == 1.0);
}

TEST_CASE("omega: bivariate student closed form vs quadrature") {
  const auto model = shared(make_student_t_2d(1.0, 3.0, 5.0));
  const ApproxNDContext ctx = make_approxnd(model, vec2(-2.0, 2.0));
  DriftModel stripped = *model;
  stripped.log_omega_closed = nullptr;
  const ApproxNDContext ctx_line =
      make_approxnd(shared(std::move(stripped)), vec2(-2.0, 2.0));
  for (double tau : {0.1, 0.6, 2.5}) {
    for (const Vec& y : {vec2(0.5, 0.8), vec2(-2.0, 2.0), vec2(3.0, -1.0)}) {
      CHECK(std::abs(log_omega(ctx, tau, y) - log_omega(ctx_line, tau, y)) < 1e-8);
    }
  }
}

TEST_CASE("f_leading_nd is exact for symmetric OU") {
  Mat a1 = Mat::Zero(2, 2);
  a1(0, 0) = 1.0;
  a1(1, 1) = 2.0;
  Mat a2(2, 2);
  a2 << 1.2, 0.4, 0.4, 0.9;
  for (const Mat& a : {a1, a2}) {
    const auto model = shared(make_ou_nd(a, vec2(0.0, 0.0)));
    const ApproxNDContext ctx = make_approxnd(model, vec2(1.0, -1.0));
    Eigen::MatrixXd ax = a;
    for (double tau : {0.1, 1.0, 5.0}) {
      for (int i = 0; i < 15; ++i) {
        for (int j = 0; j < 15; ++j) {
          const Vec y = vec2(-4.0 + 8.0 * i / 14.0, -4.0 + 8.0 * j / 14.0);
          const double rel = std::expm1(
              log_f_leading_nd(ctx, tau, y) -
              exact::log_ou_density_nd(ax, tau, y, Eigen::Vector2d(1.0, -1.0)));
          CHECK(std::abs(rel) < 1e-10);
        }
      }
    }
  }
}

TEST_CASE("equal-speed product model factorizes into 1d approximations") {
  const auto model2 = shared(make_sech_product());
  const auto model1 = shared(make_sech_power(1.0, 2.0));
  const ApproxNDContext ctx2 = make_approxnd(model2, vec2(-2.0, 1.0));
  const Approx1DContext cx = make_approx1d(model1, -2.0);
  const Approx1DContext cy = make_approx1d(model1, 1.0);
  for (double tau : {0.15, 0.8, 3.0}) {
    for (const Vec& y : {vec2(0.3, 0.3), vec2(-1.0, 2.2), vec2(1.7, -0.6)}) {
      const double lhs = log_f_leading_nd(ctx2, tau, y);
      const double rhs =
          log_f_leading(cx, tau, y(0)) + log_f_leading(cy, tau, y(1));
      CHECK(std::abs(std::expm1(lhs - rhs)) < 1e-10);
    }
  }
}

TEST_CASE("g_leading_nd reciprocity and long-time limit") {
  std::mt19937 rng(99);
  std::uniform_real_distribution<double> uy(-3.0, 3.0);
  std::uniform_real_distribution<double> ut(0.05, 4.0);

  const auto student = shared(make_student_t_2d(1.0, 3.0, 5.0));
  const auto dwell = shared(make_double_well_2d(Mat::Identity(2, 2), vec2(2, 0),
                                                vec2(-2, 0), {1.0, 1.0}, 0.5));
  const Mat theta_dw = estimate_theta(*dwell).theta;

  for (int which = 0; which < 2; ++which) {
    const auto& model = which == 0 ? student : dwell;
    std::optional<Mat> ov;
    if (which == 1) ov = theta_dw;
    for (int k = 0; k < 100; ++k) {
      const Vec ya = vec2(uy(rng), uy(rng));
      const Vec yb = vec2(uy(rng), uy(rng));
      const double tau = ut(rng);
      const ApproxNDContext ca = make_approxnd(model, ya, ov);
      const ApproxNDContext cb = make_approxnd(model, yb, ov);
      const double gab = g_leading_nd(ca, tau, yb);
      const double gba = g_leading_nd(cb, tau, ya);
      CHECK(std::abs(gab - gba) / std::max(gab, 1e-300) < 1e-10);
      CHECK(gab > 0.0);
    }
  }

  // g -> 1 uniformly on compact sets
  const ApproxNDContext ctx = make_approxnd(student, vec2(-2.0, 2.0));
  const double tau_inf = 40.0 / ctx.kernel.eigvals.minCoeff();
  for (const Vec& y : {vec2(0.0, 0.0), vec2(2.0, -1.0), vec2(-3.0, 3.0)}) {
    CHECK(g_leading_nd(ctx, tau_inf, y) == doctest::Approx(1.0).epsilon(1e-8));
  }
}

TEST_CASE("1d model through approxnd equals approx1d") {
  const auto model = shared(make_sech_power(1.0, 2.0));
  const ApproxNDContext nd = make_approxnd(model, vec1(-2.0));
  const Approx1DContext od = make_approx1d(model, -2.0);
  for (double tau : {0.05, 0.5, 2.0, 10.0}) {
    for (double y : {-3.0, -0.2, 1.4, 4.0}) {
      const double a = log_f_leading_nd(nd, tau, vec1(y));
      const double b = log_f_leading(od, tau, y);
      CHECK(std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(b)));
    }
  }
}

TEST_CASE("short-time heat kernel in 2d") {
  const auto model = shared(make_student_t_2d(1.0, 3.0, 5.0));
  const ApproxNDContext ctx = make_approxnd(model, vec2(0.0, 0.0));
  const double tau = 1e-4 / ctx.kernel.eigvals.minCoeff();
  const double w = 4.0 * std::sqrt(tau);
  for (const Vec& dir : {vec2(1.0, 0.0), vec2(0.0, 1.0), vec2(0.6, -0.8)}) {
    for (double frac : {0.25, 0.7, 1.0}) {
      const Vec y = frac * w * dir;
      const double kern = std::exp(-y.squaredNorm() / (4.0 * tau)) /
                          (4.0 * kPi * tau);
      CHECK(f_leading_nd(ctx, tau, y) == doctest::Approx(kern).epsilon(1e-2));
    }
  }
}

TEST_CASE("long-time sup distance to f_inf decays") {
  const auto model = shared(make_student_t_2d(1.0, 3.0, 5.0));
  const ApproxNDContext ctx = make_approxnd(model, vec2(-2.0, 2.0));
  const double lmin = ctx.kernel.eigvals.minCoeff();
  double prev = 1e300;
  for (double x : {5.0, 8.0, 12.0, 20.0}) {
    double sup = 0.0;
    for (double y1 = -3.0; y1 <= 3.0; y1 += 0.5) {
      for (double y2 = -3.0; y2 <= 3.0; y2 += 0.5) {
        const Vec y = vec2(y1, y2);
        sup = std::max(sup, std::abs(f_leading_nd(ctx, x / lmin, y) -
                                     model->f_inf(y)));
      }
    }
    CHECK(sup < prev);
    prev = sup;
  }
}

TEST_CASE("curl defect diagnostics") {
  // theta proportional to I on a conservative field: B is a gradient
  const auto prod = shared(make_sech_product());
  const ApproxNDContext cp = make_approxnd(prod, vec2(0.5, -0.5));
  CHECK(curl_defect(cp, 0.3, vec2(0.7, 1.1)) < 1e-8);

  // bivariate student: defect linear in tau with positive slope
  const auto st = shared(make_student_t_2d(1.0, 3.0, 5.0));
  const ApproxNDContext cs = make_approxnd(st, vec2(-2.0, 2.0));
  const Vec y = vec2(1.2, 0.8);
  auto fit_line = [&](const std::vector<double>& taus) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (double t : taus) {
      const double d = curl_defect(cs, t, y);
      sx += t;
      sy += d;
      sxx += t * t;
      sxy += t * d;
    }
    const double n = static_cast<double>(taus.size());
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    return std::pair<double, double>{slope, (sy - slope * sx) / n};
  };
  {
    const auto [slope, intercept] = fit_line({0.2, 0.1, 0.05, 0.025});
    CHECK(slope > 0.0);
    // higher-order commutator terms bias the intercept over this range;
    // it must still be small relative to the sampled defects
    CHECK(std::abs(intercept) < 0.02 * curl_defect(cs, 0.2, y));
  }
  {
    const auto [slope, intercept] = fit_line({0.02, 0.01, 0.005, 0.0025});
    CHECK(slope > 0.0);
    CHECK(std::abs(intercept) < 1e-6);
  }

  // defect dies off at large tau
  CHECK(curl_defect(cs, 60.0, y) < 1e-12);
}

TEST_CASE("approxnd rejects invalid input") {
  const auto model = shared(make_student_t_2d(1.0, 3.0, 5.0));
  CHECK_THROWS_AS(make_approxnd(model, vec1(0.0)), invalid_argument);
  const ApproxNDContext ctx = make_approxnd(model, vec2(0.0, 0.0));
  CHECK_THROWS_AS(log_f_leading_nd(ctx, 0.0, vec2(1.0, 1.0)), invalid_argument);
  Mat skew(2, 2);
  skew << 1.0, 0.2, -0.2, 1.0;
  CHECK_THROWS_AS(make_approxnd(model, vec2(0.0, 0.0), skew), invalid_argument);
}
