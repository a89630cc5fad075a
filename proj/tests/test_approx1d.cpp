#include <doctest.h>

#include <cmath>
#include <memory>
#include <random>
#include <vector>

#include "fpx/approx1d.hpp"
#include "fpx/exact.hpp"
#include "fpx/fisher.hpp"
#include "fpx/models.hpp"

using namespace fpx;

namespace {

std::shared_ptr<const DriftModel> shared(DriftModel m) {
  return std::make_shared<const DriftModel>(std::move(m));
}

struct NamedCtx {
  const char* name;
  Approx1DContext ctx;
};

// catalog contexts with theta passed explicitly (computed once)
std::vector<NamedCtx> catalog_contexts(double y0) {
  std::vector<NamedCtx> out;
  out.push_back({"ou", make_approx1d(shared(make_ou_1d(1.0, 0.0)), y0)});
  out.push_back({"sech", make_approx1d(shared(make_sech_power(1.0, 2.0)), y0)});
  out.push_back({"dryfric", make_approx1d(shared(make_dry_friction()), y0)});
  out.push_back({"student", make_approx1d(shared(make_student_t_1d(0.5)), y0)});
  auto dw = shared(make_double_well_1d({2.0, -2.0}, {1.0, 1.0}, 1.0 / std::sqrt(2.0)));
  out.push_back({"dwell", make_approx1d(dw, y0, estimate_theta(*dw).theta(0, 0))});
  return out;
}

}  // namespace

TEST_CASE("h_leading reduces to the exact OU h") {
  const auto model = shared(make_ou_1d(1.0, 0.0));
  for (double y0 : {-2.0, 0.5}) {
    const Approx1DContext ctx = make_approx1d(model, y0);
    for (int i = 0; i < 21; ++i) {
      const double tau = 0.05 + 0.15 * i;
      const double q = std::exp(-2.0 * tau);
      const double sq = std::sqrt(q);
      for (int j = 0; j < 21; ++j) {
        const double y = -5.0 + 0.5 * j;
        const double exact_ou =
            sq * (y - y0) / (1.0 - q) + sq * (0.0 - y) / (1.0 + sq);
        CHECK(std::abs(h_leading(ctx, tau, y) - exact_ou) < 1e-12);
      }
    }
  }
}

TEST_CASE("h_leading vanishes at large tau") {
  for (auto& [name, ctx] : catalog_contexts(-1.0)) {
    const double tau = 30.0 / ctx.theta;
    for (double y : {-3.0, 0.0, 2.0}) {
      CHECK(std::abs(h_leading(ctx, tau, y)) < 1e-10);
    }
  }
}

TEST_CASE("h_leading frozen sech values") {
  // theta = 4/3, y0 = -2, tau = 0.5; expected values from an independent
  // arbitrary-precision evaluation of the formula
  const Approx1DContext ctx =
      make_approx1d(shared(make_sech_power(1.0, 2.0)), -2.0);
  REQUIRE(ctx.theta == doctest::Approx(4.0 / 3.0).epsilon(1e-15));
  CHECK(h_leading(ctx, 0.5, 0.0) ==
        doctest::Approx(1.859189294725206).epsilon(1e-13));
  CHECK(h_leading(ctx, 0.5, 1.0) ==
        doctest::Approx(2.272052008101477).epsilon(1e-13));
}

TEST_CASE("f_leading is exact for the OU model") {
  const auto model = shared(make_ou_1d(1.0, 0.0));
  const Approx1DContext ctx = make_approx1d(model, 2.0);
  for (double tau : {0.01, 0.1, 1.0, 5.0}) {
    for (int j = 0; j <= 80; ++j) {
      const double y = -8.0 + 0.2 * j;
      const double rel = std::expm1(log_f_leading(ctx, tau, y) -
                                    exact::log_ou_density_1d(1.0, 0.0, tau, y, 2.0));
      CHECK(std::abs(rel) < 1e-12);
    }
  }
}

TEST_CASE("f_leading approaches f_inf at large tau") {
  for (auto& [name, ctx] : catalog_contexts(-1.5)) {
    const double tau = 30.0 / ctx.theta;
    for (double y : {-2.0, 0.0, 1.0, 3.0}) {
      const double rel =
          std::expm1(log_f_leading(ctx, tau, y) - ctx.model->log_f_inf1(y));
      CHECK(std::abs(rel) < 1e-8);
    }
  }
}

TEST_CASE("f_leading frozen sech value") {
  const Approx1DContext ctx =
      make_approx1d(shared(make_sech_power(1.0, 2.0)), -2.0);
  CHECK(f_leading(ctx, 0.5, 0.0) ==
        doctest::Approx(0.2109883706018373).epsilon(1e-12));
}

TEST_CASE("g_leading: reciprocity, positivity, f = g f_inf") {
  std::mt19937 rng(1234);
  std::uniform_real_distribution<double> uy(-4.0, 4.0);
  std::uniform_real_distribution<double> ut(0.05, 5.0);
  for (auto& [name, ctx0] : catalog_contexts(0.0)) {
    auto model = ctx0.model;
    const double theta = ctx0.theta;
    for (int k = 0; k < 100; ++k) {
      const double ya = uy(rng), yb = uy(rng), tau = ut(rng);
      const Approx1DContext ca = make_approx1d(model, ya, theta);
      const Approx1DContext cb = make_approx1d(model, yb, theta);
      const double gab = g_leading(ca, tau, yb);
      const double gba = g_leading(cb, tau, ya);
      CHECK(std::abs(gab - gba) / std::max(gab, 1e-300) < 1e-12);
      CHECK(gab > 0.0);

      const double f = f_leading(ca, tau, yb);
      CHECK(std::abs(f - gab * model->f_inf1(yb)) / f < 1e-12);
    }
  }
}

TEST_CASE("b1 vanishes for the OU model") {
  const Approx1DContext ctx = make_approx1d(shared(make_ou_1d(1.7, 0.3)), 1.2);
  for (double y = -4.0; y <= 4.0; y += 0.5) {
    CHECK(std::abs(b1_correction(ctx, y)) < 1e-10);
  }
}

TEST_CASE("b1 sech value against independent quadrature") {
  const Approx1DContext ctx =
      make_approx1d(shared(make_sech_power(1.0, 2.0)), -2.0);

  // frozen from an arbitrary-precision evaluation of the integral
  CHECK(b1_correction(ctx, 0.0) ==
        doctest::Approx(-0.3325348704986929).epsilon(1e-8));

  // high-resolution trapezoid oracle with the analytic second derivative
  const double theta = ctx.theta, y0 = -2.0, y = 0.0;
  const int n = 200000;
  const double h = (y - y0) / n;
  double acc = 0.0;
  auto integrand = [&](double z) {
    const double t = std::tanh(z), s = 1.0 / std::cosh(z);
    const double A = -2.0 * t, Ap = -2.0 * s * s, App = 4.0 * s * s * t;
    return (z - y0) * (App + (A + 0.5 * theta * (z - y0)) * (Ap + theta));
  };
  for (int i = 0; i <= n; ++i) {
    const double w = (i == 0 || i == n) ? 0.5 : 1.0;
    acc += w * integrand(y0 + i * h);
  }
  const double oracle = acc * h / (theta * (y - y0) * (y - y0));
  CHECK(b1_correction(ctx, 0.0) == doctest::Approx(oracle).epsilon(1e-8));
}

TEST_CASE("b1 is continuous through y = y0") {
  const Approx1DContext ctx =
      make_approx1d(shared(make_sech_power(1.0, 2.0)), 0.7);
  const double limit = b1_correction(ctx, 0.7);
  CHECK(std::isfinite(limit));
  // |b1'| ~ 0.53 at this point; both approaches converge to the limit value
  for (double d : {1e-3, 1e-5, 1e-7, 1e-9}) {
    CHECK(std::abs(b1_correction(ctx, 0.7 + d) - limit) < d + 1e-9);
    CHECK(std::abs(b1_correction(ctx, 0.7 - d) - limit) < d + 1e-9);
  }
}

TEST_CASE("h_with_b1 equals h_leading when b1 vanishes") {
  const Approx1DContext ctx = make_approx1d(shared(make_ou_1d(0.8, -0.4)), 1.0);
  for (double tau : {0.1, 1.0}) {
    for (double y : {-2.0, 0.5, 3.0}) {
      CHECK(h_with_b1(ctx, tau, y) ==
            doctest::Approx(h_leading(ctx, tau, y)).epsilon(1e-12));
    }
  }
  const Approx1DContext sech =
      make_approx1d(shared(make_sech_power(1.0, 2.0)), -2.0);
  CHECK(std::abs(h_with_b1(sech, 30.0, 1.0)) < 1e-10);
}

TEST_CASE("short-time limit is the heat kernel near equilibrium") {
  for (auto& [name, ctx] : catalog_contexts(0.0)) {
    const double tau = 1e-4 / ctx.theta;
    const double w = 4.0 * std::sqrt(tau);
    for (double frac : {-1.0, -0.3, 0.4, 1.0}) {
      const double y = frac * w;
      const double kern = std::exp(-y * y / (4.0 * tau)) / std::sqrt(4.0 * kPi * tau);
      CHECK(f_leading(ctx, tau, y) == doctest::Approx(kern).epsilon(1e-2));
    }
  }
}

TEST_CASE("long-time sup distance to f_inf decays monotonically") {
  for (auto& [name, ctx] : catalog_contexts(-1.0)) {
    double prev = 1e300;
    for (double x : {5.0, 6.0, 8.0, 10.0, 14.0, 20.0}) {
      const double tau = x / ctx.theta;
      double sup = 0.0;
      for (double y = -5.0; y <= 5.0; y += 0.25) {
        sup = std::max(sup, std::abs(f_leading(ctx, tau, y) -
                                     ctx.model->f_inf1(y)));
      }
      CHECK(sup < prev);
      prev = sup;
    }
  }
}

TEST_CASE("laurent expansion: h - (y-y0)/2tau - A/2 is O(tau)") {
  const Approx1DContext ctx =
      make_approx1d(shared(make_sech_power(1.0, 2.0)), -2.0);
  const double y = -1.0;
  auto err = [&](double tau) {
    return std::abs(h_leading(ctx, tau, y) - (y + 2.0) / (2.0 * tau) -
                    0.5 * ctx.model->drift1(y));
  };
  const double e1 = err(1e-3), e2 = err(5e-4), e3 = err(2.5e-4);
  CHECK(e1 / e2 == doctest::Approx(2.0).epsilon(0.15));
  CHECK(e2 / e3 == doctest::Approx(2.0).epsilon(0.15));
}

TEST_CASE("h is minus the log-derivative of g") {
  const Approx1DContext ctx =
      make_approx1d(shared(make_sech_power(1.0, 2.0)), -2.0);
  const double fd_step = 1e-5;
  for (double tau : {0.2, 0.7, 2.0}) {
    for (double y : {-2.5, -0.5, 0.0, 1.5}) {
      const double fd = -(log_g_leading(ctx, tau, y + fd_step) -
                          log_g_leading(ctx, tau, y - fd_step)) /
                        (2.0 * fd_step);
      CHECK(std::abs(fd - h_leading(ctx, tau, y)) < 1e-6);
    }
  }
}

TEST_CASE("approx1d rejects invalid input") {
  const auto model = shared(make_ou_1d(1.0, 0.0));
  const Approx1DContext ctx = make_approx1d(model, 0.0);
  CHECK_THROWS_AS(h_leading(ctx, 0.0, 1.0), invalid_argument);
  CHECK_THROWS_AS(f_leading(ctx, -1.0, 1.0), invalid_argument);
  CHECK_THROWS_AS(make_approx1d(shared(make_student_t_2d(1.0, 1.0, 5.0)), 0.0),
                  invalid_argument);
  CHECK_THROWS_AS(make_approx1d(model, 0.0, -2.0), invalid_argument);
}
