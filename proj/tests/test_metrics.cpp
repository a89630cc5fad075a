#include <doctest.h>

#include <cmath>
#include <memory>

#include "fpx/approx1d.hpp"
#include "fpx/exact.hpp"
#include "fpx/fisher.hpp"
#include "fpx/metrics.hpp"
#include "fpx/models.hpp"

using namespace fpx;

namespace {

DensityField field_1d(double halfwidth, int n,
                      const std::function<double(double)>& fn) {
  DensityField f;
  f.dim = 1;
  f.axes = {uniform_axis(halfwidth, n)};
  f.values.resize(n);
  for (int i = 0; i < n; ++i) f.values[i] = fn(f.axes[0][i]);
  return f;
}

double gauss(double y, double m, double v) {
  return std::exp(-0.5 * (y - m) * (y - m) / v) / std::sqrt(2.0 * kPi * v);
}

}  // namespace

TEST_CASE("l1 error basics") {
  const DensityField f = field_1d(8.0, 321, [](double y) { return gauss(y, 0, 1); });
  CHECK(l1_error(f, f) == 0.0);

  // two far-apart unit bumps: total variation 2
  const DensityField b1 =
      field_1d(8.0, 1601, [](double y) { return gauss(y, -3.0, 0.01); });
  const DensityField b2 =
      field_1d(8.0, 1601, [](double y) { return gauss(y, 3.0, 0.01); });
  CHECK(l1_error(b1, b2) == doctest::Approx(2.0).epsilon(1e-6));

  const DensityField other = field_1d(8.0, 161, [](double) { return 0.0; });
  CHECK_THROWS_AS(l1_error(f, other), invalid_argument);
}

TEST_CASE("approximation vs exact OU on a shared grid") {
  const auto model = std::make_shared<const DriftModel>(make_ou_1d(1.0, 0.0));
  const Approx1DContext ctx = make_approx1d(model, 2.0);
  const DensityField fa =
      field_1d(8.0, 321, [&](double y) { return f_leading(ctx, 1.0, y); });
  const DensityField fe = field_1d(8.0, 321, [&](double y) {
    return exact::ou_density_1d(1.0, 0.0, 1.0, y, 2.0);
  });
  CHECK(l1_error(fa, fe) < 1e-10);
  const ErrorReport rep = compare(fa, fe);
  CHECK(rep.l1 < 1e-10);
  CHECK(rep.linf < 1e-10);
  CHECK(rep.grid_id == "321");
}

TEST_CASE("mass of standard fields") {
  const DensityField ou = field_1d(8.0, 321, [](double y) {
    return exact::ou_density_1d(1.0, 0.0, 1.0, y, 2.0);
  });
  CHECK(mass(ou) == doctest::Approx(1.0).epsilon(1e-8));

  for (const DriftModel& m : {make_ou_1d(1.0, 0.0), make_sech_power(1.0, 2.0)}) {
    const DensityField fi =
        field_1d(12.0, 801, [&](double y) { return m.f_inf1(y); });
    CHECK(mass(fi) == doctest::Approx(1.0).epsilon(1e-6));
  }

  // leading order is not exactly normalized off-OU; record the deviation
  const auto sech = std::make_shared<const DriftModel>(make_sech_power(1.0, 2.0));
  const Approx1DContext ctx = make_approx1d(sech, -2.0);
  const double tau = 1.0 / ctx.theta;
  const DensityField fa =
      field_1d(14.0, 2001, [&](double y) { return f_leading(ctx, tau, y); });
  const double m = mass(fa);
  MESSAGE("sech approx mass at theta*tau=1: ", m);
  CHECK(std::abs(m - 1.0) < 0.05);
}

TEST_CASE("trapezoid error scales as the square of the step") {
  // integrand with non-matching boundary derivatives
  auto trap_err = [](int n) {
    DensityField f;
    f.dim = 1;
    f.axes = {std::vector<double>(n)};
    f.values.resize(n);
    for (int i = 0; i < n; ++i) {
      f.axes[0][i] = static_cast<double>(i) / (n - 1);
      f.values[i] = f.axes[0][i] * f.axes[0][i] * f.axes[0][i];
    }
    return std::abs(mass(f) - 0.25);
  };
  const double e1 = trap_err(101), e2 = trap_err(201);
  const double slope = std::log(e1 / e2) / std::log(2.0);
  CHECK(slope > 1.9);
  CHECK(slope < 2.1);
}

TEST_CASE("reciprocity defects of analytic methods") {
  const auto sech = std::make_shared<const DriftModel>(make_sech_power(1.0, 2.0));
  const double theta = theta_for(*sech).theta(0, 0);
  auto g_approx = [&](double tau, const Vec& y, const Vec& y0) {
    return g_leading(make_approx1d(sech, y0(0), theta), tau, y(0));
  };
  std::vector<std::pair<Vec, Vec>> pairs;
  for (double a = -2.0; a < 2.01; a += 1.0)
    for (double b = a + 0.7; b < 3.01; b += 1.1)
      pairs.emplace_back(vec1(a), vec1(b));
  CHECK(reciprocity_defect(g_approx, 1.0, pairs) < 1e-10);

  auto g_dry = [](double tau, const Vec& y, const Vec& y0) {
    return exact::dryfric_g(tau, y(0), y0(0));
  };
  CHECK(reciprocity_defect(g_dry, 1.0, pairs) < 1e-12);
}
