#include <doctest.h>

#include <cmath>
#include <memory>
#include <unsupported/Eigen/MatrixFunctions>

#include "fpx/approx1d.hpp"
#include "fpx/exact.hpp"
#include "fpx/extensions.hpp"
#include "fpx/models.hpp"

using namespace fpx;
using namespace fpx::ext;

namespace {

std::shared_ptr<const DriftModel> shared(DriftModel m) {
  return std::make_shared<const DriftModel>(std::move(m));
}

DriftModel make_const_drift(double c) {
  DriftModel m;
  m.id = "const";
  m.dim = 1;
  m.drift = [c](const Vec&) { return vec1(c); };
  m.jacobian = [](const Vec&) {
    Mat j(1, 1);
    j(0, 0) = 0.0;
    return j;
  };
  m.log_f_inf = [c](const Vec& y) { return c * y(0); };
  m.mean_inf = vec1(0.0);
  m.quad_center = vec1(0.0);
  return m;
}

}  // namespace

TEST_CASE("far-field g is exactly the ballistic part of dry friction") {
  // flagship identity: with |A| = 1 the far-field g equals the first term
  // of the closed-form dry-friction g
  FarFieldContext ctx{shared(make_dry_friction()), vec1(-2.0), false};
  for (double tau : {0.2, 0.7, 1.5}) {
    for (double y = -6.0; y <= 6.0; y += 0.37) {
      if (std::abs(y) + 2.0 <= tau) continue;
      const double d = y + 2.0;
      const double first_term = std::exp(-d * d / (4.0 * tau)) /
                                std::sqrt(kPi * tau) * std::exp(-tau / 4.0) *
                                std::exp((std::abs(y) + 2.0) / 2.0);
      const double rel = far_field_g(ctx, tau, vec1(y)) / first_term - 1.0;
      CHECK(std::abs(rel) < 1e-12);
    }
  }
}

TEST_CASE("far-field g is symmetric under endpoint exchange") {
  const auto model = shared(make_student_t_1d(0.5));
  for (double tau : {0.3, 1.1}) {
    for (auto [a, b] : {std::pair{-3.0, 1.0}, std::pair{0.5, 2.5}}) {
      FarFieldContext ca{model, vec1(a), false};
      FarFieldContext cb{model, vec1(b), false};
      const double gab = far_field_g(ca, tau, vec1(b));
      const double gba = far_field_g(cb, tau, vec1(a));
      CHECK(std::abs(gab - gba) / gab < 1e-12);
    }
  }
}

TEST_CASE("far-field g agrees with the near-equilibrium g at short time") {
  const auto model = shared(make_sech_power(1.0, 2.0));
  const Approx1DContext near = make_approx1d(model, -2.0);
  FarFieldContext far{model, vec1(-2.0), false};
  const double tau = 1e-3 / near.theta;
  const double gn = g_leading(near, tau, -2.0);
  const double gf = far_field_g(far, tau, vec1(-2.0));
  CHECK(std::abs(gf / gn - 1.0) < 0.05);
}

TEST_CASE("far-field B1") {
  // constant drift: B1 = c^2/4 for any endpoints
  FarFieldContext cst{shared(make_const_drift(0.8)), vec1(-1.0), false};
  CHECK(b1_far_field(cst, 2.0) == doctest::Approx(0.16).epsilon(1e-12));

  // dry friction with endpoints of one sign: B1 = 1/4 and the shortcut is exact
  FarFieldContext dry{shared(make_dry_friction()), vec1(-3.0), false};
  CHECK(b1_far_field(dry, -0.5) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(b1_far_field(dry, -0.5, true) == doctest::Approx(0.25).epsilon(1e-12));

  // sech-power: quadrature vs endpoint shortcut stays bounded
  FarFieldContext sech{shared(make_sech_power(1.0, 2.0)), vec1(-5.0), false};
  double worst = 0.0;
  for (double y = -5.0; y <= 5.0; y += 0.5) {
    if (std::abs(y + 5.0) < 1e-9) continue;
    worst = std::max(worst, std::abs(b1_far_field(sech, y) -
                                     b1_far_field(sech, y, true)));
  }
  MESSAGE("sech |quadrature - shortcut| sup: ", worst);
  CHECK(worst < 1.0);  // A^2/4 <= 1 here, so the gap is order one at most

  // div A term changes the quadrature but is rejected with the shortcut
  FarFieldContext with_div{shared(make_sech_power(1.0, 2.0)), vec1(-5.0), true};
  CHECK(b1_far_field(with_div, 2.0) != b1_far_field(sech, 2.0));
  CHECK_THROWS_AS(b1_far_field(with_div, 2.0, true), invalid_argument);
}

TEST_CASE("sqrt-process h with theta = 1/2 matches the exact short-time h") {
  const double nu = 1.5, y0 = 1.0, y = 1.3, tau = 1e-3;
  const double fd = 1e-6;
  auto log_g = [&](double z) {
    return exact::log_sqrt_process_density(nu, tau, z, y0) -
           std::log(exact::sqrt_process_f_inf(nu, z));
  };
  const double h_exact = -(log_g(y + fd) - log_g(y - fd)) / (2.0 * fd);
  const double h_app = sqrt_h_leading(0.5, nu, y0, tau, y);
  CHECK(std::abs(h_exact) > 100.0);  // individual terms are large here
  CHECK(std::abs(h_exact - h_app) < 1e-2);
}

TEST_CASE("sqrt-process h term-by-term short-time behaviour") {
  // the difference to the exact h vanishes as tau -> 0 (o(1), roughly O(tau))
  const double nu = 1.5, y0 = 1.0, y = 1.3;
  const double fd = 1e-6;
  auto gap = [&](double tau) {
    auto log_g = [&](double z) {
      return exact::log_sqrt_process_density(nu, tau, z, y0) -
             std::log(exact::sqrt_process_f_inf(nu, z));
    };
    const double h_exact = -(log_g(y + fd) - log_g(y - fd)) / (2.0 * fd);
    return std::abs(h_exact - sqrt_h_leading(0.5, nu, y0, tau, y));
  };
  const double g1 = gap(4e-3), g2 = gap(2e-3), g3 = gap(1e-3);
  CHECK(g2 < g1);
  CHECK(g3 < g2);
}

TEST_CASE("sqrt-process h limits") {
  CHECK(std::abs(sqrt_h_leading(0.5, 1.5, 1.0, 80.0, 2.0)) < 1e-10);
  // y = y0: first term drops, leaving the prefactored drift part
  const double tau = 0.4, y0 = 1.7, nu = 2.5, theta = 0.5;
  const double u = std::exp(-theta * tau);
  const double expected = u / (1.0 + u) * ((nu - y0) / y0 - 0.5 / y0);
  CHECK(sqrt_h_leading(theta, nu, y0, tau, y0) ==
        doctest::Approx(expected).epsilon(1e-13));
  CHECK_THROWS_AS(sqrt_h_leading(0.5, 1.5, 1.0, 1.0, -2.0), invalid_argument);
}

TEST_CASE("non-conservative h: symmetric case reduces to the OU form") {
  Eigen::MatrixXd a(2, 2);
  a << 1.2, 0.4, 0.4, 0.9;
  const Eigen::MatrixXd sinf = exact::lyapunov_sigma_inf(a);
  Eigen::VectorXd y(2), y0(2);
  y << 0.7, -0.3;
  y0 << 1.0, 1.0;
  const double tau = 0.8;
  const Eigen::VectorXd h = nonconservative_h(a, sinf, tau, y, y0);

  // symmetric-OU H: a sqrt(q)/(1-q)(y-y0) - a sqrt(q)/(1+sqrt(q)) y
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
  auto fn = [&](const std::function<double(double)>& f) {
    Eigen::VectorXd d = es.eigenvalues();
    for (int i = 0; i < 2; ++i) d(i) = f(d(i));
    return Eigen::MatrixXd(es.eigenvectors() * d.asDiagonal() *
                           es.eigenvectors().transpose());
  };
  const Eigen::MatrixXd m1 = fn([&](double l) { return l / (2.0 * std::sinh(l * tau)); });
  const Eigen::MatrixXd m2 = fn([&](double l) {
    const double u = std::exp(-l * tau);
    return l * u / (1.0 + u);
  });
  const Eigen::VectorXd h_sym = m1 * (y - y0) - m2 * y;
  CHECK((h - h_sym).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("non-conservative h equals the log-gradient of the exact density") {
  Eigen::MatrixXd a(2, 2);
  a << 1.0, 1.0, 0.0, 1.0;
  const Eigen::MatrixXd sinf = exact::lyapunov_sigma_inf(a);
  const Eigen::MatrixXd sinf_inv = sinf.inverse();
  Eigen::VectorXd y(2), y0(2);
  y << 0.4, -0.6;
  y0 << 1.5, 0.5;
  const double tau = 0.6;
  auto log_g = [&](const Eigen::VectorXd& z) {
    return exact::log_nonconservative_ou_density(a, tau, z, y0) +
           0.5 * z.dot(sinf_inv * z);  // minus log f_inf up to a constant
  };
  const double fd = 1e-5;
  Eigen::VectorXd h_fd(2);
  for (int i = 0; i < 2; ++i) {
    Eigen::VectorXd p = y, m = y;
    p(i) += fd;
    m(i) -= fd;
    h_fd(i) = -(log_g(p) - log_g(m)) / (2.0 * fd);
  }
  const Eigen::VectorXd h = nonconservative_h(a, sinf, tau, y, y0);
  CHECK((h - h_fd).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("non-conservative h vanishes at large tau") {
  Eigen::MatrixXd a(2, 2);
  a << 1.0, 0.7, 0.0, 1.0;
  const Eigen::MatrixXd sinf = exact::lyapunov_sigma_inf(a);
  Eigen::VectorXd y(2), y0(2);
  y << 1.0, -2.0;
  y0 << 0.3, 0.4;
  const Eigen::VectorXd h = nonconservative_h(a, sinf, 50.0, y, y0);
  CHECK(h.cwiseAbs().maxCoeff() < 1e-10);
}
