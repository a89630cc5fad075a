#include "fpx/models.hpp"

#include <cmath>
#include <sstream>

#include "fpx/quadrature.hpp"

namespace fpx {

namespace {

double log_beta(double a, double b) {
  return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

void require(bool ok, const std::string& msg) {
  if (!ok) throw invalid_argument(msg);
}

Mat mat1(double v) {
  Mat m(1, 1);
  m(0, 0) = v;
  return m;
}

double dwell_log_z_1d(const std::function<double(const Vec&)>& log_f, double c,
                      double halfwidth) {
  const double z = quad::adaptive(
      [&](double y) { return std::exp(log_f(vec1(y))); }, c - halfwidth,
      c + halfwidth, 0.0, 1e-11);
  return std::log(z);
}

}  // namespace

DriftModel make_ou_1d(double theta, double y_inf) {
  require(theta > 0, "make_ou_1d: theta must be positive");
  DriftModel m;
  m.id = "ou";
  m.dim = 1;
  m.drift = [theta, y_inf](const Vec& y) { return vec1(theta * (y_inf - y(0))); };
  m.jacobian = [theta](const Vec&) { return mat1(-theta); };
  m.log_f_inf = [theta, y_inf](const Vec& y) {
    const double d = y(0) - y_inf;
    return -0.5 * theta * d * d;
  };
  m.log_norm = 0.5 * std::log(theta / (2.0 * kPi));
  m.closed_form_theta = mat1(theta);
  m.mean_inf = vec1(y_inf);
  m.quad_center = vec1(y_inf);
  m.quad_halfwidth = std::max(12.0, 9.0 / std::sqrt(theta));
  return m;
}

DriftModel make_sech_power(double gamma_hat, double delta_hat) {
  require(gamma_hat > 0 && delta_hat > 0,
          "make_sech_power: gamma_hat and delta_hat must be positive");
  DriftModel m;
  m.id = "sech";
  m.dim = 1;
  const double g = gamma_hat, d = delta_hat;
  m.drift = [g, d](const Vec& y) { return vec1(-(d / g) * std::tanh(g * y(0))); };
  m.jacobian = [g, d](const Vec& y) {
    const double c = std::cosh(g * y(0));
    return mat1(-d / (c * c));
  };
  // log cosh without overflow at large argument
  auto logcosh = [](double x) {
    const double a = std::abs(x);
    return a + std::log1p(std::exp(-2.0 * a)) - std::log(2.0);
  };
  m.log_f_inf = [g, d, logcosh](const Vec& y) {
    return -(d / (g * g)) * logcosh(g * y(0));
  };
  m.log_norm = std::log(g) - log_beta(d / (2.0 * g * g), 0.5);
  m.closed_form_theta = mat1(d * d / (d + g * g));
  m.mean_inf = vec1(0.0);
  m.quad_center = vec1(0.0);
  m.quad_halfwidth = std::max(12.0, 30.0 * g / d);
  return m;
}

DriftModel make_dry_friction() {
  DriftModel m;
  m.id = "dryfric";
  m.dim = 1;
  m.drift = [](const Vec& y) {
    return vec1(y(0) > 0 ? -1.0 : (y(0) < 0 ? 1.0 : 0.0));
  };
  m.jacobian = [](const Vec&) { return mat1(0.0); };
  m.jacobian_discontinuous = true;
  m.log_f_inf = [](const Vec& y) { return -std::abs(y(0)); };
  m.log_norm = std::log(0.5);
  m.closed_form_theta = mat1(1.0);
  m.mean_inf = vec1(0.0);
  m.quad_center = vec1(0.0);
  m.quad_halfwidth = 30.0;
  m.smoothed_drift = [](const Vec& y, double w) {
    return vec1(-std::tanh(y(0) / w));
  };
  return m;
}

DriftModel make_student_t_1d(double gamma_hat) {
  require(gamma_hat > 0, "make_student_t_1d: gamma_hat must be positive");
  require(gamma_hat < 1,
          "make_student_t_1d: gamma_hat >= 1 gives a non-normalizable "
          "invariant density (needs nu = 1 + 1/gamma_hat^2 > 2)");
  DriftModel m;
  m.id = "student1d";
  m.dim = 1;
  const double g = gamma_hat;
  const double nu = 1.0 + 1.0 / (g * g);
  m.drift = [g](const Vec& y) {
    return vec1(-y(0) / (1.0 + g * g * y(0) * y(0)));
  };
  m.jacobian = [g](const Vec& y) {
    const double u = 1.0 + g * g * y(0) * y(0);
    return mat1(-(1.0 - g * g * y(0) * y(0)) / (u * u));
  };
  m.log_f_inf = [g, nu](const Vec& y) {
    return -0.5 * (nu - 1.0) * std::log1p(g * g * y(0) * y(0));
  };
  m.log_norm = std::log(g) - log_beta(0.5 * (nu - 2.0), 0.5);
  m.closed_form_theta = mat1((nu - 2.0) / (nu + 1.0));
  m.mean_inf = vec1(0.0);
  m.quad_center = vec1(0.0);
  m.quad_halfwidth = 200.0;
  const double log_norm = m.log_norm;
  m.tail_mass = [g, nu, log_norm](double L) {
    // f_inf ~ exp(log_norm) (g|y|)^{-(nu-1)} beyond the truncation
    return 2.0 * std::exp(log_norm) * std::pow(g * L, -(nu - 2.0)) /
           (g * (nu - 2.0));
  };
  return m;
}

DriftModel make_double_well_1d(const std::array<double, 2>& alpha,
                               const std::array<double, 2>& beta,
                               double gamma) {
  require(beta[0] > 0 && beta[1] > 0 && gamma > 0,
          "make_double_well_1d: beta and gamma must be positive");
  DriftModel m;
  m.id = "dwell1d";
  m.dim = 1;
  const double a1 = alpha[0], a2 = alpha[1], b1 = beta[0], b2 = beta[1];
  const double g = gamma;
  m.drift = [=](const Vec& yv) {
    const double y = yv(0);
    return vec1(-y + 2.0 * y / (y * y + g * g) -
                2.0 * (y - a1) / ((y - a1) * (y - a1) + b1 * b1) -
                2.0 * (y - a2) / ((y - a2) * (y - a2) + b2 * b2));
  };
  m.jacobian = [=](const Vec& yv) {
    const double y = yv(0);
    const double r = y * y + g * g;
    double j = -1.0 + 2.0 / r - 4.0 * y * y / (r * r);
    for (auto [a, b] : {std::pair{a1, b1}, std::pair{a2, b2}}) {
      const double s = (y - a) * (y - a) + b * b;
      j += -2.0 / s + 4.0 * (y - a) * (y - a) / (s * s);
    }
    return mat1(j);
  };
  m.log_f_inf = [=](const Vec& yv) {
    const double y = yv(0);
    return -0.5 * y * y + std::log(y * y + g * g) -
           std::log((y - a1) * (y - a1) + b1 * b1) -
           std::log((y - a2) * (y - a2) + b2 * b2);
  };
  m.quad_center = vec1(0.5 * (a1 + a2));
  m.quad_halfwidth =
      std::max(12.0, std::max(std::abs(a1), std::abs(a2)) + 9.0);
  m.log_norm = -dwell_log_z_1d(m.log_f_inf, m.quad_center(0), m.quad_halfwidth);
  m.mean_inf = mean_by_quadrature(m);
  return m;
}

DriftModel make_student_t_2d(double a1, double a2, double nu) {
  require(a1 > 0 && a2 > 0, "make_student_t_2d: a1, a2 must be positive");
  require(nu > 2, "make_student_t_2d: nu must exceed 2");
  DriftModel m;
  m.id = "student2d";
  m.dim = 2;
  const double c = (nu + 2.0) / nu;
  m.drift = [=](const Vec& y) {
    const double D = 1.0 + (a1 * y(0) * y(0) + a2 * y(1) * y(1)) / nu;
    return vec2(-c * a1 * y(0) / D, -c * a2 * y(1) / D);
  };
  m.jacobian = [=](const Vec& y) {
    const double D = 1.0 + (a1 * y(0) * y(0) + a2 * y(1) * y(1)) / nu;
    Mat j(2, 2);
    const double cross = 2.0 * c * a1 * a2 * y(0) * y(1) / (nu * D * D);
    j(0, 0) = -c * a1 * (1.0 / D - 2.0 * a1 * y(0) * y(0) / (nu * D * D));
    j(1, 1) = -c * a2 * (1.0 / D - 2.0 * a2 * y(1) * y(1) / (nu * D * D));
    j(0, 1) = cross;
    j(1, 0) = cross;
    return j;
  };
  m.log_f_inf = [=](const Vec& y) {
    return -0.5 * (nu + 2.0) *
           std::log1p((a1 * y(0) * y(0) + a2 * y(1) * y(1)) / nu);
  };
  m.log_norm = std::log(std::sqrt(a1 * a2) / (2.0 * kPi));
  // <-dA_i/dy_i> = a_i (nu+2)/(nu+4); derivable in closed form from the
  // radial moments of f_inf and confirmed by both quadrature routes.
  Mat th = Mat::Zero(2, 2);
  th(0, 0) = a1 * (nu + 2.0) / (nu + 4.0);
  th(1, 1) = a2 * (nu + 2.0) / (nu + 4.0);
  m.closed_form_theta = th;
  m.mean_inf = vec2(0.0, 0.0);
  m.quad_center = vec2(0.0, 0.0);
  const double amin = std::min(a1, a2);
  const double u_req = std::sqrt(std::max(std::pow(10.0, 14.0 / nu) - 1.0, 9.0));
  m.quad_halfwidth = std::min(std::max(40.0, u_req * std::sqrt(nu / amin)), 400.0);
  m.tail_mass = [=](double L) {
    return std::pow(1.0 + L * L * amin / nu, -0.5 * nu);
  };
  // Along the straight line from the origin, y^T S diag(a) y is constant in
  // the path parameter, so Omega = (f_inf(y)/f_inf(0))^{y^T S diag(a) y / r2}
  // with r2 = a1 y1^2 + a2 y2^2 (for any S, not just the model's own).
  auto log_f = m.log_f_inf;
  m.log_omega_closed = [=](const Vec& y, const Mat& S, const Vec&) {
    const double r2 = a1 * y(0) * y(0) + a2 * y(1) * y(1);
    if (r2 == 0.0) return 0.0;
    const double w = y.dot(S * vec2(a1 * y(0), a2 * y(1))) / r2;
    return w * log_f(y);
  };
  return m;
}

DriftModel make_double_well_2d(const Mat& a, const Vec& alpha1,
                               const Vec& alpha2,
                               const std::array<double, 2>& beta,
                               double gamma) {
  require(a.rows() == 2 && a.cols() == 2, "make_double_well_2d: a must be 2x2");
  require(std::abs(a(0, 1) - a(1, 0)) < 1e-14,
          "make_double_well_2d: a must be symmetric");
  Eigen::SelfAdjointEigenSolver<Mat> es(a);
  require(es.eigenvalues().minCoeff() > 0,
          "make_double_well_2d: a must be positive definite");
  require(beta[0] > 0 && beta[1] > 0 && gamma > 0,
          "make_double_well_2d: beta and gamma must be positive");
  DriftModel m;
  m.id = "dwell2d";
  m.dim = 2;
  const double b1 = beta[0], b2 = beta[1], g = gamma;
  const Vec al1 = alpha1, al2 = alpha2;
  const Mat am = a;
  m.drift = [=](const Vec& y) {
    Vec out = -(am * y);
    out += 2.0 * y / (y.squaredNorm() + g * g);
    const Vec w1 = y - al1;
    out -= 2.0 * w1 / (w1.squaredNorm() + b1 * b1);
    const Vec w2 = y - al2;
    out -= 2.0 * w2 / (w2.squaredNorm() + b2 * b2);
    return out;
  };
  m.jacobian = [=](const Vec& y) {
    Mat j = -am;
    const double r = y.squaredNorm() + g * g;
    j += 2.0 * (Mat::Identity(2, 2) / r - 2.0 * (y * y.transpose()) / (r * r));
    for (auto [al, b] : {std::pair{al1, b1}, std::pair{al2, b2}}) {
      const Vec w = y - al;
      const double s = w.squaredNorm() + b * b;
      j -= 2.0 * (Mat::Identity(2, 2) / s - 2.0 * (w * w.transpose()) / (s * s));
    }
    return j;
  };
  m.log_f_inf = [=](const Vec& y) {
    return -0.5 * y.dot(am * y) + std::log(y.squaredNorm() + g * g) -
           std::log((y - al1).squaredNorm() + b1 * b1) -
           std::log((y - al2).squaredNorm() + b2 * b2);
  };
  m.quad_center = 0.5 * (al1 + al2);
  const double reach = std::max(al1.cwiseAbs().maxCoeff(), al2.cwiseAbs().maxCoeff());
  m.quad_halfwidth = std::max(12.0, reach + 9.0 / std::sqrt(es.eigenvalues().minCoeff()));
  auto log_f = m.log_f_inf;
  const Vec c = m.quad_center;
  const double L = m.quad_halfwidth;
  const double z = quad::adaptive2d(
      [&](double x, double y) { return std::exp(log_f(vec2(x, y))); },
      c(0) - L, c(0) + L, c(1) - L, c(1) + L, 0.0, 1e-10);
  m.log_norm = -std::log(z);
  m.mean_inf = mean_by_quadrature(m);
  return m;
}

DriftModel make_ou_nd(const Mat& a, const Vec& mean) {
  const int dim = static_cast<int>(a.rows());
  require(a.cols() == dim && mean.size() == dim, "make_ou_nd: shape mismatch");
  require((a - a.transpose()).cwiseAbs().maxCoeff() < 1e-12,
          "make_ou_nd: generator must be symmetric (use the non-conservative "
          "module otherwise)");
  Eigen::SelfAdjointEigenSolver<Mat> es(a);
  require(es.eigenvalues().minCoeff() > 0, "make_ou_nd: generator must be positive definite");
  DriftModel m;
  m.id = "ou_nd";
  m.dim = dim;
  const Mat am = a;
  const Vec mu = mean;
  m.drift = [am, mu](const Vec& y) { return Vec(-(am * (y - mu))); };
  m.jacobian = [am](const Vec&) { return Mat(-am); };
  m.log_f_inf = [am, mu](const Vec& y) {
    const Vec d = y - mu;
    return -0.5 * d.dot(am * d);
  };
  double logdet = 0.0;
  for (int i = 0; i < dim; ++i) logdet += std::log(es.eigenvalues()(i));
  m.log_norm = 0.5 * (logdet - dim * std::log(2.0 * kPi));
  m.closed_form_theta = a;
  m.mean_inf = mean;
  m.quad_center = mean;
  m.quad_halfwidth = std::max(12.0, 9.0 / std::sqrt(es.eigenvalues().minCoeff()));
  // linear A: the line integral is exactly -(1/2) d^T S a d for any S
  m.log_omega_closed = [am, mu](const Vec& y, const Mat& S, const Vec&) {
    const Vec d = y - mu;
    return -0.5 * d.dot(S * (am * d));
  };
  return m;
}

namespace {

double take(std::map<std::string, double>& p, const std::string& key) {
  auto it = p.find(key);
  if (it == p.end())
    throw invalid_argument("model parameter '" + key + "' is required");
  const double v = it->second;
  p.erase(it);
  return v;
}

double take_or(std::map<std::string, double>& p, const std::string& key,
               double fallback) {
  auto it = p.find(key);
  if (it == p.end()) return fallback;
  const double v = it->second;
  p.erase(it);
  return v;
}

}  // namespace

DriftModel make_from_params(const std::string& id,
                            const std::map<std::string, double>& params) {
  std::map<std::string, double> p = params;
  DriftModel m;
  if (id == "ou") {
    const double theta = take(p, "theta");
    m = make_ou_1d(theta, take_or(p, "y_inf", 0.0));
  } else if (id == "sech") {
    m = make_sech_power(take(p, "gamma_hat"), take(p, "delta_hat"));
  } else if (id == "dryfric") {
    m = make_dry_friction();
  } else if (id == "student1d") {
    m = make_student_t_1d(take(p, "gamma_hat"));
  } else if (id == "dwell1d") {
    const std::array<double, 2> alpha{take(p, "alpha1"), take(p, "alpha2")};
    const std::array<double, 2> beta{take(p, "beta1"), take(p, "beta2")};
    m = make_double_well_1d(alpha, beta, take(p, "gamma"));
  } else if (id == "student2d") {
    m = make_student_t_2d(take(p, "a1"), take(p, "a2"), take(p, "nu"));
  } else if (id == "dwell2d") {
    Mat a(2, 2);
    a(0, 0) = take_or(p, "a11", 1.0);
    a(1, 1) = take_or(p, "a22", 1.0);
    a(0, 1) = a(1, 0) = take_or(p, "a12", 0.0);
    const Vec al1 = vec2(take(p, "alpha1x"), take(p, "alpha1y"));
    const Vec al2 = vec2(take(p, "alpha2x"), take(p, "alpha2y"));
    const std::array<double, 2> beta{take(p, "beta1"), take(p, "beta2")};
    m = make_double_well_2d(a, al1, al2, beta, take(p, "gamma"));
  } else {
    throw invalid_argument("unknown model id '" + id + "'");
  }
  if (!p.empty()) {
    std::ostringstream oss;
    oss << "unknown parameter(s) for model '" << id << "':";
    for (const auto& [k, _] : p) oss << " " << k;
    throw invalid_argument(oss.str());
  }
  return m;
}

double normalization_mass(const DriftModel& model) {
  const double L = model.quad_halfwidth;
  double mass = 0.0;
  if (model.dim == 1) {
    const double c = model.quad_center(0);
    mass = quad::adaptive([&](double y) { return model.f_inf(vec1(y)); },
                          c - L, c + L, 0.0, 1e-10);
  } else {
    const Vec c = model.quad_center;
    mass = quad::adaptive2d(
        [&](double x, double y) { return model.f_inf(vec2(x, y)); }, c(0) - L,
        c(0) + L, c(1) - L, c(1) + L, 0.0, 1e-9);
  }
  if (model.tail_mass) mass += model.tail_mass(L);
  return mass;
}

Vec mean_by_quadrature(const DriftModel& model) {
  const double L = model.quad_halfwidth;
  Vec mean(model.dim);
  if (model.dim == 1) {
    const double c = model.quad_center(0);
    mean(0) = quad::adaptive(
        [&](double y) { return y * model.f_inf(vec1(y)); }, c - L, c + L,
        1e-12, 1e-10);
  } else {
    const Vec c = model.quad_center;
    for (int i = 0; i < 2; ++i) {
      mean(i) = quad::adaptive2d(
          [&](double x, double y) {
            const Vec v = vec2(x, y);
            return v(i) * model.f_inf(v);
          },
          c(0) - L, c(0) + L, c(1) - L, c(1) + L, 1e-10, 1e-9);
    }
  }
  return mean;
}

}  // namespace fpx
