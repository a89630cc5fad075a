#include "fpx/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <sstream>

namespace fpx::quad {

namespace {

Rule compute_rule(int order) {
  // Newton iteration on the Legendre polynomial; nodes symmetric about 0.
  Rule r;
  r.nodes.resize(order);
  r.weights.resize(order);
  const int m = (order + 1) / 2;
  for (int i = 1; i <= m; ++i) {
    double z = std::cos(kPi * (i - 0.25) / (order + 0.5));
    double pp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p1 = 1.0, p2 = 0.0;
      for (int j = 1; j <= order; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = ((2.0 * j - 1.0) * z * p2 - (j - 1.0) * p3) / j;
      }
      pp = order * (z * p1 - p2) / (z * z - 1.0);
      const double z1 = z;
      z = z1 - p1 / pp;
      if (std::abs(z - z1) < 1e-15) break;
    }
    r.nodes[i - 1] = -z;
    r.nodes[order - i] = z;
    r.weights[i - 1] = 2.0 / ((1.0 - z * z) * pp * pp);
    r.weights[order - i] = r.weights[i - 1];
  }
  return r;
}

std::mutex rule_mutex;
std::map<int, Rule> rule_cache;

template <typename T, typename F>
T panels_impl(const F& f, double a, double b, int npanels, int order, T zero) {
  const Rule& r = gauss_legendre(order);
  const double h = (b - a) / npanels;
  T total = zero;
  for (int p = 0; p < npanels; ++p) {
    const double lo = a + p * h;
    const double mid = lo + 0.5 * h;
    T acc = zero;
    for (int k = 0; k < order; ++k)
      acc += r.weights[k] * f(mid + 0.5 * h * r.nodes[k]);
    total += acc;
  }
  return 0.5 * h * total;
}

template <typename T, typename F, typename NormFn>
T adaptive_impl(const F& f, double a, double b, double tol_abs, double tol_rel,
                int max_panels, int order, T zero, const NormFn& norm) {
  T prev = panels_impl<T>(f, a, b, 8, order, zero);
  for (int n = 16; n <= max_panels; n *= 2) {
    T cur = panels_impl<T>(f, a, b, n, order, zero);
    const double diff = norm(cur - prev);
    if (diff < tol_abs + tol_rel * norm(cur)) return cur;
    prev = cur;
  }
  std::ostringstream oss;
  oss << "quadrature did not converge on [" << a << "," << b
      << "]; last two iterates differ by "
      << norm(panels_impl<T>(f, a, b, max_panels, order, zero) - prev);
  throw numerical_error(oss.str());
}

template <typename T, typename F>
T panels2d_impl(const F& f, double ax, double bx, double ay, double by, int n,
                int order, T zero) {
  const Rule& r = gauss_legendre(order);
  const double hx = (bx - ax) / n;
  const double hy = (by - ay) / n;
  T total = zero;
  for (int px = 0; px < n; ++px) {
    const double midx = ax + (px + 0.5) * hx;
    for (int py = 0; py < n; ++py) {
      const double midy = ay + (py + 0.5) * hy;
      T acc = zero;
      for (int kx = 0; kx < order; ++kx) {
        const double x = midx + 0.5 * hx * r.nodes[kx];
        T row = zero;
        for (int ky = 0; ky < order; ++ky)
          row += r.weights[ky] * f(x, midy + 0.5 * hy * r.nodes[ky]);
        acc += r.weights[kx] * row;
      }
      total += acc;
    }
  }
  return 0.25 * hx * hy * total;
}

template <typename T, typename F, typename NormFn>
T adaptive2d_impl(const F& f, double ax, double bx, double ay, double by,
                  double tol_abs, double tol_rel, int max_panels, int order,
                  T zero, const NormFn& norm) {
  T prev = panels2d_impl<T>(f, ax, bx, ay, by, 8, order, zero);
  for (int n = 16; n <= max_panels; n *= 2) {
    T cur = panels2d_impl<T>(f, ax, bx, ay, by, n, order, zero);
    const double diff = norm(cur - prev);
    if (diff < tol_abs + tol_rel * norm(cur)) return cur;
    prev = cur;
  }
  throw numerical_error("2d quadrature did not converge");
}

double dnorm(double x) { return std::abs(x); }
double mnorm(const Mat& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

const Rule& gauss_legendre(int order) {
  std::lock_guard<std::mutex> lock(rule_mutex);
  auto it = rule_cache.find(order);
  if (it == rule_cache.end()) it = rule_cache.emplace(order, compute_rule(order)).first;
  return it->second;
}

double panels(const std::function<double(double)>& f, double a, double b,
              int npanels, int order) {
  return panels_impl<double>(f, a, b, npanels, order, 0.0);
}

double adaptive(const std::function<double(double)>& f, double a, double b,
                double tol_abs, double tol_rel, int max_panels, int order) {
  return adaptive_impl<double>(f, a, b, tol_abs, tol_rel, max_panels, order,
                               0.0, dnorm);
}

double panels2d(const std::function<double(double, double)>& f, double ax,
                double bx, double ay, double by, int npanels_per_axis,
                int order) {
  return panels2d_impl<double>(f, ax, bx, ay, by, npanels_per_axis, order, 0.0);
}

double adaptive2d(const std::function<double(double, double)>& f, double ax,
                  double bx, double ay, double by, double tol_abs,
                  double tol_rel, int max_panels_per_axis, int order) {
  return adaptive2d_impl<double>(f, ax, bx, ay, by, tol_abs, tol_rel,
                                 max_panels_per_axis, order, 0.0, dnorm);
}

Mat panels_mat(const std::function<Mat(double)>& f, double a, double b,
               int npanels, int order) {
  Mat zero = Mat::Zero(f(0.5 * (a + b)).rows(), f(0.5 * (a + b)).cols());
  return panels_impl<Mat>(f, a, b, npanels, order, zero);
}

Mat adaptive_mat(const std::function<Mat(double)>& f, double a, double b,
                 double tol_abs, int max_panels, int order) {
  Mat zero = Mat::Zero(f(0.5 * (a + b)).rows(), f(0.5 * (a + b)).cols());
  return adaptive_impl<Mat>(f, a, b, tol_abs, 0.0, max_panels, order, zero,
                            mnorm);
}

Mat panels2d_mat(const std::function<Mat(double, double)>& f, double ax,
                 double bx, double ay, double by, int npanels_per_axis,
                 int order) {
  Mat probe = f(0.5 * (ax + bx), 0.5 * (ay + by));
  Mat zero = Mat::Zero(probe.rows(), probe.cols());
  return panels2d_impl<Mat>(f, ax, bx, ay, by, npanels_per_axis, order, zero);
}

Mat adaptive2d_mat(const std::function<Mat(double, double)>& f, double ax,
                   double bx, double ay, double by, double tol_abs,
                   int max_panels_per_axis, int order) {
  Mat probe = f(0.5 * (ax + bx), 0.5 * (ay + by));
  Mat zero = Mat::Zero(probe.rows(), probe.cols());
  return adaptive2d_impl<Mat>(f, ax, bx, ay, by, tol_abs, 0.0,
                              max_panels_per_axis, order, zero, mnorm);
}

}  // namespace fpx::quad
