#include "fpx/metrics.hpp"

#include <cmath>
#include <sstream>

namespace fpx {

namespace {

void check_same_grid(const DensityField& a, const DensityField& b) {
  if (a.dim != b.dim || a.axes.size() != b.axes.size())
    throw invalid_argument("metrics: dimension mismatch between fields");
  for (std::size_t d = 0; d < a.axes.size(); ++d) {
    if (a.axes[d].size() != b.axes[d].size())
      throw invalid_argument("metrics: grid size mismatch between fields");
    for (std::size_t i = 0; i < a.axes[d].size(); ++i) {
      if (std::abs(a.axes[d][i] - b.axes[d][i]) > 1e-12)
        throw invalid_argument("metrics: grid node mismatch between fields");
    }
  }
}

// trapezoid weight of node i on an n-node uniform axis with spacing h
inline double trap_w(std::size_t i, std::size_t n, double h) {
  return (i == 0 || i == n - 1) ? 0.5 * h : h;
}

template <typename F>
double integrate_grid(const DensityField& f, const F& value) {
  if (f.dim == 1) {
    const auto& ax = f.axes[0];
    const double h = ax[1] - ax[0];
    double acc = 0.0;
    for (std::size_t i = 0; i < ax.size(); ++i)
      acc += trap_w(i, ax.size(), h) * value(i);
    return acc;
  }
  const auto& ax = f.axes[0];
  const auto& ay = f.axes[1];
  const double hx = ax[1] - ax[0];
  const double hy = ay[1] - ay[0];
  double acc = 0.0;
  for (std::size_t i = 0; i < ax.size(); ++i) {
    const double wi = trap_w(i, ax.size(), hx);
    for (std::size_t j = 0; j < ay.size(); ++j)
      acc += wi * trap_w(j, ay.size(), hy) * value(i * ay.size() + j);
  }
  return acc;
}

}  // namespace

double l1_error(const DensityField& f1, const DensityField& f2) {
  check_same_grid(f1, f2);
  return integrate_grid(
      f1, [&](std::size_t i) { return std::abs(f1.values[i] - f2.values[i]); });
}

double linf_error(const DensityField& f1, const DensityField& f2) {
  check_same_grid(f1, f2);
  double m = 0.0;
  for (std::size_t i = 0; i < f1.values.size(); ++i)
    m = std::max(m, std::abs(f1.values[i] - f2.values[i]));
  return m;
}

double mass(const DensityField& f) {
  return integrate_grid(f, [&](std::size_t i) { return f.values[i]; });
}

ErrorReport compare(const DensityField& f1, const DensityField& f2) {
  ErrorReport rep;
  rep.l1 = l1_error(f1, f2);
  rep.linf = linf_error(f1, f2);
  rep.mass1 = mass(f1);
  rep.mass2 = mass(f2);
  rep.tau = f1.tau;
  std::ostringstream oss;
  oss << f1.axes[0].size();
  for (std::size_t d = 1; d < f1.axes.size(); ++d) oss << "x" << f1.axes[d].size();
  rep.grid_id = oss.str();
  return rep;
}

double reciprocity_defect(
    const std::function<double(double, const Vec&, const Vec&)>& g, double tau,
    const std::vector<std::pair<Vec, Vec>>& pairs) {
  double worst = 0.0;
  for (const auto& [ya, yb] : pairs) {
    const double gab = g(tau, yb, ya);
    const double gba = g(tau, ya, yb);
    worst = std::max(worst,
                     std::abs(gab - gba) / std::max(std::max(gab, gba), 1e-30));
  }
  return worst;
}

}  // namespace fpx
