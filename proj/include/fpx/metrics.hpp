#pragma once

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fpx/common.hpp"
#include "fpx/field.hpp"

namespace fpx {

struct ErrorReport {
  double l1 = 0.0;
  double linf = 0.0;
  double mass1 = 0.0;
  double mass2 = 0.0;
  std::optional<double> reciprocity_defect;
  std::string grid_id;
  double tau = 0.0;
};

/// Trapezoid integral of |f1 - f2| over the shared grid (tensor rule in 2D);
/// the grids must match exactly.
double l1_error(const DensityField& f1, const DensityField& f2);
double linf_error(const DensityField& f1, const DensityField& f2);

/// Trapezoid mass of a field.
double mass(const DensityField& f);

ErrorReport compare(const DensityField& f1, const DensityField& f2);

/// max over sampled (y, y0) pairs of |g(tau,y|y0) - g(tau,y0|y)| / max(g,1e-30).
double reciprocity_defect(
    const std::function<double(double tau, const Vec& y, const Vec& y0)>& g,
    double tau, const std::vector<std::pair<Vec, Vec>>& pairs);

}  // namespace fpx
