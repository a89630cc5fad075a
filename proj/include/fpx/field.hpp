#pragma once

#include <string>
#include <vector>

#include "fpx/common.hpp"

namespace fpx {

/// Density values on a uniform tensor grid at one time, with provenance
/// metadata.  values is row-major over the axes.
struct DensityField {
  int dim = 1;
  std::vector<std::vector<double>> axes;
  std::vector<double> values;
  double tau = 0.0;
  std::string model_id;
  std::string method;
  std::vector<double> y0;

  std::size_t size() const {
    std::size_t n = 1;
    for (const auto& ax : axes) n *= ax.size();
    return n;
  }
};

/// n nodes -L + j (2L/n), j = 0..n-1 (periodic convention: +L excluded).
inline std::vector<double> uniform_axis(double halfwidth, int n) {
  std::vector<double> ax(n);
  const double h = 2.0 * halfwidth / n;
  for (int j = 0; j < n; ++j) ax[j] = -halfwidth + j * h;
  return ax;
}

}  // namespace fpx
