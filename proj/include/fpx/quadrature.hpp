#pragma once

#include <functional>
#include <vector>

#include "fpx/common.hpp"

namespace fpx::quad {

/// Gauss-Legendre nodes/weights on [-1,1], computed once per order and cached.
struct Rule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

const Rule& gauss_legendre(int order);

constexpr int kDefaultOrder = 16;

/// Composite Gauss-Legendre over [a,b] with npanels equal panels.
double panels(const std::function<double(double)>& f, double a, double b,
              int npanels, int order = kDefaultOrder);

/// Panel-doubling refinement until |I_2n - I_n| < tol_abs + tol_rel*|I_2n|.
/// Throws numerical_error (reporting the last two iterates) on non-convergence.
double adaptive(const std::function<double(double)>& f, double a, double b,
                double tol_abs, double tol_rel = 0.0, int max_panels = 1 << 14,
                int order = kDefaultOrder);

/// Tensor-product composite rule over [ax,bx] x [ay,by].
double panels2d(const std::function<double(double, double)>& f, double ax,
                double bx, double ay, double by, int npanels_per_axis,
                int order = kDefaultOrder);

double adaptive2d(const std::function<double(double, double)>& f, double ax,
                  double bx, double ay, double by, double tol_abs,
                  double tol_rel = 0.0, int max_panels_per_axis = 1 << 10,
                  int order = kDefaultOrder);

// Matrix/vector-valued variants used by the Fisher-information averages.
Mat panels_mat(const std::function<Mat(double)>& f, double a, double b,
               int npanels, int order = kDefaultOrder);
Mat adaptive_mat(const std::function<Mat(double)>& f, double a, double b,
                 double tol_abs, int max_panels = 1 << 14,
                 int order = kDefaultOrder);
Mat panels2d_mat(const std::function<Mat(double, double)>& f, double ax,
                 double bx, double ay, double by, int npanels_per_axis,
                 int order = kDefaultOrder);
Mat adaptive2d_mat(const std::function<Mat(double, double)>& f, double ax,
                   double bx, double ay, double by, double tol_abs,
                   int max_panels_per_axis = 1 << 10,
                   int order = kDefaultOrder);

}  // namespace fpx::quad
