#pragma once

#include <array>
#include <vector>

#include "fpx/common.hpp"
#include "fpx/field.hpp"
#include "fpx/models.hpp"

namespace fpx {

/// Configuration of the Fourier-collocation FPE solver.  halfwidth/modes are
/// per axis (index 1 ignored in 1D).
struct SolverConfig {
  std::array<double, 2> halfwidth{10.0, 10.0};
  std::array<int, 2> modes{256, 256};
  double dt = 1e-3;
  // standard deviation of the initial Gaussian; 0 selects 2.56 grid cells
  double ic_width = 0.0;
  // L1 acceptance threshold for mode doubling
  double conv_tol = 1e-5;
  // pre-check: f_inf(edge)/max f_inf must stay below this (fat-tailed
  // presets relax it; the runtime boundary-mass guard still applies)
  double edge_density_tol = 1e-10;
  // runtime guard: mass within two cells of any edge
  double boundary_mass_tol = 1e-8;
  // width of the tanh replacement for discontinuous drift, in grid cells
  double dryfric_smoothing_cells = 4.0;
};

/// Advance df/dtau = -div(A f) + lap f from a narrow Gaussian at y0 and
/// return the density at each requested time (sorted ascending).  Diffusion
/// is handled exactly in Fourier space by an integrating factor; the drift
/// term is evaluated pseudospectrally with 2/3-rule dealiasing; time stepping
/// is classical RK4 on the transformed variable.
std::vector<DensityField> solve_fpe(const DriftModel& model, const Vec& y0,
                                    const std::vector<double>& times,
                                    const SolverConfig& cfg);

struct ConvergenceReport {
  std::vector<int> mode_counts;   // coarse count of each comparison
  std::vector<double> l1_diffs;   // L1(N vs 2N) on the coarse grid
  bool converged = false;
  int accepted_modes = 0;
};

/// Double the mode count until the L1 difference between successive
/// resolutions drops below cfg.conv_tol (caps: 4096 in 1D, 1024 per axis
/// in 2D).  The initial-Gaussian width is frozen at the coarsest level so
/// every level solves the same problem.
ConvergenceReport mode_doubling_study(const DriftModel& model, const Vec& y0,
                                      double time, SolverConfig cfg);

}  // namespace fpx
