#include "fpx/solver.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstring>
#include <mutex>
#include <sstream>

namespace fpx {

namespace {

std::mutex fftw_plan_mutex;  // FFTW planning is not thread-safe

bool is_pow2(int n) { return n >= 1 && (n & (n - 1)) == 0; }

using cplx = std::complex<double>;

fftw_complex* as_fftw(cplx* p) { return reinterpret_cast<fftw_complex*>(p); }

template <typename T>
struct FftwBuffer {
  T* data = nullptr;
  explicit FftwBuffer(std::size_t n) {
    data = static_cast<T*>(fftw_malloc(n * sizeof(T)));
    std::memset(data, 0, n * sizeof(T));
  }
  ~FftwBuffer() { fftw_free(data); }
  FftwBuffer(const FftwBuffer&) = delete;
  FftwBuffer& operator=(const FftwBuffer&) = delete;
};

class SpectralSolver {
 public:
  SpectralSolver(const DriftModel& model, const Vec& y0, const SolverConfig& cfg)
      : model_(model), cfg_(cfg), dim_(model.dim) {
    if (dim_ != 1 && dim_ != 2)
      throw invalid_argument("solve_fpe: only 1D and 2D models are supported");
    if (y0.size() != dim_) throw invalid_argument("solve_fpe: y0 dimension mismatch");
    if (!(cfg.dt > 0)) throw invalid_argument("solve_fpe: dt must be positive");

    n_[0] = cfg.modes[0];
    n_[1] = dim_ == 2 ? cfg.modes[1] : 1;
    len_[0] = cfg.halfwidth[0];
    len_[1] = dim_ == 2 ? cfg.halfwidth[1] : 0.0;
    double max_cell = 0.0;
    for (int d = 0; d < dim_; ++d) {
      if (!is_pow2(n_[d]) || n_[d] < 64)
        throw invalid_argument("solve_fpe: mode count must be a power of two >= 64");
      if (!(len_[d] > 0)) throw invalid_argument("solve_fpe: domain half-width must be positive");
      h_[d] = 2.0 * len_[d] / n_[d];
      max_cell = std::max(max_cell, h_[d]);
    }
    eps_ = cfg.ic_width > 0 ? cfg.ic_width : 2.56 * max_cell;
    if (eps_ < 2.0 * max_cell)
      throw invalid_argument(
          "solve_fpe: initial Gaussian width must cover at least two grid "
          "cells (ic_width >= 2*(2L/N))");
    for (int d = 0; d < dim_; ++d) {
      if (std::abs(y0(d)) > len_[d] - 4.0 * eps_)
        throw invalid_argument("solve_fpe: y0 must be interior (|y0| <= L - 4 ic_width)");
    }

    ntotal_ = static_cast<std::size_t>(n_[0]) * n_[1];
    nc_ = static_cast<std::size_t>(n_[0]) * (dim_ == 2 ? n_[1] / 2 + 1 : 1) *
          (dim_ == 1 ? n_[0] / 2 + 1 : 1);
    if (dim_ == 1) nc_ = n_[0] / 2 + 1;
    if (dim_ == 2) nc_ = static_cast<std::size_t>(n_[0]) * (n_[1] / 2 + 1);

    for (int d = 0; d < dim_; ++d) {
      axes_.push_back(uniform_axis(len_[d], n_[d]));
    }

    check_edge_density();

    // cached drift on the grid (tau-independent); discontinuous drift is
    // mollified over dryfric_smoothing_cells cells
    const double w = cfg.dryfric_smoothing_cells * max_cell;
    drift_.resize(dim_);
    for (int d = 0; d < dim_; ++d) drift_[d].resize(ntotal_);
    for_each_node([&](std::size_t idx, const Vec& y) {
      const Vec a = model.smoothed_drift ? model.smoothed_drift(y, w) : model.drift(y);
      for (int d = 0; d < dim_; ++d) drift_[d][idx] = a(d);
    });

    build_wavenumbers();
    alloc_buffers();
    plan();

    // initial condition: narrow Gaussian at y0
    const double lognorm = -0.5 * dim_ * std::log(2.0 * kPi * eps_ * eps_);
    for_each_node([&](std::size_t idx, const Vec& y) {
      const double r2 = (y - y0).squaredNorm();
      phys_->data[idx] = std::exp(lognorm - 0.5 * r2 / (eps_ * eps_));
    });
    fftw_execute_dft_r2c(plan_r2c_, phys_->data, as_fftw(v_->data));
    tau_ = 0.0;
  }

  ~SpectralSolver() {
    std::lock_guard<std::mutex> lock(fftw_plan_mutex);
    fftw_destroy_plan(plan_r2c_);
    fftw_destroy_plan(plan_c2r_);
  }

  double ic_width() const { return eps_; }

  void advance_to(double t) {
    if (t < tau_ - 1e-12) throw invalid_argument("solve_fpe: times must be ascending");
    const double seg = t - tau_;
    const long nfull = static_cast<long>(std::floor(seg / cfg_.dt + 1e-9));
    for (long k = 0; k < nfull; ++k) {
      step(cfg_.dt);
      if (++steps_ % 50 == 0) check_health();
    }
    const double rem = seg - nfull * cfg_.dt;
    if (rem > 1e-12) step(rem);
    tau_ = t;
    check_health();
  }

  DensityField snapshot() {
    to_physical(v_->data);
    DensityField f;
    f.dim = dim_;
    f.axes = axes_;
    f.values.assign(phys_->data, phys_->data + ntotal_);
    f.tau = tau_;
    f.model_id = model_.id;
    f.method = "solver";
    return f;
  }

 private:
  template <typename F>
  void for_each_node(const F& fn) const {
    Vec y(dim_);
    if (dim_ == 1) {
      for (int i = 0; i < n_[0]; ++i) {
        y(0) = axes_[0][i];
        fn(static_cast<std::size_t>(i), y);
      }
    } else {
      for (int i = 0; i < n_[0]; ++i) {
        y(0) = axes_[0][i];
        for (int j = 0; j < n_[1]; ++j) {
          y(1) = axes_[1][j];
          fn(static_cast<std::size_t>(i) * n_[1] + j, y);
        }
      }
    }
  }

  void check_edge_density() const {
    // periodicity acts as a far-field zero only if f_inf is negligible at
    // the edges relative to its peak
    double max_all = -1e300, max_edge = -1e300;
    for_each_node([&](std::size_t, const Vec& y) {
      const double v = model_.log_f_inf(y);
      max_all = std::max(max_all, v);
      bool edge = false;
      for (int d = 0; d < dim_; ++d)
        if (std::abs(std::abs(y(d)) - len_[d]) < 1.5 * h_[d]) edge = true;
      if (edge) max_edge = std::max(max_edge, v);
    });
    if (std::exp(max_edge - max_all) > cfg_.edge_density_tol) {
      std::ostringstream oss;
      oss << "solve_fpe: invariant density at the domain edge is "
          << std::exp(max_edge - max_all)
          << " of its peak (> edge_density_tol = " << cfg_.edge_density_tol
          << "); enlarge the domain";
      throw invalid_argument(oss.str());
    }
  }

  void build_wavenumbers() {
    // r2c layout: last axis holds only nonnegative frequencies
    if (dim_ == 1) {
      const int nk = n_[0] / 2 + 1;
      k_last_.resize(nk);
      for (int m = 0; m < nk; ++m) k_last_[m] = kPi * m / len_[0];
    } else {
      k_first_.resize(n_[0]);
      for (int m = 0; m < n_[0]; ++m) {
        const int f = m <= n_[0] / 2 ? m : m - n_[0];
        k_first_[m] = kPi * f / len_[0];
      }
      const int nk = n_[1] / 2 + 1;
      k_last_.resize(nk);
      for (int m = 0; m < nk; ++m) k_last_[m] = kPi * m / len_[1];
    }
    // 2/3-rule mask and k^2 for the integrating factor
    mask_.assign(nc_, 1.0);
    k2_.assign(nc_, 0.0);
    if (dim_ == 1) {
      for (std::size_t m = 0; m < nc_; ++m) {
        k2_[m] = k_last_[m] * k_last_[m];
        if (static_cast<int>(m) > n_[0] / 3) mask_[m] = 0.0;
      }
    } else {
      const int nk = n_[1] / 2 + 1;
      for (int i = 0; i < n_[0]; ++i) {
        const int fi = i <= n_[0] / 2 ? i : i - n_[0];
        for (int j = 0; j < nk; ++j) {
          const std::size_t idx = static_cast<std::size_t>(i) * nk + j;
          k2_[idx] = k_first_[i] * k_first_[i] + k_last_[j] * k_last_[j];
          if (std::abs(fi) > n_[0] / 3 || j > n_[1] / 3) mask_[idx] = 0.0;
        }
      }
    }
  }

  void alloc_buffers() {
    phys_ = std::make_unique<FftwBuffer<double>>(ntotal_);
    g1_ = std::make_unique<FftwBuffer<double>>(ntotal_);
    if (dim_ == 2) g2_ = std::make_unique<FftwBuffer<double>>(ntotal_);
    for (auto* p : {&v_, &a_, &b_, &c_, &d_, &tmp_, &scratch_, &ghat1_, &ghat2_})
      *p = std::make_unique<FftwBuffer<cplx>>(nc_);
    e_.resize(nc_);
    e2_.resize(nc_);
  }

  void plan() {
    std::lock_guard<std::mutex> lock(fftw_plan_mutex);
    if (dim_ == 1) {
      plan_r2c_ = fftw_plan_dft_r2c_1d(n_[0], phys_->data, as_fftw(scratch_->data),
                                       FFTW_ESTIMATE);
      plan_c2r_ = fftw_plan_dft_c2r_1d(n_[0], as_fftw(scratch_->data), phys_->data,
                                       FFTW_ESTIMATE);
    } else {
      plan_r2c_ = fftw_plan_dft_r2c_2d(n_[0], n_[1], phys_->data,
                                       as_fftw(scratch_->data), FFTW_ESTIMATE);
      plan_c2r_ = fftw_plan_dft_c2r_2d(n_[0], n_[1], as_fftw(scratch_->data),
                                       phys_->data, FFTW_ESTIMATE);
    }
  }

  // c2r destroys its input, so go through scratch
  void to_physical(const cplx* in) {
    std::memcpy(scratch_->data, in, nc_ * sizeof(cplx));
    fftw_execute_dft_c2r(plan_c2r_, as_fftw(scratch_->data), phys_->data);
    const double inv = 1.0 / static_cast<double>(ntotal_);
    for (std::size_t i = 0; i < ntotal_; ++i) phys_->data[i] *= inv;
  }

  // out = dt * (-i k) . FFT[A * IFFT(in)], dealiased
  void nonlinear(const cplx* in, cplx* out, double dt) {
    to_physical(in);
    if (dim_ == 1) {
      for (std::size_t i = 0; i < ntotal_; ++i)
        g1_->data[i] = drift_[0][i] * phys_->data[i];
      fftw_execute_dft_r2c(plan_r2c_, g1_->data, as_fftw(ghat1_->data));
      for (std::size_t m = 0; m < nc_; ++m) {
        const cplx grad = cplx(0.0, k_last_[m]) * ghat1_->data[m];
        out[m] = -dt * mask_[m] * grad;
      }
    } else {
      for (std::size_t i = 0; i < ntotal_; ++i) {
        g1_->data[i] = drift_[0][i] * phys_->data[i];
        g2_->data[i] = drift_[1][i] * phys_->data[i];
      }
      fftw_execute_dft_r2c(plan_r2c_, g1_->data, as_fftw(ghat1_->data));
      fftw_execute_dft_r2c(plan_r2c_, g2_->data, as_fftw(ghat2_->data));
      const int nk = n_[1] / 2 + 1;
      for (int i = 0; i < n_[0]; ++i) {
        for (int j = 0; j < nk; ++j) {
          const std::size_t idx = static_cast<std::size_t>(i) * nk + j;
          const cplx grad = cplx(0.0, k_first_[i]) * ghat1_->data[idx] +
                            cplx(0.0, k_last_[j]) * ghat2_->data[idx];
          out[idx] = -dt * mask_[idx] * grad;
        }
      }
    }
  }

  void refresh_exponentials(double dt) {
    if (dt == cached_dt_) return;
    for (std::size_t m = 0; m < nc_; ++m) {
      e_[m] = std::exp(-k2_[m] * dt / 2.0);
      e2_[m] = e_[m] * e_[m];
    }
    cached_dt_ = dt;
  }

  // integrating-factor RK4 on v
  void step(double dt) {
    refresh_exponentials(dt);
    cplx* v = v_->data;
    cplx* a = a_->data;
    cplx* b = b_->data;
    cplx* c = c_->data;
    cplx* d = d_->data;
    cplx* t = tmp_->data;

    nonlinear(v, a, dt);
    for (std::size_t m = 0; m < nc_; ++m) t[m] = e_[m] * (v[m] + 0.5 * a[m]);
    nonlinear(t, b, dt);
    for (std::size_t m = 0; m < nc_; ++m) t[m] = e_[m] * v[m] + 0.5 * b[m];
    nonlinear(t, c, dt);
    for (std::size_t m = 0; m < nc_; ++m) t[m] = e2_[m] * v[m] + e_[m] * c[m];
    nonlinear(t, d, dt);
    for (std::size_t m = 0; m < nc_; ++m) {
      v[m] = e2_[m] * v[m] +
             (e2_[m] * a[m] + 2.0 * e_[m] * (b[m] + c[m]) + d[m]) / 6.0;
    }
  }

  void check_health() {
    to_physical(v_->data);
    const double cell = dim_ == 1 ? h_[0] : h_[0] * h_[1];
    double l1 = 0.0;
    for (std::size_t i = 0; i < ntotal_; ++i) l1 += std::abs(phys_->data[i]);
    l1 *= cell;
    if (!std::isfinite(l1) || l1 > 1.0 + 1e-3) {
      std::ostringstream oss;
      oss << "solve_fpe: instability detected at tau ~ " << tau_
          << " (|f|_1 = " << l1 << "); reduce dt";
      throw numerical_error(oss.str());
    }
    double edge_mass = 0.0;
    if (dim_ == 1) {
      for (int i = 0; i < n_[0]; ++i) {
        if (i < 2 || i >= n_[0] - 2) edge_mass += std::abs(phys_->data[i]) * cell;
      }
    } else {
      for (int i = 0; i < n_[0]; ++i) {
        for (int j = 0; j < n_[1]; ++j) {
          if (i < 2 || i >= n_[0] - 2 || j < 2 || j >= n_[1] - 2)
            edge_mass += std::abs(phys_->data[static_cast<std::size_t>(i) * n_[1] + j]) * cell;
        }
      }
    }
    if (edge_mass > cfg_.boundary_mass_tol) {
      std::ostringstream oss;
      oss << "solve_fpe: boundary interaction at tau ~ " << tau_
          << " (edge mass " << edge_mass << " > " << cfg_.boundary_mass_tol
          << "); enlarge the domain";
      throw numerical_error(oss.str());
    }
  }

  const DriftModel& model_;
  SolverConfig cfg_;
  int dim_;
  int n_[2] = {0, 0};
  double len_[2] = {0, 0};
  double h_[2] = {0, 0};
  double eps_ = 0.0;
  std::size_t ntotal_ = 0, nc_ = 0;
  double tau_ = 0.0;
  long steps_ = 0;
  double cached_dt_ = -1.0;

  std::vector<std::vector<double>> axes_;
  std::vector<std::vector<double>> drift_;
  std::vector<double> k_first_, k_last_, k2_, mask_, e_, e2_;

  std::unique_ptr<FftwBuffer<double>> phys_, g1_, g2_;
  std::unique_ptr<FftwBuffer<cplx>> v_, a_, b_, c_, d_, tmp_, scratch_, ghat1_, ghat2_;
  fftw_plan plan_r2c_ = nullptr, plan_c2r_ = nullptr;
};

}  // namespace

std::vector<DensityField> solve_fpe(const DriftModel& model, const Vec& y0,
                                    const std::vector<double>& times,
                                    const SolverConfig& cfg) {
  if (times.empty()) throw invalid_argument("solve_fpe: no output times");
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!(times[i] > 0)) throw invalid_argument("solve_fpe: times must be positive");
    if (i > 0 && times[i] <= times[i - 1])
      throw invalid_argument("solve_fpe: times must be sorted ascending");
  }
  SpectralSolver solver(model, y0, cfg);
  std::vector<DensityField> out;
  out.reserve(times.size());
  for (double t : times) {
    solver.advance_to(t);
    DensityField f = solver.snapshot();
    f.y0.assign(y0.data(), y0.data() + y0.size());
    out.push_back(std::move(f));
  }
  return out;
}

ConvergenceReport mode_doubling_study(const DriftModel& model, const Vec& y0,
                                      double time, SolverConfig cfg) {
  const int cap = model.dim == 1 ? 4096 : 1024;
  // freeze the IC width at the coarsest resolution so all levels compare
  // the same problem
  double max_cell = 0.0;
  for (int d = 0; d < model.dim; ++d)
    max_cell = std::max(max_cell, 2.0 * cfg.halfwidth[d] / cfg.modes[d]);
  if (cfg.ic_width <= 0) cfg.ic_width = 2.56 * max_cell;

  ConvergenceReport rep;
  SolverConfig c = cfg;
  std::vector<DensityField> coarse = solve_fpe(model, y0, {time}, c);
  while (c.modes[0] < cap) {
    SolverConfig fine_cfg = c;
    fine_cfg.modes[0] *= 2;
    if (model.dim == 2) fine_cfg.modes[1] *= 2;
    std::vector<DensityField> fine = solve_fpe(model, y0, {time}, fine_cfg);

    // L1 difference on the coarse nodes (every second fine node)
    const DensityField& fc = coarse[0];
    const DensityField& ff = fine[0];
    double l1 = 0.0;
    if (model.dim == 1) {
      const double h = fc.axes[0][1] - fc.axes[0][0];
      for (std::size_t i = 0; i < fc.values.size(); ++i)
        l1 += std::abs(fc.values[i] - ff.values[2 * i]) * h;
    } else {
      const double hx = fc.axes[0][1] - fc.axes[0][0];
      const double hy = fc.axes[1][1] - fc.axes[1][0];
      const std::size_t nyc = fc.axes[1].size();
      const std::size_t nyf = ff.axes[1].size();
      for (std::size_t i = 0; i < fc.axes[0].size(); ++i) {
        for (std::size_t j = 0; j < nyc; ++j) {
          const double d = fc.values[i * nyc + j] - ff.values[2 * i * nyf + 2 * j];
          l1 += std::abs(d) * hx * hy;
        }
      }
    }
    rep.mode_counts.push_back(c.modes[0]);
    rep.l1_diffs.push_back(l1);
    if (l1 < cfg.conv_tol) {
      rep.converged = true;
      rep.accepted_modes = c.modes[0];
      return rep;
    }
    c = fine_cfg;
    coarse = std::move(fine);
  }
  rep.converged = false;
  rep.accepted_modes = c.modes[0];
  return rep;
}

}  // namespace fpx
