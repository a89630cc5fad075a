#include "fpx.h"

#include <cstring>
#include <map>
#include <memory>
#include <string>

#include "fpx/approx1d.hpp"
#include "fpx/approxnd.hpp"
#include "fpx/exact.hpp"
#include "fpx/experiment.hpp"
#include "fpx/fisher.hpp"
#include "fpx/models.hpp"
#include "fpx/solver.hpp"

struct fpx_model_s {
  std::shared_ptr<const fpx::DriftModel> model;
};

namespace {

thread_local std::string g_last_error;

int fail(int code, const char* what) {
  g_last_error = what;
  return code;
}

template <typename F>
int guarded(F&& fn) {
  try {
    fn();
    return FPX_OK;
  } catch (const fpx::invalid_argument& e) {
    return fail(FPX_ERR_INVALID, e.what());
  } catch (const fpx::numerical_error& e) {
    return fail(FPX_ERR_NUMERIC, e.what());
  } catch (const std::exception& e) {
    return fail(FPX_ERR_NUMERIC, e.what());
  }
}

std::map<std::string, double> param_map(const char* const* keys,
                                        const double* values, int nparams) {
  std::map<std::string, double> p;
  for (int i = 0; i < nparams; ++i) {
    if (!keys[i]) throw fpx::invalid_argument("null parameter key");
    p[keys[i]] = values[i];
  }
  return p;
}

fpx::SolverConfig to_cpp(const fpx_solver_config& c) {
  fpx::SolverConfig cfg;
  cfg.halfwidth = {c.halfwidth[0], c.halfwidth[1]};
  cfg.modes = {c.modes[0], c.modes[1]};
  cfg.dt = c.dt;
  cfg.ic_width = c.ic_width;
  cfg.conv_tol = c.conv_tol;
  cfg.edge_density_tol = c.edge_density_tol;
  cfg.boundary_mass_tol = c.boundary_mass_tol;
  cfg.dryfric_smoothing_cells = c.dryfric_smoothing_cells;
  return cfg;
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

fpx::Vec to_vec(const double* p, int dim) {
  fpx::Vec v(dim);
  for (int i = 0; i < dim; ++i) v(i) = p[i];
  return v;
}

std::optional<fpx::Mat> theta_opt(const double* theta, int dim) {
  if (!theta) return std::nullopt;
  fpx::Mat t(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) t(i, j) = theta[i * dim + j];
  return t;
}

}  // namespace

extern "C" {

const char* fpx_version(void) { return "0.1.0"; }

const char* fpx_last_error(void) { return g_last_error.c_str(); }

int fpx_model_create(const char* id, const char* const* keys,
                     const double* values, int nparams, fpx_model** out) {
  return guarded([&] {
    if (!id || !out) throw fpx::invalid_argument("null argument");
    auto model = std::make_shared<const fpx::DriftModel>(
        fpx::make_from_params(id, param_map(keys, values, nparams)));
    *out = new fpx_model_s{std::move(model)};
  });
}

void fpx_model_free(fpx_model* model) { delete model; }

int fpx_model_dim(const fpx_model* model) {
  return model ? model->model->dim : 0;
}

int fpx_model_f_inf(const fpx_model* model, const double* y, double* out) {
  return guarded([&] {
    if (!model || !y || !out) throw fpx::invalid_argument("null argument");
    *out = model->model->f_inf(to_vec(y, model->model->dim));
  });
}

int fpx_theta(const fpx_model* model, double* theta, double* quad_error,
              int* source) {
  return guarded([&] {
    if (!model || !theta) throw fpx::invalid_argument("null argument");
    const fpx::ThetaEstimate est = fpx::theta_for(*model->model);
    const int d = model->model->dim;
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) theta[i * d + j] = est.theta(i, j);
    if (quad_error) *quad_error = est.quad_error;
    if (source)
      *source = est.source == fpx::ThetaEstimate::Source::closed_form
                    ? FPX_THETA_CLOSED_FORM
                    : FPX_THETA_QUADRATURE;
  });
}

int fpx_theta_by_id(const char* id, const char* const* keys,
                    const double* values, int nparams, double* theta, int* dim,
                    int* source) {
  return guarded([&] {
    if (!id || !theta) throw fpx::invalid_argument("null argument");
    const fpx::DriftModel model =
        fpx::make_from_params(id, param_map(keys, values, nparams));
    const fpx::ThetaEstimate est = fpx::theta_for(model);
    for (int i = 0; i < model.dim; ++i)
      for (int j = 0; j < model.dim; ++j)
        theta[i * model.dim + j] = est.theta(i, j);
    if (dim) *dim = model.dim;
    if (source)
      *source = est.source == fpx::ThetaEstimate::Source::closed_form
                    ? FPX_THETA_CLOSED_FORM
                    : FPX_THETA_QUADRATURE;
  });
}

int fpx_approx_density(const fpx_model* model, const double* theta,
                       const double* y0, double tau, const double* pts,
                       int npts, double* out) {
  return guarded([&] {
    if (!model || !y0 || !pts || !out)
      throw fpx::invalid_argument("null argument");
    const auto& m = model->model;
    const int d = m->dim;
    const auto ov = theta_opt(theta, d);
    if (d == 1) {
      const fpx::Approx1DContext ctx = fpx::make_approx1d(
          m, y0[0], ov ? std::optional<double>((*ov)(0, 0)) : std::nullopt);
      for (int i = 0; i < npts; ++i) out[i] = fpx::f_leading(ctx, tau, pts[i]);
    } else {
      const fpx::ApproxNDContext ctx = fpx::make_approxnd(m, to_vec(y0, d), ov);
      for (int i = 0; i < npts; ++i)
        out[i] = fpx::f_leading_nd(ctx, tau, to_vec(pts + i * d, d));
    }
  });
}

int fpx_approx_h(const fpx_model* model, const double* theta, double y0,
                 double tau, const double* y, int npts, double* out,
                 int with_b1) {
  return guarded([&] {
    if (!model || !y || !out) throw fpx::invalid_argument("null argument");
    const auto& m = model->model;
    if (m->dim != 1) throw fpx::invalid_argument("fpx_approx_h: 1D models only");
    const fpx::Approx1DContext ctx = fpx::make_approx1d(
        m, y0, theta ? std::optional<double>(theta[0]) : std::nullopt);
    for (int i = 0; i < npts; ++i)
      out[i] = with_b1 ? fpx::h_with_b1(ctx, tau, y[i])
                       : fpx::h_leading(ctx, tau, y[i]);
  });
}

void fpx_solver_config_default(fpx_solver_config* cfg) {
  if (!cfg) return;
  const fpx::SolverConfig d;
  cfg->halfwidth[0] = d.halfwidth[0];
  cfg->halfwidth[1] = d.halfwidth[1];
  cfg->modes[0] = d.modes[0];
  cfg->modes[1] = d.modes[1];
  cfg->dt = d.dt;
  cfg->ic_width = d.ic_width;
  cfg->conv_tol = d.conv_tol;
  cfg->edge_density_tol = d.edge_density_tol;
  cfg->boundary_mass_tol = d.boundary_mass_tol;
  cfg->dryfric_smoothing_cells = d.dryfric_smoothing_cells;
}

int fpx_solve_fpe(const fpx_model* model, const double* y0,
                  const double* times, int ntimes,
                  const fpx_solver_config* cfg, double* out) {
  return guarded([&] {
    if (!model || !y0 || !times || !cfg || !out)
      throw fpx::invalid_argument("null argument");
    const auto& m = model->model;
    const std::vector<double> tv(times, times + ntimes);
    const auto fields =
        fpx::solve_fpe(*m, to_vec(y0, m->dim), tv, to_cpp(*cfg));
    std::size_t offset = 0;
    for (const auto& f : fields) {
      std::memcpy(out + offset, f.values.data(),
                  f.values.size() * sizeof(double));
      offset += f.values.size();
    }
  });
}

int fpx_grid_axis(const fpx_solver_config* cfg, int axis, double* out) {
  return guarded([&] {
    if (!cfg || !out || axis < 0 || axis > 1)
      throw fpx::invalid_argument("fpx_grid_axis: bad argument");
    const auto ax = fpx::uniform_axis(cfg->halfwidth[axis], cfg->modes[axis]);
    std::memcpy(out, ax.data(), ax.size() * sizeof(double));
  });
}

int fpx_ou_density_1d(double theta, double y_inf, double tau, double y,
                      double y0, double* out) {
  return guarded([&] {
    if (!out) throw fpx::invalid_argument("null argument");
    *out = fpx::exact::ou_density_1d(theta, y_inf, tau, y, y0);
  });
}

int fpx_dryfric_density(double tau, double y, double y0, double* out) {
  return guarded([&] {
    if (!out) throw fpx::invalid_argument("null argument");
    *out = fpx::exact::dryfric_density(tau, y, y0);
  });
}

int fpx_sqrt_density(double nu, double tau, double y, double y0, double* out) {
  return guarded([&] {
    if (!out) throw fpx::invalid_argument("null argument");
    *out = fpx::exact::sqrt_process_density(nu, tau, y, y0);
  });
}

int fpx_lyapunov_sigma_inf(const double* a, int m, double* sigma) {
  return guarded([&] {
    if (!a || !sigma || m < 1) throw fpx::invalid_argument("bad argument");
    Eigen::MatrixXd am(m, m);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) am(i, j) = a[i * m + j];
    const Eigen::MatrixXd s = fpx::exact::lyapunov_sigma_inf(am);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) sigma[i * m + j] = s(i, j);
  });
}

int fpx_run_experiment_file(const char* path, const char* out_dir, int threads,
                            char** run_dir_out) {
  return guarded([&] {
    if (!path) throw fpx::invalid_argument("null path");
    const fpx::exp::ExperimentSpec spec = fpx::exp::parse_spec_file(path);
    const std::string dir =
        fpx::exp::run_experiment(spec, out_dir ? out_dir : "", threads);
    if (run_dir_out) *run_dir_out = dup_string(dir);
  });
}

int fpx_run_preset(const char* name, const char* out_dir, int threads,
                   char** run_dir_out) {
  return guarded([&] {
    if (!name) throw fpx::invalid_argument("null preset name");
    fpx::exp::ExperimentSpec spec = fpx::exp::parse_spec_text(
        fpx::exp::preset_text(name), "preset:" + std::string(name));
    if (spec.out_dir.empty()) spec.out_dir = std::string("fpx-") + name;
    const std::string dir =
        fpx::exp::run_experiment(spec, out_dir ? out_dir : "", threads);
    if (run_dir_out) *run_dir_out = dup_string(dir);
  });
}

int fpx_preset_names(char** names_out) {
  return guarded([&] {
    if (!names_out) throw fpx::invalid_argument("null argument");
    std::string all;
    for (const auto& n : fpx::exp::preset_names()) {
      all += n;
      all += "\n";
    }
    *names_out = dup_string(all);
  });
}

int fpx_converge_file(const char* path, char** json_out) {
  return guarded([&] {
    if (!path || !json_out) throw fpx::invalid_argument("null argument");
    const fpx::exp::ExperimentSpec spec = fpx::exp::parse_spec_file(path);
    *json_out = dup_string(fpx::exp::converge_json(spec));
  });
}

void fpx_string_free(char* s) { std::free(s); }

}  // extern "C"
