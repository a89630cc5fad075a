#include "fpx/experiment.hpp"

#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <json.hpp>
#include <memory>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include "fpx/approx1d.hpp"
#include "fpx/approxnd.hpp"
#include "fpx/exact.hpp"
#include "fpx/extensions.hpp"
#include "fpx/fisher.hpp"
#include "fpx/metrics.hpp"
#include "fpx/models.hpp"

namespace fpx::exp {

namespace {

using nlohmann::json;

// ---------------------------------------------------------------------------
// config parsing

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<double> parse_doubles(const std::string& value,
                                  const std::string& key) {
  std::vector<double> out;
  std::istringstream iss(value);
  std::string tok;
  while (iss >> tok) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw invalid_argument("spec error at '" + key + "': not a number: '" +
                             tok + "'");
    }
  }
  if (out.empty())
    throw invalid_argument("spec error at '" + key + "': empty value");
  return out;
}

double parse_double(const std::string& value, const std::string& key) {
  const auto v = parse_doubles(value, key);
  if (v.size() != 1)
    throw invalid_argument("spec error at '" + key + "': expected one number");
  return v[0];
}

const std::vector<std::string> kKnownMethods = {
    "approx", "approx-b1-h", "exact", "solver", "farfield", "sqrt-approx",
    "noncons"};

ExperimentSpec spec_defaults() {
  ExperimentSpec s;
  s.solver.halfwidth = {12.0, 12.0};
  s.solver.modes = {512, 512};
  return s;
}

}  // namespace

ExperimentSpec parse_spec_text(const std::string& text,
                               const std::string& origin) {
  ExperimentSpec spec = spec_defaults();
  std::istringstream lines(text);
  std::string line;
  int lineno = 0;
  bool have_model = false;
  while (std::getline(lines, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw invalid_argument(origin + ":" + std::to_string(lineno) +
                             ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw invalid_argument(origin + ":" + std::to_string(lineno) +
                             ": expected 'key = value'");

    if (key == "model") {
      spec.model_id = value;
      have_model = true;
    } else if (key.rfind("param.", 0) == 0) {
      spec.params[key.substr(6)] = parse_double(value, key);
    } else if (key == "y0") {
      spec.y0 = parse_doubles(value, key);
    } else if (key == "times") {
      spec.times = parse_doubles(value, key);
    } else if (key == "methods") {
      std::istringstream iss(value);
      std::string m;
      while (iss >> m) spec.methods.push_back(m);
    } else if (key == "theta") {
      spec.theta_override = parse_doubles(value, key);
    } else if (key == "reference") {
      spec.reference = value;
    } else if (key == "out") {
      spec.out_dir = value;
    } else if (key == "grid.domain") {
      const auto v = parse_doubles(value, key);
      spec.solver.halfwidth[0] = v[0];
      spec.solver.halfwidth[1] = v.size() > 1 ? v[1] : v[0];
    } else if (key == "grid.modes") {
      const auto v = parse_doubles(value, key);
      spec.solver.modes[0] = static_cast<int>(v[0]);
      spec.solver.modes[1] = static_cast<int>(v.size() > 1 ? v[1] : v[0]);
    } else if (key == "solver.dt") {
      spec.solver.dt = parse_double(value, key);
    } else if (key == "solver.ic_width") {
      spec.solver.ic_width = parse_double(value, key);
    } else if (key == "solver.conv_tol") {
      spec.solver.conv_tol = parse_double(value, key);
    } else if (key == "solver.edge_tol") {
      spec.solver.edge_density_tol = parse_double(value, key);
    } else if (key == "solver.boundary_mass_tol") {
      spec.solver.boundary_mass_tol = parse_double(value, key);
    } else if (key == "solver.dryfric_smoothing_cells") {
      spec.solver.dryfric_smoothing_cells = parse_double(value, key);
    } else {
      throw invalid_argument(origin + ":" + std::to_string(lineno) +
                             ": unknown key '" + key + "'");
    }
  }

  if (!have_model) throw invalid_argument(origin + ": missing 'model'");
  if (spec.methods.empty())
    throw invalid_argument(origin + ": 'methods' must list at least one method");
  for (const auto& m : spec.methods) {
    if (std::find(kKnownMethods.begin(), kKnownMethods.end(), m) ==
        kKnownMethods.end())
      throw invalid_argument(origin + ": 'methods': unknown method '" + m + "'");
  }
  if (spec.times.empty())
    throw invalid_argument(origin + ": 'times' must list at least one time");
  for (std::size_t i = 0; i < spec.times.size(); ++i) {
    if (!(spec.times[i] > 0))
      throw invalid_argument(origin + ": 'times': entries must be positive");
    if (i > 0 && spec.times[i] <= spec.times[i - 1])
      throw invalid_argument(origin + ": 'times': must be sorted ascending");
  }
  if (spec.y0.empty())
    throw invalid_argument(origin + ": missing 'y0'");
  return spec;
}

ExperimentSpec parse_spec_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw invalid_argument("cannot open spec file '" + path + "'");
  std::ostringstream oss;
  oss << in.rdbuf();
  return parse_spec_text(oss.str(), path);
}

// ---------------------------------------------------------------------------
// presets (the figure protocols)

namespace {

const std::map<std::string, std::string>& preset_map() {
  static const std::map<std::string, std::string> presets = {
      {"fig4",
       "model = sech\n"
       "param.gamma_hat = 1\n"
       "param.delta_hat = 2\n"
       "y0 = -2\n"
       "times = 0.1 0.25 0.5 1 2 5 15\n"
       "methods = approx solver\n"
       "grid.domain = 13\n"
       "grid.modes = 512\n"
       "solver.dt = 0.001\n"
       "solver.ic_width = 0.13\n"},
      {"fig5a",
       "model = dryfric\n"
       "y0 = -2\n"
       "times = 0.1 0.5 1 2 5 20\n"
       "methods = approx exact\n"
       "grid.domain = 30\n"
       "grid.modes = 1024\n"},
      {"fig5b",
       "model = dryfric\n"
       "y0 = -5\n"
       "times = 0.1 0.5 1 2 5 20\n"
       "methods = approx exact\n"
       "grid.domain = 30\n"
       "grid.modes = 1024\n"},
      {"fig6",
       "model = student1d\n"
       "param.gamma_hat = 0.5\n"
       "y0 = -2\n"
       "times = 0.1 0.25 0.5 1 2 5 40\n"
       "methods = approx solver\n"
       "grid.domain = 30\n"
       "grid.modes = 1024\n"
       "solver.dt = 0.001\n"
       "solver.ic_width = 0.15\n"
       "solver.edge_tol = 1e-4\n"
       "solver.boundary_mass_tol = 1e-4\n"},
      {"fig7",
       "model = dwell1d\n"
       "param.alpha1 = 2\n"
       "param.alpha2 = -2\n"
       "param.beta1 = 1\n"
       "param.beta2 = 1\n"
       "param.gamma = 0.70710678118654752\n"
       "y0 = 0\n"
       "times = 0.1 0.3 1 2 5 13.5\n"
       "methods = approx solver\n"
       "grid.domain = 12\n"
       "grid.modes = 512\n"
       "solver.dt = 0.001\n"
       "solver.ic_width = 0.12\n"},
      {"fig8",
       "model = dwell1d\n"
       "param.alpha1 = 2\n"
       "param.alpha2 = -2\n"
       "param.beta1 = 1\n"
       "param.beta2 = 1\n"
       "param.gamma = 0.70710678118654752\n"
       "y0 = -1.5\n"
       "times = 0.1 0.3 1 2 5 13.5\n"
       "methods = approx solver\n"
       "grid.domain = 12\n"
       "grid.modes = 512\n"
       "solver.dt = 0.001\n"
       "solver.ic_width = 0.12\n"},
      {"fig-biv-22",
       "model = student2d\n"
       "param.a1 = 1\n"
       "param.a2 = 3\n"
       "param.nu = 5\n"
       "y0 = -2 2\n"
       "times = 0.1 0.25 1 5\n"
       "methods = approx solver\n"
       "grid.domain = 12\n"
       "grid.modes = 256\n"
       "solver.dt = 0.002\n"
       "solver.ic_width = 0.24\n"
       "solver.edge_tol = 1e-4\n"
       "solver.boundary_mass_tol = 1e-3\n"},
      {"fig-biv31",
       "model = student2d\n"
       "param.a1 = 1\n"
       "param.a2 = 3\n"
       "param.nu = 5\n"
       "y0 = 3 1\n"
       "times = 0.1 0.25 1 5\n"
       "methods = approx solver\n"
       "grid.domain = 12\n"
       "grid.modes = 256\n"
       "solver.dt = 0.002\n"
       "solver.ic_width = 0.24\n"
       "solver.edge_tol = 1e-4\n"
       "solver.boundary_mass_tol = 1e-3\n"},
      {"fig-dw1mid",
       "model = dwell2d\n"
       "param.alpha1x = 2\n"
       "param.alpha1y = 0\n"
       "param.alpha2x = -2\n"
       "param.alpha2y = 0\n"
       "param.beta1 = 1\n"
       "param.beta2 = 1\n"
       "param.gamma = 0.5\n"
       "y0 = 0 0.5\n"
       "times = 0.3 2 5 10\n"
       "methods = approx solver\n"
       "grid.domain = 8\n"
       "grid.modes = 256\n"
       "solver.dt = 0.002\n"
       "solver.ic_width = 0.16\n"},
      {"fig-dw1well",
       "model = dwell2d\n"
       "param.alpha1x = 2\n"
       "param.alpha1y = 0\n"
       "param.alpha2x = -2\n"
       "param.alpha2y = 0\n"
       "param.beta1 = 1\n"
       "param.beta2 = 1\n"
       "param.gamma = 0.5\n"
       "y0 = -1.5 0\n"
       "times = 0.3 2 5 10\n"
       "methods = approx solver\n"
       "grid.domain = 8\n"
       "grid.modes = 256\n"
       "solver.dt = 0.002\n"
       "solver.ic_width = 0.16\n"},
      {"fig-dw3mid",
       "model = dwell2d\n"
       "param.alpha1x = 2\n"
       "param.alpha1y = 2\n"
       "param.alpha2x = -2\n"
       "param.alpha2y = -2\n"
       "param.beta1 = 1\n"
       "param.beta2 = 0.7\n"
       "param.gamma = 1\n"
       "y0 = -1 1\n"
       "times = 0.3 2 5 10\n"
       "methods = approx solver\n"
       "grid.domain = 8\n"
       "grid.modes = 256\n"
       "solver.dt = 0.002\n"
       "solver.ic_width = 0.16\n"},
      {"fig-dw3well",
       "model = dwell2d\n"
       "param.alpha1x = 2\n"
       "param.alpha1y = 2\n"
       "param.alpha2x = -2\n"
       "param.alpha2y = -2\n"
       "param.beta1 = 1\n"
       "param.beta2 = 0.7\n"
       "param.gamma = 1\n"
       "y0 = 1.3 1.3\n"
       "times = 0.3 2 5 10\n"
       "methods = approx solver\n"
       "grid.domain = 8\n"
       "grid.modes = 256\n"
       "solver.dt = 0.002\n"
       "solver.ic_width = 0.16\n"},
  };
  return presets;
}

}  // namespace

std::vector<std::string> preset_names() {
  std::vector<std::string> names;
  for (const auto& [k, _] : preset_map()) names.push_back(k);
  return names;
}

const std::string& preset_text(const std::string& name) {
  const auto& m = preset_map();
  const auto it = m.find(name);
  if (it == m.end()) throw invalid_argument("unknown preset '" + name + "'");
  return it->second;
}

// ---------------------------------------------------------------------------
// evaluation tables

namespace {

struct Table {
  std::vector<std::vector<double>> axes;
  std::vector<std::string> value_names;
  std::vector<std::vector<double>> value_cols;
  double tau = 0.0;
  std::string method;
  bool is_density = true;
};

std::string format_g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

std::string format_17(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// special (non-catalog) models handled by the runner
bool is_special_model(const std::string& id) {
  return id == "sqrt" || id == "noncons";
}

struct SpecialParams {
  double nu = 0.0;
  double theta = 0.5;
  Eigen::MatrixXd a;
};

SpecialParams parse_special(const ExperimentSpec& spec) {
  SpecialParams sp;
  std::map<std::string, double> p = spec.params;
  auto take = [&](const std::string& k) {
    auto it = p.find(k);
    if (it == p.end())
      throw invalid_argument("spec error at 'param." + k +
                             "': required for model " + spec.model_id);
    const double v = it->second;
    p.erase(it);
    return v;
  };
  if (spec.model_id == "sqrt") {
    sp.nu = take("nu");
    if (auto it = p.find("theta"); it != p.end()) {
      sp.theta = it->second;
      p.erase(it);
    }
    if (spec.theta_override && spec.theta_override->size() == 1)
      sp.theta = (*spec.theta_override)[0];
  } else {
    sp.a.resize(2, 2);
    sp.a(0, 0) = take("a11");
    sp.a(0, 1) = take("a12");
    sp.a(1, 0) = take("a21");
    sp.a(1, 1) = take("a22");
  }
  if (!p.empty())
    throw invalid_argument("spec error: unknown parameter 'param." +
                           p.begin()->first + "' for model " + spec.model_id);
  return sp;
}

template <typename F>
void for_each_grid_point(const std::vector<std::vector<double>>& axes,
                         const F& fn) {
  if (axes.size() == 1) {
    for (std::size_t i = 0; i < axes[0].size(); ++i) {
      Vec y = vec1(axes[0][i]);
      fn(i, y);
    }
  } else {
    const std::size_t ny = axes[1].size();
    for (std::size_t i = 0; i < axes[0].size(); ++i)
      for (std::size_t j = 0; j < ny; ++j) {
        Vec y = vec2(axes[0][i], axes[1][j]);
        fn(i * ny + j, y);
      }
  }
}

DensityField table_to_field(const Table& t, const std::string& model_id) {
  DensityField f;
  f.dim = static_cast<int>(t.axes.size());
  f.axes = t.axes;
  f.values = t.value_cols[0];
  f.tau = t.tau;
  f.model_id = model_id;
  f.method = t.method;
  return f;
}

void write_table_csv(const std::filesystem::path& path, const Table& t,
                     const std::string& model_id,
                     const std::vector<double>& y0) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw numerical_error("cannot write " + path.string());
  out << "# model=" << model_id << ", method=" << t.method
      << ", tau=" << format_g(t.tau) << ", y0=";
  for (std::size_t i = 0; i < y0.size(); ++i) {
    if (i) out << " ";
    out << format_g(y0[i]);
  }
  out << "\n";
  for (std::size_t d = 0; d < t.axes.size(); ++d) out << "y" << (d + 1) << ",";
  for (std::size_t c = 0; c < t.value_names.size(); ++c) {
    if (c) out << ",";
    out << t.value_names[c];
  }
  out << "\n";
  for_each_grid_point(t.axes, [&](std::size_t idx, const Vec& y) {
    for (int d = 0; d < y.size(); ++d) out << format_17(y(d)) << ",";
    for (std::size_t c = 0; c < t.value_cols.size(); ++c) {
      if (c) out << ",";
      double v = t.value_cols[c][idx];
      if (t.is_density && v < 0.0) v = 0.0;  // clip spectral undershoot
      out << format_17(v);
    }
    out << "\n";
  });
}

void run_tasks(std::vector<std::function<void()>>& tasks, int threads) {
  if (threads <= 0) {
    threads = static_cast<int>(std::thread::hardware_concurrency());
    if (threads <= 0) threads = 2;
  }
  threads = std::min<int>(threads, static_cast<int>(tasks.size()));
  std::vector<std::exception_ptr> errors(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      try {
        tasks[i]();
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace

std::string run_experiment(const ExperimentSpec& spec,
                           const std::string& out_override, int threads) {
  using clock = std::chrono::steady_clock;

  const bool special = is_special_model(spec.model_id);
  std::shared_ptr<const DriftModel> model;
  SpecialParams sp;
  int dim = 1;
  if (special) {
    sp = parse_special(spec);
    dim = spec.model_id == "noncons" ? 2 : 1;
    for (const auto& m : spec.methods) {
      const bool ok = spec.model_id == "sqrt"
                          ? (m == "exact" || m == "sqrt-approx")
                          : (m == "exact" || m == "noncons");
      if (!ok)
        throw invalid_argument("spec error at 'methods': method '" + m +
                               "' is not available for model " + spec.model_id);
    }
  } else {
    model = std::make_shared<const DriftModel>(
        make_from_params(spec.model_id, spec.params));
    dim = model->dim;
    for (const auto& m : spec.methods) {
      if (m == "sqrt-approx" || m == "noncons")
        throw invalid_argument("spec error at 'methods': method '" + m +
                               "' requires its dedicated model");
      if (m == "exact" && spec.model_id != "ou" && spec.model_id != "dryfric")
        throw invalid_argument(
            "spec error at 'methods': no exact density for model " +
            spec.model_id);
      if (m == "approx-b1-h" && dim != 1)
        throw invalid_argument(
            "spec error at 'methods': approx-b1-h is 1D only");
    }
  }
  if (static_cast<int>(spec.y0.size()) != dim)
    throw invalid_argument("spec error at 'y0': expected " +
                           std::to_string(dim) + " component(s)");

  // theta for the near-equilibrium approximations
  std::optional<Mat> theta_ov;
  if (spec.theta_override && !special) {
    const auto& tv = *spec.theta_override;
    Mat th;
    if (dim == 1 && tv.size() == 1) {
      th = Mat(1, 1);
      th(0, 0) = tv[0];
    } else if (dim == 2 && tv.size() == 3) {
      th = Mat(2, 2);
      th(0, 0) = tv[0];
      th(0, 1) = th(1, 0) = tv[1];
      th(1, 1) = tv[2];
    } else {
      throw invalid_argument(
          "spec error at 'theta': expected 1 value (1D) or 't11 t12 t22' (2D)");
    }
    theta_ov = th;
  }

  const bool needs_approx =
      std::find(spec.methods.begin(), spec.methods.end(), "approx") !=
          spec.methods.end() ||
      std::find(spec.methods.begin(), spec.methods.end(), "approx-b1-h") !=
          spec.methods.end();

  ThetaEstimate theta_est;
  std::optional<ApproxNDContext> nd_ctx;
  std::optional<Approx1DContext> od_ctx;
  if (!special && needs_approx) {
    if (theta_ov) {
      theta_est.theta = *theta_ov;
      theta_est.quad_error = 0.0;
      theta_est.source = ThetaEstimate::Source::closed_form;
    } else {
      theta_est = theta_for(*model);
    }
    if (dim == 1)
      od_ctx = make_approx1d(model, spec.y0[0], theta_est.theta(0, 0));
    else
      nd_ctx = make_approxnd(model, vec2(spec.y0[0], spec.y0[1]),
                             theta_est.theta);
  }

  // evaluation grid = solver grid; the square-root process lives on (0, L]
  std::vector<std::vector<double>> axes;
  if (spec.model_id == "sqrt") {
    const int n = spec.solver.modes[0];
    const double L = spec.solver.halfwidth[0];
    std::vector<double> ax(n);
    for (int j = 0; j < n; ++j) ax[j] = (j + 1) * (L / n);
    axes.push_back(ax);
  } else {
    for (int d = 0; d < dim; ++d)
      axes.push_back(uniform_axis(spec.solver.halfwidth[d], spec.solver.modes[d]));
  }
  const std::size_t npts = axes.size() == 1 ? axes[0].size()
                                            : axes[0].size() * axes[1].size();

  // one task per analytic method x time; the solver is one task for all times
  struct Slot {
    Table table;
    double ms = 0.0;
  };
  std::vector<std::function<void()>> tasks;
  std::vector<std::unique_ptr<Slot>> slots;
  std::mutex timing_mutex;
  std::map<std::string, double> timings_ms;

  auto add_timing = [&](const std::string& method, double ms) {
    std::lock_guard<std::mutex> lock(timing_mutex);
    timings_ms[method] += ms;
  };

  auto make_point_task = [&](const std::string& method, double tau,
                             std::function<double(const Vec&)> f,
                             std::vector<std::string> names, bool density) {
    slots.push_back(std::make_unique<Slot>());
    Slot* slot = slots.back().get();
    tasks.push_back([=, &add_timing] {
      const auto t0 = clock::now();
      Table t;
      t.axes = axes;
      t.method = method;
      t.tau = tau;
      t.is_density = density;
      t.value_names = names;
      t.value_cols.assign(names.size(), std::vector<double>(npts));
      for_each_grid_point(axes, [&](std::size_t idx, const Vec& y) {
        t.value_cols[0][idx] = f(y);
      });
      slot->table = std::move(t);
      slot->ms = std::chrono::duration<double, std::milli>(clock::now() - t0).count();
      add_timing(method, slot->ms);
    });
  };

  std::vector<std::unique_ptr<Slot>> solver_slots;
  bool has_solver = false;

  Eigen::MatrixXd noncons_sigma_inf;
  if (special && spec.model_id == "noncons")
    noncons_sigma_inf = exact::lyapunov_sigma_inf(sp.a);

  for (const auto& method : spec.methods) {
    if (method == "solver") {
      has_solver = true;
      continue;  // handled as one task below
    }
    for (double tau : spec.times) {
      if (method == "approx") {
        if (dim == 1) {
          const Approx1DContext c = *od_ctx;
          make_point_task(method, tau,
                          [c, tau](const Vec& y) { return f_leading(c, tau, y(0)); },
                          {"f"}, true);
        } else {
          const ApproxNDContext c = *nd_ctx;
          make_point_task(method, tau,
                          [c, tau](const Vec& y) { return f_leading_nd(c, tau, y); },
                          {"f"}, true);
        }
      } else if (method == "approx-b1-h") {
        const Approx1DContext c = *od_ctx;
        make_point_task(method, tau,
                        [c, tau](const Vec& y) { return h_with_b1(c, tau, y(0)); },
                        {"h"}, false);
      } else if (method == "farfield") {
        ext::FarFieldContext c;
        c.model = model;
        c.y0 = dim == 1 ? vec1(spec.y0[0]) : vec2(spec.y0[0], spec.y0[1]);
        make_point_task(method, tau,
                        [c, tau](const Vec& y) { return ext::far_field_f(c, tau, y); },
                        {"f"}, true);
      } else if (method == "sqrt-approx") {
        const double nu = sp.nu, th = sp.theta, y0 = spec.y0[0];
        make_point_task(method, tau,
                        [=](const Vec& y) {
                          return ext::sqrt_h_leading(th, nu, y0, tau, y(0));
                        },
                        {"h"}, false);
      } else if (method == "noncons") {
        const Eigen::MatrixXd a = sp.a, si = noncons_sigma_inf;
        Eigen::VectorXd y0v(2);
        y0v << spec.y0[0], spec.y0[1];
        slots.push_back(std::make_unique<Slot>());
        Slot* slot = slots.back().get();
        tasks.push_back([=, &add_timing] {
          const auto t0 = clock::now();
          Table t;
          t.axes = axes;
          t.method = method;
          t.tau = tau;
          t.is_density = false;
          t.value_names = {"h1", "h2"};
          t.value_cols.assign(2, std::vector<double>(npts));
          for_each_grid_point(axes, [&](std::size_t idx, const Vec& y) {
            Eigen::VectorXd yv(2);
            yv << y(0), y(1);
            const Eigen::VectorXd h = ext::nonconservative_h(a, si, tau, yv, y0v);
            t.value_cols[0][idx] = h(0);
            t.value_cols[1][idx] = h(1);
          });
          slot->table = std::move(t);
          slot->ms = std::chrono::duration<double, std::milli>(clock::now() - t0).count();
          add_timing(method, slot->ms);
        });
      } else if (method == "exact") {
        if (spec.model_id == "ou") {
          const double th = spec.params.at("theta");
          const double yi = spec.params.count("y_inf") ? spec.params.at("y_inf") : 0.0;
          const double y0 = spec.y0[0];
          make_point_task(method, tau,
                          [=](const Vec& y) {
                            return exact::ou_density_1d(th, yi, tau, y(0), y0);
                          },
                          {"f"}, true);
        } else if (spec.model_id == "dryfric") {
          const double y0 = spec.y0[0];
          make_point_task(method, tau,
                          [=](const Vec& y) {
                            return exact::dryfric_density(tau, y(0), y0);
                          },
                          {"f"}, true);
        } else if (spec.model_id == "sqrt") {
          const double nu = sp.nu, y0 = spec.y0[0];
          make_point_task(method, tau,
                          [=](const Vec& y) {
                            return exact::sqrt_process_density(nu, tau, y(0), y0);
                          },
                          {"f"}, true);
        } else {  // noncons
          const Eigen::MatrixXd a = sp.a;
          Eigen::VectorXd y0v(2);
          y0v << spec.y0[0], spec.y0[1];
          make_point_task(method, tau,
                          [=](const Vec& y) {
                            Eigen::VectorXd yv(2);
                            yv << y(0), y(1);
                            return exact::nonconservative_ou_density(a, tau, yv, y0v);
                          },
                          {"f"}, true);
        }
      }
    }
  }

  if (has_solver) {
    solver_slots.resize(spec.times.size());
    for (auto& s : solver_slots) s = std::make_unique<Slot>();
    auto* slots_ptr = &solver_slots;
    const auto times = spec.times;
    const auto cfg = spec.solver;
    const auto y0 = spec.y0;
    tasks.push_back([=, &add_timing, m = model] {
      const auto t0 = clock::now();
      Vec y0v(static_cast<int>(y0.size()));
      for (std::size_t i = 0; i < y0.size(); ++i) y0v(static_cast<int>(i)) = y0[i];
      const auto fields = solve_fpe(*m, y0v, times, cfg);
      for (std::size_t i = 0; i < fields.size(); ++i) {
        Table t;
        t.axes = fields[i].axes;
        t.method = "solver";
        t.tau = fields[i].tau;
        t.is_density = true;
        t.value_names = {"f"};
        t.value_cols = {fields[i].values};
        (*slots_ptr)[i]->table = std::move(t);
      }
      add_timing("solver",
                 std::chrono::duration<double, std::milli>(clock::now() - t0).count());
    });
  }

  run_tasks(tasks, threads);

  // gather all tables
  std::vector<const Table*> tables;
  for (const auto& s : slots) tables.push_back(&s->table);
  for (const auto& s : solver_slots) tables.push_back(&s->table);

  // output directory
  std::string outdir = !out_override.empty()
                           ? out_override
                           : (!spec.out_dir.empty()
                                  ? spec.out_dir
                                  : "fpx-run-" + spec.model_id);
  std::filesystem::create_directories(outdir);

  for (const Table* t : tables) {
    const std::string fname = t->method + "_tau" + format_g(t->tau) + ".csv";
    write_table_csv(std::filesystem::path(outdir) / fname, *t, spec.model_id,
                    spec.y0);
  }

  // summary: masses, errors vs the reference method, reciprocity defects
  std::string reference = spec.reference;
  auto is_density_method = [&](const std::string& m) {
    for (const Table* t : tables)
      if (t->method == m) return t->is_density;
    return false;
  };
  if (reference.empty()) {
    if (has_solver)
      reference = "solver";
    else {
      for (const auto& m : spec.methods)
        if (m == "exact") reference = "exact";
      if (reference.empty())
        for (const auto& m : spec.methods)
          if (is_density_method(m)) {
            reference = m;
            break;
          }
    }
  } else {
    bool found = false;
    for (const auto& m : spec.methods) found |= (m == reference);
    if (!found)
      throw invalid_argument("spec error at 'reference': method '" + reference +
                             "' is not among the requested methods");
  }

  auto find_table = [&](const std::string& method, double tau) -> const Table* {
    for (const Table* t : tables)
      if (t->method == method && t->tau == tau) return t;
    return nullptr;
  };

  const bool ref_density = !reference.empty() && is_density_method(reference);
  json masses = json::object();
  json l1s = json::object();
  for (const auto& method : spec.methods) {
    if (!is_density_method(method)) continue;
    json per_time_mass = json::object();
    json per_time_l1 = json::object();
    for (double tau : spec.times) {
      const Table* t = find_table(method, tau);
      if (!t) continue;
      const DensityField f = table_to_field(*t, spec.model_id);
      per_time_mass[format_g(tau)] = mass(f);
      if (method != reference && ref_density) {
        const Table* r = find_table(reference, tau);
        if (r) {
          const DensityField fr = table_to_field(*r, spec.model_id);
          per_time_l1[format_g(tau)] = l1_error(f, fr);
        }
      }
    }
    masses[method] = per_time_mass;
    if (!per_time_l1.empty()) l1s[method] = per_time_l1;
  }

  // reciprocity defects over fixed sample pairs (analytic g only)
  json recips = json::object();
  if (!special) {
    std::mt19937 rng(20190205);
    const double span = std::min(3.0, spec.solver.halfwidth[0] / 3.0);
    std::uniform_real_distribution<double> u(-span, span);
    std::vector<std::pair<Vec, Vec>> pairs;
    for (int i = 0; i < 20; ++i) {
      Vec a(dim), b(dim);
      for (int d = 0; d < dim; ++d) {
        a(d) = model->quad_center(d) + u(rng);
        b(d) = model->quad_center(d) + u(rng);
      }
      pairs.emplace_back(a, b);
    }
    const double tau_mid = spec.times[spec.times.size() / 2];
    for (const auto& method : spec.methods) {
      if (method == "approx" && needs_approx) {
        auto g = [&](double tau, const Vec& y, const Vec& y0) {
          if (dim == 1)
            return g_leading(make_approx1d(model, y0(0), theta_est.theta(0, 0)),
                             tau, y(0));
          return g_leading_nd(make_approxnd(model, y0, theta_est.theta), tau, y);
        };
        recips[method] = reciprocity_defect(g, tau_mid, pairs);
      } else if (method == "farfield") {
        auto g = [&](double tau, const Vec& y, const Vec& y0) {
          return ext::far_field_g(ext::FarFieldContext{model, y0, false}, tau, y);
        };
        recips[method] = reciprocity_defect(g, tau_mid, pairs);
      } else if (method == "exact" && spec.model_id == "dryfric") {
        auto g = [&](double tau, const Vec& y, const Vec& y0) {
          return exact::dryfric_g(tau, y(0), y0(0));
        };
        recips[method] = reciprocity_defect(g, tau_mid, pairs);
      } else if (method == "exact" && spec.model_id == "ou") {
        const double th = spec.params.at("theta");
        const double yi = spec.params.count("y_inf") ? spec.params.at("y_inf") : 0.0;
        auto g = [&](double tau, const Vec& y, const Vec& y0) {
          return std::exp(exact::log_ou_density_1d(th, yi, tau, y(0), y0(0)) -
                          model->log_f_inf_full(y));
        };
        recips[method] = reciprocity_defect(g, tau_mid, pairs);
      }
    }
  }

  json summary;
  summary["model"] = spec.model_id;
  summary["params"] = spec.params;
  summary["y0"] = spec.y0;
  summary["times"] = spec.times;
  summary["methods"] = spec.methods;
  summary["reference"] = reference;
  summary["grid"] = {{"domain", {spec.solver.halfwidth[0], spec.solver.halfwidth[1]}},
                     {"modes", {spec.solver.modes[0], spec.solver.modes[1]}}};
  if (!special && needs_approx) {
    json th = json::array();
    for (int i = 0; i < theta_est.theta.rows(); ++i) {
      json row = json::array();
      for (int j = 0; j < theta_est.theta.cols(); ++j)
        row.push_back(theta_est.theta(i, j));
      th.push_back(row);
    }
    summary["theta"] = th;
    summary["theta_source"] =
        theta_est.source == ThetaEstimate::Source::closed_form ? "closed_form"
                                                               : "quadrature";
    if (dim == 2) {
      json rhos = json::object();
      for (double tau : spec.times)
        rhos[format_g(tau)] = rho(nd_ctx->kernel, tau);
      summary["rho"] = rhos;
    }
  }
  summary["masses"] = masses;
  summary["l1_vs_reference"] = l1s;
  summary["reciprocity_defect"] = recips;
  summary["timings_ms"] = timings_ms;
  if (has_solver) {
    summary["solver_config"] = {
        {"dt", spec.solver.dt},
        {"ic_width", spec.solver.ic_width},
        {"conv_tol", spec.solver.conv_tol},
        {"edge_tol", spec.solver.edge_density_tol},
        {"boundary_mass_tol", spec.solver.boundary_mass_tol}};
  }
  std::ofstream js(std::filesystem::path(outdir) / "summary.json",
                   std::ios::binary);
  js << summary.dump(2) << "\n";

  return outdir;
}

std::string converge_json(const ExperimentSpec& spec) {
  if (is_special_model(spec.model_id))
    throw invalid_argument("converge: model " + spec.model_id +
                           " has no spectral solve");
  const DriftModel model = make_from_params(spec.model_id, spec.params);
  if (static_cast<int>(spec.y0.size()) != model.dim)
    throw invalid_argument("spec error at 'y0': expected " +
                           std::to_string(model.dim) + " component(s)");
  Vec y0v(model.dim);
  for (int i = 0; i < model.dim; ++i) y0v(i) = spec.y0[i];
  const double time = spec.times.back();
  const ConvergenceReport rep = mode_doubling_study(model, y0v, time, spec.solver);
  json out;
  out["model"] = spec.model_id;
  out["time"] = time;
  out["mode_counts"] = rep.mode_counts;
  out["l1_diffs"] = rep.l1_diffs;
  out["converged"] = rep.converged;
  out["accepted_modes"] = rep.accepted_modes;
  out["conv_tol"] = spec.solver.conv_tol;
  return out.dump(2);
}

}  // namespace fpx::exp
