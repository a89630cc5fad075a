// fpx command-line experiment runner.  Links only the C API of the shared
// library.
#include <CLI11.hpp>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include "fpx.h"

namespace {

int resolve_threads(int flag_value) {
  if (flag_value > 0) return flag_value;
  if (const char* env = std::getenv("FPX_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return 0;  // library default (hardware concurrency)
}

int report(int status) {
  if (status != FPX_OK) std::fprintf(stderr, "fpx: %s\n", fpx_last_error());
  return status;
}

// trailing "key=value" model parameters of `fpx theta`
bool split_kv(const std::string& arg, std::string& key, double& value) {
  const auto eq = arg.find('=');
  if (eq == std::string::npos || eq == 0) return false;
  key = arg.substr(0, eq);
  try {
    std::size_t used = 0;
    value = std::stod(arg.substr(eq + 1), &used);
    if (used != arg.size() - eq - 1) return false;
  } catch (const std::exception&) {
    return false;
  }
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fpx: transition-density approximations for mean-reverting "
               "Fokker-Planck equations"};
  app.require_subcommand(1);

  std::string out_dir;
  int threads = 0;

  std::string spec_path;
  auto* run = app.add_subcommand("run", "run an experiment spec file");
  run->add_option("spec", spec_path, "experiment spec file")->required();
  run->add_option("--out", out_dir, "output directory (overrides the spec)");
  run->add_option("--threads", threads,
                  "worker threads (falls back to FPX_THREADS, then hardware)");

  std::string preset_name;
  auto* preset = app.add_subcommand(
      "preset", "run a built-in figure preset ('list' prints the names)");
  preset->add_option("name", preset_name, "preset name or 'list'")->required();
  preset->add_option("--out", out_dir, "output directory (overrides the preset)");
  preset->add_option("--threads", threads,
                     "worker threads (falls back to FPX_THREADS, then hardware)");

  std::string theta_model;
  std::vector<std::string> theta_params;
  auto* theta = app.add_subcommand("theta", "print the reversion matrix");
  theta->add_option("model", theta_model, "model id")->required();
  theta->add_option("params", theta_params, "model parameters as key=value");

  std::string conv_path;
  auto* conv = app.add_subcommand("converge", "mode-doubling convergence study");
  conv->add_option("spec", conv_path, "experiment spec file")->required();

  CLI11_PARSE(app, argc, argv);

  if (run->parsed()) {
    char* dir = nullptr;
    const int rc = fpx_run_experiment_file(
        spec_path.c_str(), out_dir.empty() ? nullptr : out_dir.c_str(),
        resolve_threads(threads), &dir);
    if (rc == FPX_OK) {
      std::printf("run written to %s\n", dir);
      fpx_string_free(dir);
    }
    return report(rc);
  }

  if (preset->parsed()) {
    if (preset_name == "list") {
      char* names = nullptr;
      const int rc = fpx_preset_names(&names);
      if (rc == FPX_OK) {
        std::fputs(names, stdout);
        fpx_string_free(names);
      }
      return report(rc);
    }
    char* dir = nullptr;
    const int rc = fpx_run_preset(preset_name.c_str(),
                                  out_dir.empty() ? nullptr : out_dir.c_str(),
                                  resolve_threads(threads), &dir);
    if (rc == FPX_OK) {
      std::printf("run written to %s\n", dir);
      fpx_string_free(dir);
    }
    return report(rc);
  }

  if (theta->parsed()) {
    std::vector<std::string> keys;
    std::vector<double> values;
    for (const auto& arg : theta_params) {
      std::string k;
      double v = 0.0;
      if (!split_kv(arg, k, v)) {
        std::fprintf(stderr, "fpx: expected key=value, got '%s'\n", arg.c_str());
        return FPX_ERR_INVALID;
      }
      keys.push_back(k);
      values.push_back(v);
    }
    std::vector<const char*> key_ptrs;
    for (const auto& k : keys) key_ptrs.push_back(k.c_str());
    double matrix[4] = {0, 0, 0, 0};
    int dim = 0, source = 0;
    const int rc = fpx_theta_by_id(theta_model.c_str(), key_ptrs.data(),
                                   values.data(), static_cast<int>(keys.size()),
                                   matrix, &dim, &source);
    if (rc == FPX_OK) {
      std::printf("theta (%s):\n",
                  source == FPX_THETA_CLOSED_FORM ? "closed form" : "quadrature");
      for (int i = 0; i < dim; ++i) {
        for (int j = 0; j < dim; ++j)
          std::printf("%s%.12g", j ? "  " : "  ", matrix[i * dim + j]);
        std::printf("\n");
      }
    }
    return report(rc);
  }

  if (conv->parsed()) {
    char* json = nullptr;
    const int rc = fpx_converge_file(conv_path.c_str(), &json);
    if (rc == FPX_OK) {
      std::puts(json);
      fpx_string_free(json);
    }
    return report(rc);
  }

  return FPX_ERR_INVALID;
}
