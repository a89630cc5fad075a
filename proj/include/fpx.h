/* fpx: transition densities of mean-reverting Fokker-Planck equations.
 *
 * C interface to the fpx core: drift-model catalog, Fisher-information
 * reversion estimates, the leading-order product-expansion density, the
 * spectral FPE solver, closed-form references, and the experiment runner.
 *
 * Conventions: every function returns FPX_OK (0) on success or an error
 * status; fpx_last_error() returns a thread-local message for the last
 * failure on the calling thread.  Opaque handles are freed with their
 * matching *_free function.
 */
#ifndef FPX_H
#define FPX_H

#ifdef __cplusplus
extern "C" {
#endif

#define FPX_OK 0
#define FPX_ERR_INVALID 2 /* rejected parameters or malformed specs */
#define FPX_ERR_NUMERIC 3 /* quadrature/solver/linear-algebra failures */

const char* fpx_version(void);
const char* fpx_last_error(void);

/* ------------------------------------------------------------------ */
/* model catalog                                                      */

typedef struct fpx_model_s fpx_model;

/* ids: ou, sech, dryfric, student1d, dwell1d, student2d, dwell2d; the
 * parameter table is passed as parallel key/value arrays. */
int fpx_model_create(const char* id, const char* const* keys,
                     const double* values, int nparams, fpx_model** out);
void fpx_model_free(fpx_model* model);
int fpx_model_dim(const fpx_model* model);

/* invariant density (includes the normalizing constant) */
int fpx_model_f_inf(const fpx_model* model, const double* y, double* out);

/* ------------------------------------------------------------------ */
/* reversion-speed matrix                                             */

#define FPX_THETA_CLOSED_FORM 0
#define FPX_THETA_QUADRATURE 1

/* theta: caller buffer of dim*dim doubles, row-major.  quad_error and
 * source may be NULL. */
int fpx_theta(const fpx_model* model, double* theta, double* quad_error,
              int* source);

/* convenience: build the model by id and return its theta */
int fpx_theta_by_id(const char* id, const char* const* keys,
                    const double* values, int nparams, double* theta,
                    int* dim, int* source);

/* ------------------------------------------------------------------ */
/* leading-order approximation                                        */

/* density at npts points (pts holds row-major dim-tuples); theta NULL
 * selects the model's closed form or the quadrature estimate */
int fpx_approx_density(const fpx_model* model, const double* theta,
                       const double* y0, double tau, const double* pts,
                       int npts, double* out);

/* 1D h field; with_b1 != 0 adds the first remainder correction */
int fpx_approx_h(const fpx_model* model, const double* theta, double y0,
                 double tau, const double* y, int npts, double* out,
                 int with_b1);

/* ------------------------------------------------------------------ */
/* spectral FPE solver                                                */

typedef struct {
  double halfwidth[2]; /* domain [-L, L] per axis */
  int modes[2];        /* power of two >= 64 per axis */
  double dt;
  double ic_width; /* initial Gaussian sd; 0 selects 2.56 cells */
  double conv_tol;
  double edge_density_tol;
  double boundary_mass_tol;
  double dryfric_smoothing_cells;
} fpx_solver_config;

void fpx_solver_config_default(fpx_solver_config* cfg);

/* out receives ntimes * prod(modes[0..dim-1]) values, time-major then
 * row-major over the grid */
int fpx_solve_fpe(const fpx_model* model, const double* y0,
                  const double* times, int ntimes,
                  const fpx_solver_config* cfg, double* out);

/* nodes of one grid axis: out receives cfg->modes[axis] values */
int fpx_grid_axis(const fpx_solver_config* cfg, int axis, double* out);

/* ------------------------------------------------------------------ */
/* closed-form references                                             */

int fpx_ou_density_1d(double theta, double y_inf, double tau, double y,
                      double y0, double* out);
int fpx_dryfric_density(double tau, double y, double y0, double* out);
int fpx_sqrt_density(double nu, double tau, double y, double y0, double* out);
/* solves a s + s a^T = 2I; a and sigma are m*m row-major */
int fpx_lyapunov_sigma_inf(const double* a, int m, double* sigma);

/* ------------------------------------------------------------------ */
/* experiment runner                                                  */

/* out_dir may be NULL to use the spec's own choice; threads <= 0 selects
 * hardware concurrency; *run_dir_out (optional) receives the run directory
 * and is released with fpx_string_free */
int fpx_run_experiment_file(const char* path, const char* out_dir, int threads,
                            char** run_dir_out);
int fpx_run_preset(const char* name, const char* out_dir, int threads,
                   char** run_dir_out);
/* newline-separated preset names */
int fpx_preset_names(char** names_out);
/* mode-doubling convergence study for the spec's model at its last time;
 * *json_out receives a JSON report */
int fpx_converge_file(const char* path, char** json_out);
void fpx_string_free(char* s);

#ifdef __cplusplus
}
#endif

#endif /* FPX_H */
