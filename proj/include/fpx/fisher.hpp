#pragma once

#include "fpx/common.hpp"
#include "fpx/models.hpp"

namespace fpx {

/// Which integrand realizes the reversion-speed average.  The two forms agree
/// for smooth conservative fields; tensor_square is mandatory when the drift
/// Jacobian is distributional (dry friction).
enum class ThetaForm { automatic, jacobian, tensor_square };

struct ThetaEstimate {
  Mat theta;           // symmetric positive definite
  double quad_error;   // max-norm change of the last panel doubling
  enum class Source { closed_form, quadrature } source;
};

/// <-grad A>_inf (or <A A^T>_inf) by panel-doubling Gauss-Legendre quadrature
/// against the invariant density.  Throws numerical_error when refinement
/// fails to stabilize, invalid_argument for a non-positive-definite result.
ThetaEstimate estimate_theta(const DriftModel& model,
                             ThetaForm form = ThetaForm::automatic);

/// Reversion matrix for the approximations: the model's closed form when
/// registered, else the quadrature estimate.
ThetaEstimate theta_for(const DriftModel& model);

}  // namespace fpx
