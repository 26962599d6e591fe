#pragma once

#include "blossom/types.hpp"

#include <functional>
#include <string>
#include <vector>

namespace blossom {

class GpModel;

/// Change of variables z = T (x_active - origin_active) chosen so that a
/// quadratic with Hessian H becomes an identity quadratic in z. With the
/// Cholesky factorization H = C C^T the transform is T = C^T, which gives
/// x^T H x = z^T z. Dimensions outside active_dims stay frozen at the origin.
struct RescaledProblem {
  Matrix transform;         // T
  Matrix inverse;           // T^-1
  Vector origin;            // full-dimensional expansion center
  Matrix hessian_estimate;  // the PD matrix behind the transform (identity on fallback)
  std::vector<int> active_dims;
  Domain domain;
  bool identity_fallback = false;  // Hessian mean was not PD, transform is identity

  int active_count() const { return static_cast<int>(active_dims.size()); }

  Vector to_z(const Vector& x_full) const;
  /// Inverse map; frozen dimensions are filled from the origin. Not clamped.
  Vector to_x(const Vector& z) const;

  static RescaledProblem identity(Domain domain, Vector origin);
  static RescaledProblem from_hessian(const Matrix& hessian, Vector origin, Domain domain,
                                      std::vector<int> active_dims);
};

struct LocalResult {
  Vector x_final;
  double y_final = 0.0;
  int n_evals = 0;       // objective evaluations, finite differences included
  double grad_norm = 0.0;
  bool converged = false;
  int n_line_searches = 0;
  std::string diagnostic;
};

using LocalTraceCallback =
    std::function<void(const Vector& x, double y, double grad_norm, int evals_so_far)>;

/// BFGS in the rescaled coordinates with the identity as the initial inverse
/// Hessian estimate. Gradients are central finite differences with step 1e-6
/// in z units (2 * active_count evaluations each). The line search enforces
/// sufficient decrease and curvature (strong Wolfe). Iterates are kept inside
/// the domain box; a boundary dimension whose gradient pushes outward is
/// frozen for that step and excluded from the convergence norm.
LocalResult bfgs_minimize(const std::function<double(const Vector&)>& objective,
                          const RescaledProblem& problem, const Vector& x0, double grad_tol,
                          int max_evals, const LocalTraceCallback& on_iteration = nullptr);

/// Build the rescaling from the GP's Hessian belief at x_hat. If the belief
/// mean is not positive definite the transform falls back to the identity and
/// the fallback flag is set.
RescaledProblem build_rescaling(const GpModel& model, const Vector& x_hat, const Domain& domain);

}  // namespace blossom
