#pragma once

#include "blossom/kernel.hpp"
#include "blossom/linalg.hpp"
#include "blossom/types.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace blossom {

/// A derivative-valued query: the |multi_index|-th mixed partial of the
/// latent function at `point`. Total order must be 0, 1 or 2.
struct DerivativeSpec {
  Vector point;
  MultiIndex multi_index;

  static DerivativeSpec value(Vector p) {
    DerivativeSpec q;
    q.multi_index = MultiIndex::Zero(p.size());
    q.point = std::move(p);
    return q;
  }
};

struct GaussianBelief {
  Vector mean;
  Matrix covariance;
};

/// Joint Gaussian over the upper-triangle Hessian entries at a point, for the
/// dimensions not pinned to the domain boundary.
struct HessianBelief {
  Matrix mean;              // d' x d', symmetrized from the triangle
  GaussianBelief triangle;  // d'(d'+1)/2 entries, row-major upper triangle
  std::vector<int> active_dims;
};

struct FitDiagnostics {
  bool degenerate_data = false;  // all y equal; prior-mode spec returned
  double objective = 0.0;        // negative (log marginal likelihood + log prior) at the optimum
  int winning_start = -1;
};

struct FitOptions {
  KernelFamily family = KernelFamily::Matern52;
  int n_restarts = 4;
  int max_evals_per_start = 0;  // 0 -> 120 * (d + 1)
};

/// MAP-II hyperparameter fit: maximizes log marginal likelihood plus
/// log-normal hyperpriors over a multi-start local ascent. Inputs are
/// normalized to [-1,1]^d and outputs standardized internally; the returned
/// spec is in original units. Priors (in normalized units): lengthscale
/// median 0.5 (a quarter of the domain width), output-scale median 1.
KernelSpec fit_hyperparameters(const std::vector<Observation>& data, const Domain& domain,
                               std::uint64_t seed, const FitOptions& options = {},
                               FitDiagnostics* diagnostics = nullptr);

/// Gaussian-process regression with noiseless observations and exact joint
/// derivative inference. The kernel matrix is factorized once at construction
/// with the adaptive jitter ladder: the recorded jitter is the smallest rung
/// of {0, 1e-20, 1e-19, ...} at which the Cholesky factorization succeeds;
/// rungs above 1e-2 raise FactorizationError. Jitter applies to the
/// standardized-output kernel matrix.
///
/// A constructed model is immutable and safe for concurrent read-only use.
class GpModel {
 public:
  GpModel(KernelSpec kernel, std::vector<Observation> data, Domain domain);

  const KernelSpec& kernel() const { return kernel_; }
  const std::vector<Observation>& data() const { return data_; }
  const Domain& domain() const { return domain_; }
  int size() const { return static_cast<int>(data_.size()); }
  double jitter() const { return chol_.jitter; }

  /// Exact conditional mean and covariance for a set of derivative queries,
  /// in original units.
  GaussianBelief posterior_joint(const std::vector<DerivativeSpec>& queries) const;

  /// Fast path for the order-0 posterior at one point.
  void mean_var(const Vector& x, double* mean, double* var) const;
  double posterior_mean(const Vector& x) const;

  /// Joint Gaussian over upper-triangle Hessian entries at x, restricted to
  /// dimensions where x is strictly interior to the domain. Throws
  /// std::invalid_argument when every dimension is on the boundary.
  HessianBelief infer_hessian(const Vector& x, const Domain& domain) const;

  /// n_draws independent joint samples of the latent function at the given
  /// points (rows are draws). Deterministic for a fixed seed.
  Matrix draw_posterior(const std::vector<Vector>& points, int n_draws, std::uint64_t seed) const;

  /// Posterior of the order-0 values at `points` in standardized units
  /// together with the output transform (y = y_mean + y_sd * standardized).
  /// Exposed for samplers that need the factorized joint.
  void standardized_joint(const std::vector<Vector>& points, Vector* mean, Matrix* cov) const;
  double y_mean() const { return y_mean_; }
  double y_sd() const { return y_sd_; }

  /// Precomputed triangular solves L^-1 K(data, points) for repeated
  /// cross-covariance queries against a fixed point set (standardized units).
  Matrix cross_solves(const std::vector<Vector>& points) const;

  /// Standardized posterior mean and variance at x plus the posterior
  /// covariance vector between f(x) and f(points), where `solves` came from
  /// cross_solves(points).
  void cross_posterior(const Vector& x, const std::vector<Vector>& points, const Matrix& solves,
                       double* mean, double* var, Vector* cov) const;

 private:
  Vector normalize_point(const Vector& x) const;
  // Posterior in normalized coordinates; unit_factors[i] converts entry i
  // back to original units (covariance scales by the factor product).
  void posterior_normalized(const std::vector<DerivativeSpec>& queries, Vector* mean, Matrix* cov,
                            std::vector<double>* unit_factors, std::vector<bool>* is_order0) const;

  KernelSpec kernel_;               // original units
  std::vector<Observation> data_;   // original units
  Domain domain_;
  KernelSpec norm_kernel_;          // normalized units
  Matrix x_norm_;                   // n x d normalized inputs
  Vector y_norm_;                   // standardized outputs
  double y_mean_ = 0.0;
  double y_sd_ = 1.0;
  Vector half_width_;
  JitteredCholesky chol_;
  Vector alpha_;
};

}  // namespace blossom
