#pragma once

#include "blossom/convexity.hpp"
#include "blossom/gp.hpp"
#include "blossom/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace blossom {

enum class SupportOrigin { MinimizerSampled, VarianceSampled };

/// Finite point set on which posterior sample paths are drawn. Half the
/// points come from an approximate minimizer-location density, half from
/// rejection sampling with the posterior variance as unnormalized density.
struct SupportSet {
  std::vector<Vector> points;
  std::vector<bool> inner_mask;  // inside the convex region
  std::vector<SupportOrigin> origin;
  std::string diagnostic;  // set when a sampler had to fall back

  int inner_count() const;
  int outer_count() const;
};

/// Monte-Carlo estimate of the global regret together with the normal fit of
/// the inner minimum.
struct RegretEstimate {
  double value = 0.0;
  double mu_i = 0.0;
  double sigma_i = 0.0;
  int n_draws = 0;
  std::vector<double> outer_samples;  // y_o draws, one per posterior sample
};

/// Half minimizer-sampled (slice sampling over the exponentiated negative
/// lower confidence bound, exploration weight 2), half variance-sampled
/// (rejection sampling; falls back to uniform after 1e5 rejected proposals).
/// The inner mask is geometric: distance to the region center <= radius.
/// When the region has positive radius the set is adjusted to contain at
/// least one inner and one outer point.
SupportSet build_support(const GpModel& model, const ConvexRegion& region, const Domain& domain,
                         int n_support, std::uint64_t seed);

/// Maximum-likelihood normal fit (1/N variance convention) of the per-draw
/// minimum over inner support points. sigma is floored at 1e-12.
/// `draws` must have one column per support point, in order.
void inner_stats(const SupportSet& support, const Matrix& draws, double* mu_i, double* sigma_i);

/// Mean over outer samples of E[max(Z - y_o, 0)] with Z ~ N(mu_i, sigma_i^2).
double global_regret_sum(double mu_i, double sigma_i, const std::vector<double>& outer_samples);

/// Draws n_draws joint posterior samples over a fresh support set and
/// evaluates the closed-form marginalization of the inner minimum against
/// each sampled outer minimum. Deterministic for a fixed seed.
RegretEstimate estimate_global_regret(const GpModel& model, const ConvexRegion& region,
                                      const Domain& domain, int n_draws, int n_support,
                                      std::uint64_t seed);

}  // namespace blossom
