#pragma once

#include "blossom/convexity.hpp"
#include "blossom/gp.hpp"
#include "blossom/types.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

namespace blossom {

/// Shared state for the sampled-minimizer information-gain acquisition:
/// posterior paths over a fixed support set, their argmin histogram, and the
/// factors needed to extend a path to an arbitrary candidate point. Built
/// once per model refit via prepare_pes_cache.
struct PesCache {
  std::vector<Vector> support;
  Vector support_mean;          // standardized units
  Matrix support_cov;
  JitteredCholesky support_factor;
  Matrix data_solves;           // L^-1 K(data, support)
  Matrix paths;                 // n_paths x m, standardized units
  double base_entropy = 0.0;
  Vector path_noise;            // one standard normal per path, reused at every x
  std::vector<double> gh_nodes;
  std::vector<double> gh_weights;
  int n_paths = 0;
  int n_fantasies = 0;
  std::uint64_t seed = 0;
};

struct AcquisitionContext {
  const GpModel* model = nullptr;
  Domain domain;
  double incumbent_best = 0.0;
  std::optional<ConvexRegion> region;
  std::optional<double> expected_inner_min;  // E[y_i], required for the regret acquisition
  std::optional<double> inner_sd;
  std::shared_ptr<const PesCache> pes_cache;
};

struct Proposal {
  Vector x;
  double value = 0.0;
  bool excluded_region_applied = false;
};

using AcquisitionFn = std::function<double(const AcquisitionContext&, const Vector&)>;

/// Closed-form expected improvement over the incumbent best:
/// (b - mu) Phi((b - mu)/sd) + sd phi((b - mu)/sd), limit max(b - mu, 0).
double expected_improvement(const AcquisitionContext& ctx, const Vector& x);

/// Same functional form with the expected inner minimum E[y_i] in place of
/// the incumbent best. Throws when expected_inner_min is absent.
double global_regret_reduction(const AcquisitionContext& ctx, const Vector& x);

/// Builds the path cache used by pes_discrete over the given support set.
std::shared_ptr<const PesCache> prepare_pes_cache(const GpModel& model,
                                                  std::vector<Vector> support, int n_paths,
                                                  int n_fantasies, std::uint64_t seed);

/// Discretized information gain about the minimizer location: the entropy of
/// the argmin distribution over the support set across posterior paths, minus
/// its expectation after conditioning on a fantasy observation at x
/// (Gauss-Hermite nodes on the posterior at x). Requires a prepared cache
/// with matching (n_paths, n_fantasies, seed).
double pes_discrete(const AcquisitionContext& ctx, const Vector& x, int n_paths, int n_fantasies,
                    std::uint64_t seed);

/// Coarse Latin-hypercube scan followed by simplex polish from the best
/// starts. Candidates inside `exclude` (when present, positive radius) are
/// discarded and the winner is flagged. Ties on the acquisition value prefer
/// the lower posterior mean, then the earlier scan candidate. Throws when the
/// exclusion region leaves no feasible candidate.
Proposal maximize_acquisition(const AcquisitionFn& f, const AcquisitionContext& ctx,
                              const std::optional<ConvexRegion>& exclude, int budget,
                              std::uint64_t seed);

}  // namespace blossom
