#pragma once

#include "blossom/gp.hpp"
#include "blossom/types.hpp"

#include <cstdint>
#include <string>

namespace blossom {

/// Sample-count configuration for the probabilistic positive-definite test.
/// With a uniform Bernoulli prior, passing the test (all n samples PD) means
/// the posterior expected PD rate is 1 - epsilon where epsilon = 1/(n+2).
struct PdTestConfig {
  double epsilon = 0.01;
  int n_samples = 98;

  static PdTestConfig from_epsilon(double epsilon);
};

/// Sphere around the posterior-mean minimizer with a high probability of the
/// objective being convex inside.
struct ConvexRegion {
  Vector center;
  double radius = 0.0;
  int directions_tested = 0;
  double resolution = 0.0;

  bool contains(const Vector& x) const {
    return radius > 0.0 && (x - center).norm() <= radius;
  }
};

/// Draws n Hessian samples from the GP belief at x and checks each for a real
/// Cholesky factorization. True iff (pd_count + 1)/(n + 2) >= 1 - epsilon,
/// which with epsilon = 1/(n+2) means every sample must be PD. Hessian samples
/// are seeded from (seed, point hash) so repeated tests at a point agree.
/// Points with no interior dimension fail with a diagnostic.
bool pd_test_point(const GpModel& model, const Vector& x, const Domain& domain,
                   const PdTestConfig& cfg, std::uint64_t seed, std::string* diagnostic = nullptr);

/// PD test applied directly to a Hessian-triangle belief (d' active dims).
bool pd_test_belief(const HessianBelief& belief, const PdTestConfig& cfg, std::uint64_t seed);

/// Estimate of the radius of the convex sphere centred at `center`: the
/// minimum over n_u random unit directions of the first PD-failing radius,
/// each located by a binary line search to resolution h_r. The first
/// direction starts from the farthest-corner distance; later directions test
/// the current estimate first and only shrink it on failure. Radii along
/// directions that exit the box are clipped at the boundary. Returns radius 0
/// when the center itself fails the PD test.
ConvexRegion pd_sphere_radius(const GpModel& model, const Vector& center, const Domain& domain,
                              int n_u, double h_r, const PdTestConfig& cfg, std::uint64_t seed);

}  // namespace blossom
