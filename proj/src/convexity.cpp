#include "blossom/convexity.hpp"

#include "blossom/linalg.hpp"
#include "blossom/math.hpp"

#include <cmath>
#include <stdexcept>

namespace blossom {

PdTestConfig PdTestConfig::from_epsilon(double epsilon) {
  if (!(epsilon > 0.0) || !(epsilon < 0.5))
    throw std::invalid_argument("PdTestConfig: epsilon must lie in (0, 0.5)");
  PdTestConfig cfg;
  cfg.epsilon = epsilon;
  cfg.n_samples = static_cast<int>(std::lround(1.0 / epsilon - 2.0));
  if (cfg.n_samples < 1) throw std::invalid_argument("PdTestConfig: epsilon gives n < 1");
  return cfg;
}

bool pd_test_belief(const HessianBelief& belief, const PdTestConfig& cfg, std::uint64_t seed) {
  const int dp = static_cast<int>(belief.active_dims.size());
  const int n = cfg.n_samples;
  Rng rng(seed);
  Matrix samples = sample_mvn(belief.triangle.mean, belief.triangle.covariance, n, rng);

  int pd_count = 0;
  Matrix h(dp, dp);
  for (int s = 0; s < n; ++s) {
    int idx = 0;
    for (int i = 0; i < dp; ++i)
      for (int j = i; j < dp; ++j) {
        h(i, j) = samples(s, idx);
        h(j, i) = samples(s, idx);
        ++idx;
      }
    if (cholesky_succeeds(h)) ++pd_count;
  }
  double rate = (pd_count + 1.0) / (n + 2.0);
  return rate >= 1.0 - cfg.epsilon;
}

bool pd_test_point(const GpModel& model, const Vector& x, const Domain& domain,
                   const PdTestConfig& cfg, std::uint64_t seed, std::string* diagnostic) {
  HessianBelief belief;
  try {
    belief = model.infer_hessian(x, domain);
  } catch (const std::invalid_argument& e) {
    if (diagnostic) *diagnostic = e.what();
    return false;
  }
  return pd_test_belief(belief, cfg, mix_seed(seed, hash_point(x)));
}

ConvexRegion pd_sphere_radius(const GpModel& model, const Vector& center, const Domain& domain,
                              int n_u, double h_r, const PdTestConfig& cfg, std::uint64_t seed) {
  if (n_u < 1) throw std::invalid_argument("pd_sphere_radius: n_u >= 1 required");
  if (!(h_r > 0.0)) throw std::invalid_argument("pd_sphere_radius: h_r > 0 required");
  const int d = domain.dim();

  ConvexRegion region;
  region.center = center;
  region.directions_tested = n_u;
  region.resolution = h_r;

  if (!pd_test_point(model, center, domain, cfg, mix_seed(seed, 0xC0), nullptr)) {
    region.radius = 0.0;
    return region;
  }

  auto pd_at = [&](const Vector& p) {
    return pd_test_point(model, p, domain, cfg, seed, nullptr);
  };

  double radius = domain.farthest_corner_distance(center);
  Rng dir_rng(mix_seed(seed, 0xD1));
  for (int i = 0; i < n_u; ++i) {
    Vector u = dir_rng.normal_vector(d);
    double nrm = u.norm();
    if (nrm == 0.0) continue;
    u /= nrm;

    // Clip the tested radius where the ray exits the box; the convex region
    // is the sphere intersected with the domain, so a direction that stays PD
    // all the way to the boundary does not shrink the estimate.
    double feasible = domain.exit_distance(center, u);
    double hi = std::min(radius, feasible);
    if (hi <= 0.0) continue;
    if (pd_at(center + hi * u)) continue;

    double lo = 0.0;  // the center has already passed
    while (hi - lo > h_r) {
      double mid = 0.5 * (lo + hi);
      if (pd_at(center + mid * u))
        lo = mid;
      else
        hi = mid;
    }
    radius = std::min(radius, hi);
  }
  region.radius = radius;
  return region;
}

}  // namespace blossom
