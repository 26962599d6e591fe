#include "blossom/convexity.hpp"

#include "blossom/math.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace blossom;
using namespace blossom::testing;

namespace {

HessianBelief belief_2x2(double h11, double h12, double h22, double var) {
  HessianBelief b;
  b.active_dims = {0, 1};
  b.mean = Matrix(2, 2);
  b.mean << h11, h12, h12, h22;
  b.triangle.mean = vec({h11, h12, h22});
  b.triangle.covariance = var * Matrix::Identity(3, 3);
  return b;
}

GpModel fit_surface(const std::function<double(const Vector&)>& f, const Domain& dom,
                    int n_points, std::uint64_t seed) {
  Rng rng(seed);
  auto pts = latin_hypercube(dom, n_points, rng);
  std::vector<Observation> data;
  for (const auto& x : pts) data.push_back({x, f(x)});
  KernelSpec spec = fit_hyperparameters(data, dom, seed);
  return GpModel(spec, data, dom);
}

}  // namespace

TEST_CASE("epsilon to sample-count conversion") {
  PdTestConfig cfg = PdTestConfig::from_epsilon(0.01);
  CHECK(cfg.n_samples == 98);
  CHECK_THROWS_AS(PdTestConfig::from_epsilon(0.0), std::invalid_argument);
  CHECK_THROWS_AS(PdTestConfig::from_epsilon(0.6), std::invalid_argument);
}

TEST_CASE("near-deterministic PD belief passes, saddle fails") {
  PdTestConfig cfg = PdTestConfig::from_epsilon(0.01);
  CHECK(pd_test_belief(belief_2x2(2.0, 0.0, 2.0, 1e-12), cfg, 1));
  CHECK_FALSE(pd_test_belief(belief_2x2(1.0, 0.0, -1.0, 1e-12), cfg, 1));
}

TEST_CASE("bowl surface passes the PD test at the origin") {
  Domain dom = Domain::cube(2, -1.0, 1.0);
  PdTestConfig cfg = PdTestConfig::from_epsilon(0.01);
  int passes = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    GpModel model =
        fit_surface([](const Vector& x) { return x.squaredNorm(); }, dom, 40, 100 + seed);
    if (pd_test_point(model, vec({0.0, 0.0}), dom, cfg, seed)) ++passes;
  }
  CHECK(passes >= 4);
}

TEST_CASE("saddle surface fails the PD test at the origin") {
  Domain dom = Domain::cube(2, -1.0, 1.0);
  PdTestConfig cfg = PdTestConfig::from_epsilon(0.01);
  int fails = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    GpModel model = fit_surface([](const Vector& x) { return x[0] * x[0] - x[1] * x[1]; }, dom,
                                40, 200 + seed);
    if (!pd_test_point(model, vec({0.0, 0.0}), dom, cfg, seed)) ++fails;
  }
  CHECK(fails >= 4);
}

TEST_CASE("boundary-only points fail with a diagnostic") {
  Domain dom = Domain::cube(2, -1.0, 1.0);
  GpModel model = fit_surface([](const Vector& x) { return x.squaredNorm(); }, dom, 25, 7);
  PdTestConfig cfg = PdTestConfig::from_epsilon(0.05);
  std::string diag;
  CHECK_FALSE(pd_test_point(model, vec({1.0, 1.0}), dom, cfg, 0, &diag));
  CHECK(!diag.empty());
}

TEST_CASE("radius is zero when the center fails") {
  Domain dom = Domain::cube(2, -1.0, 1.0);
  GpModel model = fit_surface([](const Vector& x) { return x[0] * x[0] - x[1] * x[1]; }, dom, 40,
                              11);
  PdTestConfig cfg = PdTestConfig::from_epsilon(0.01);
  ConvexRegion region = pd_sphere_radius(model, vec({0.0, 0.0}), dom, 8, 1e-3, cfg, 3);
  CHECK(region.radius == 0.0);
}

TEST_CASE("globally convex surface yields a large radius") {
  Domain dom = Domain::cube(2, -1.0, 1.0);
  PdTestConfig cfg = PdTestConfig::from_epsilon(0.01);
  int big = 0;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    GpModel model =
        fit_surface([](const Vector& x) { return x.squaredNorm(); }, dom, 60, 300 + seed);
    ConvexRegion region =
        pd_sphere_radius(model, vec({0.0, 0.0}), dom, 16, 1e-3, cfg, 400 + seed);
    if (region.radius >= 0.5) ++big;
    CHECK(region.radius <= dom.farthest_corner_distance(vec({0.0, 0.0})) + 1e-12);
  }
  CHECK(big >= 2);
}

TEST_CASE("sine basin radius is bounded by the inflection points") {
  // sin(2 pi x) on [0,1] is convex only on (0.5, 1.0); from the minimum at
  // 0.75 the true convex radius is 0.25.
  Domain dom = Domain::cube(1, 0.0, 1.0);
  PdTestConfig cfg = PdTestConfig::from_epsilon(0.01);
  int ok = 0;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    GpModel model = fit_surface(
        [](const Vector& x) { return std::sin(2.0 * std::numbers::pi * x[0]); }, dom, 25,
        500 + seed);
    ConvexRegion region = pd_sphere_radius(model, vec({0.75}), dom, 12, 1e-3, cfg, 600 + seed);
    if (region.radius <= 0.3) ++ok;
    CHECK(region.radius > 0.0);
  }
  CHECK(ok >= 2);
}

TEST_CASE("sphere radius is deterministic for a fixed seed") {
  Domain dom = Domain::cube(2, -1.0, 1.0);
  GpModel model = fit_surface([](const Vector& x) { return x.squaredNorm(); }, dom, 40, 17);
  PdTestConfig cfg = PdTestConfig::from_epsilon(0.02);
  ConvexRegion a = pd_sphere_radius(model, vec({0.1, -0.2}), dom, 10, 1e-3, cfg, 42);
  ConvexRegion b = pd_sphere_radius(model, vec({0.1, -0.2}), dom, 10, 1e-3, cfg, 42);
  CHECK(a.radius == b.radius);
}
