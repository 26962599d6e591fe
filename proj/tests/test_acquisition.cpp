#include "blossom/acquisition.hpp"

#include "blossom/math.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <cmath>

using namespace blossom;
using namespace blossom::testing;

namespace {

GpModel prior_model(double output_scale, const Domain& dom) {
  KernelSpec s;
  s.family = KernelFamily::Matern52;
  s.output_scale = output_scale;
  s.lengthscales = Vector::Constant(dom.dim(), 0.4);
  return GpModel(s, {}, dom);
}

AcquisitionContext make_ctx(const GpModel& model, double incumbent) {
  AcquisitionContext ctx;
  ctx.model = &model;
  ctx.domain = model.domain();
  ctx.incumbent_best = incumbent;
  return ctx;
}

// Quadrature oracle for E[max(ref - X, 0)], X ~ N(mu, sd^2).
double improvement_quadrature(double ref, double mu, double sd) {
  const int n = 200000;
  double lo = mu - 10.0 * sd, hi = mu + 10.0 * sd;
  double h = (hi - lo) / n;
  double acc = 0.0;
  for (int i = 0; i <= n; ++i) {
    double x = lo + i * h;
    double w = (i == 0 || i == n) ? 0.5 : 1.0;
    acc += w * std::max(ref - x, 0.0) * normal_pdf((x - mu) / sd) / sd;
  }
  return acc * h;
}

}  // namespace

TEST_CASE("expected improvement analytic anchors") {
  Domain dom = Domain::cube(1, 0.0, 1.0);
  GpModel prior = prior_model(1.0, dom);
  AcquisitionContext ctx = make_ctx(prior, 0.0);  // mu = b = 0, sd = 1
  CHECK(expected_improvement(ctx, vec({0.5})) == doctest::Approx(normal_pdf(0.0)).epsilon(1e-9));

  // At an observed point the posterior sd vanishes.
  std::vector<Observation> data = {{vec({0.4}), 5.0}, {vec({0.8}), 5.5}};
  GpModel model(prior.kernel(), data, dom);
  AcquisitionContext c2 = make_ctx(model, 4.0);  // mu = b + 1
  CHECK(expected_improvement(c2, vec({0.4})) == doctest::Approx(0.0).epsilon(1e-6));
  AcquisitionContext c3 = make_ctx(model, 7.0);  // mu = b - 2
  CHECK(expected_improvement(c3, vec({0.4})) == doctest::Approx(2.0).epsilon(1e-6));
}

TEST_CASE("regret acquisition anchors and quadrature check") {
  Domain dom = Domain::cube(1, 0.0, 1.0);
  GpModel prior = prior_model(1.0, dom);
  AcquisitionContext ctx = make_ctx(prior, 123.0);
  ctx.expected_inner_min = 0.0;  // equals the prior mean
  CHECK(global_regret_reduction(ctx, vec({0.5})) ==
        doctest::Approx(normal_pdf(0.0)).epsilon(1e-9));

  // mu = 0, sd = 0.5, E[y_i] = 1: the closed form must match quadrature.
  GpModel half = prior_model(0.5, dom);
  AcquisitionContext c2 = make_ctx(half, 0.0);
  c2.expected_inner_min = 1.0;
  double value = global_regret_reduction(c2, vec({0.5}));
  CHECK(value == doctest::Approx(improvement_quadrature(1.0, 0.0, 0.5)).epsilon(1e-6));
  CHECK(value == doctest::Approx(normal_cdf(2.0) + 0.5 * normal_pdf(2.0)).epsilon(1e-9));

  // sd -> 0 cases at an observed point.
  std::vector<Observation> data = {{vec({0.4}), 5.0}, {vec({0.8}), 5.5}};
  GpModel model(prior.kernel(), data, dom);
  AcquisitionContext c3 = make_ctx(model, 0.0);
  c3.expected_inner_min = 0.0;  // E[y_i] = 0, mu = 5
  CHECK(global_regret_reduction(c3, vec({0.4})) == doctest::Approx(0.0).epsilon(1e-6));

  AcquisitionContext c4 = make_ctx(model, 0.0);
  CHECK_THROWS_AS(global_regret_reduction(c4, vec({0.4})), std::invalid_argument);
}

TEST_CASE("regret acquisition equals EI when the references coincide") {
  Domain dom = Domain::cube(1, 0.0, 1.0);
  std::vector<Observation> data = {{vec({0.2}), 1.0}, {vec({0.6}), -0.5}, {vec({0.9}), 0.3}};
  KernelSpec spec = fit_hyperparameters(data, dom, 1);
  GpModel model(spec, data, dom);
  AcquisitionContext ctx = make_ctx(model, -0.5);
  ctx.expected_inner_min = -0.5;
  Rng rng(3);
  for (int i = 0; i < 25; ++i) {
    Vector x = vec({rng.uniform(0.0, 1.0)});
    CHECK(expected_improvement(ctx, x) == global_regret_reduction(ctx, x));
  }
}

TEST_CASE("both acquisitions grow with the posterior sd at a fixed mean gap") {
  Domain dom = Domain::cube(1, 0.0, 1.0);
  double prev_ei = -1.0, prev_grr = -1.0;
  for (double scale : {0.25, 0.5, 1.0, 2.0}) {
    GpModel prior = prior_model(scale, dom);
    AcquisitionContext ctx = make_ctx(prior, 0.3);  // fixed gap b - mu = 0.3
    ctx.expected_inner_min = 0.3;
    double ei = expected_improvement(ctx, vec({0.5}));
    double grr = global_regret_reduction(ctx, vec({0.5}));
    CHECK(ei > prev_ei);
    CHECK(grr > prev_grr);
    CHECK(ei >= 0.0);
    prev_ei = ei;
    prev_grr = grr;
  }
}

TEST_CASE("information gain vanishes at zero variance and singleton support") {
  Domain dom = Domain::cube(1, 0.0, 1.0);
  std::vector<Observation> data = {{vec({0.3}), 0.0}, {vec({0.7}), -1.0}};
  KernelSpec spec = fit_hyperparameters(data, dom, 4);
  GpModel model(spec, data, dom);

  AcquisitionContext ctx = make_ctx(model, -1.0);
  std::vector<Vector> support;
  for (int i = 0; i < 25; ++i) support.push_back(vec({i / 24.0}));
  ctx.pes_cache = prepare_pes_cache(model, support, 120, 5, 9);
  CHECK(pes_discrete(ctx, vec({0.3}), 120, 5, 9) <= 1e-6);  // observed: nothing to learn

  AcquisitionContext single = make_ctx(model, -1.0);
  single.pes_cache = prepare_pes_cache(model, {vec({0.5})}, 120, 5, 9);
  CHECK(pes_discrete(single, vec({0.5}), 120, 5, 9) == 0.0);

  AcquisitionContext missing = make_ctx(model, -1.0);
  CHECK_THROWS_AS(pes_discrete(missing, vec({0.5}), 120, 5, 9), std::logic_error);
}

TEST_CASE("information gain prefers an unresolved basin over a resolved point") {
  // Two symmetric dips with only coarse observations: evaluating inside a
  // candidate basin is informative, evaluating at a known point is not.
  Domain dom = Domain::cube(1, 0.0, 1.0);
  std::vector<Observation> data;
  for (double x : {0.0, 0.165, 0.5, 0.835, 1.0}) {
    double v = std::cos(4.0 * std::numbers::pi * x);  // dips at 0.25 and 0.75
    data.push_back({vec({x}), v});
  }
  KernelSpec spec = fit_hyperparameters(data, dom, 6);
  GpModel model(spec, data, dom);
  AcquisitionContext ctx = make_ctx(model, -1.0);
  std::vector<Vector> support;
  for (int i = 0; i < 41; ++i) support.push_back(vec({i / 40.0}));
  ctx.pes_cache = prepare_pes_cache(model, support, 200, 7, 11);
  double at_basin = pes_discrete(ctx, vec({0.25}), 200, 7, 11);
  double at_known = pes_discrete(ctx, vec({0.5}), 200, 7, 11);
  CHECK(at_basin > at_known);
  CHECK(at_basin > 0.0);
}

TEST_CASE("maximizer finds an unconstrained peak") {
  Domain dom = Domain::cube(2, -1.0, 1.0);
  GpModel prior = prior_model(1.0, dom);
  AcquisitionContext ctx = make_ctx(prior, 0.0);
  Vector target = vec({0.31, -0.42});
  AcquisitionFn f = [&](const AcquisitionContext&, const Vector& x) {
    return -(x - target).norm();
  };
  Proposal p = maximize_acquisition(f, ctx, std::nullopt, 4000, 5);
  CHECK((p.x - target).norm() < 1e-2);
  CHECK_FALSE(p.excluded_region_applied);
  CHECK(dom.contains(p.x));
}

TEST_CASE("exclusion pushes the winner to the sphere boundary") {
  Domain dom = Domain::cube(2, -1.0, 1.0);
  GpModel prior = prior_model(1.0, dom);
  AcquisitionContext ctx = make_ctx(prior, 0.0);
  Vector target = vec({0.1, 0.2});
  AcquisitionFn f = [&](const AcquisitionContext&, const Vector& x) {
    return -(x - target).norm();
  };
  ConvexRegion region;
  region.center = target;
  region.radius = 0.2;
  Proposal p = maximize_acquisition(f, ctx, region, 4000, 6);
  CHECK(p.excluded_region_applied);
  double dist = (p.x - target).norm();
  CHECK(dist > 0.2);
  CHECK(dist == doctest::Approx(0.2).epsilon(0.1));
  CHECK(std::abs(dist - 0.2) < 0.02);
}

TEST_CASE("budget of one returns the single scanned point") {
  Domain dom = Domain::cube(2, -1.0, 1.0);
  GpModel prior = prior_model(1.0, dom);
  AcquisitionContext ctx = make_ctx(prior, 0.0);
  AcquisitionFn f = [](const AcquisitionContext&, const Vector& x) { return -x.norm(); };
  Proposal p = maximize_acquisition(f, ctx, std::nullopt, 1, 7);
  CHECK(dom.contains(p.x));
}

TEST_CASE("an exclusion region covering the domain leaves no proposal") {
  Domain dom = Domain::cube(1, 0.0, 1.0);
  GpModel prior = prior_model(1.0, dom);
  AcquisitionContext ctx = make_ctx(prior, 0.0);
  ConvexRegion region;
  region.center = vec({0.5});
  region.radius = 10.0;
  AcquisitionFn f = [](const AcquisitionContext&, const Vector&) { return 1.0; };
  CHECK_THROWS(maximize_acquisition(f, ctx, region, 100, 8));
}
