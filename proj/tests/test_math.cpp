#include "blossom/math.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace blossom;

TEST_CASE("rng determinism and basic moments") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

  Rng r(7);
  double mean = 0.0, var = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    double z = r.normal();
    mean += z;
    var += z * z;
  }
  mean /= n;
  var = var / n - mean * mean;
  CHECK(std::abs(mean) < 0.03);
  CHECK(std::abs(var - 1.0) < 0.05);
}

TEST_CASE("normal cdf and pdf basics") {
  CHECK(normal_cdf(0.0) == doctest::Approx(0.5));
  CHECK(normal_pdf(0.0) == doctest::Approx(1.0 / std::sqrt(2.0 * std::numbers::pi)));
  CHECK(normal_cdf(10.0) == doctest::Approx(1.0));
  CHECK(normal_cdf(-10.0) == doctest::Approx(0.0));
}

TEST_CASE("normal expected excess matches quadrature") {
  // E[max(Z - a, 0)] via trapezoidal quadrature over a wide truncation.
  auto quad = [](double mu, double sd, double a) {
    const int n = 400000;
    double lo = mu - 10.0 * sd, hi = mu + 10.0 * sd;
    double h = (hi - lo) / n;
    double acc = 0.0;
    for (int i = 0; i <= n; ++i) {
      double z = lo + i * h;
      double w = (i == 0 || i == n) ? 0.5 : 1.0;
      acc += w * std::max(z - a, 0.0) * normal_pdf((z - mu) / sd) / sd;
    }
    return acc * h;
  };
  for (auto [mu, sd, a] : {std::tuple{0.0, 1.0, 0.0}, {1.5, 0.3, 1.0}, {-2.0, 2.0, 1.0}}) {
    CHECK(normal_expected_excess(mu, sd, a) == doctest::Approx(quad(mu, sd, a)).epsilon(1e-8));
  }
  CHECK(normal_expected_excess(2.0, 0.0, 1.0) == doctest::Approx(1.0));
  CHECK(normal_expected_excess(1.0, 0.0, 2.0) == doctest::Approx(0.0));
}

TEST_CASE("latin hypercube covers strata") {
  Domain dom = Domain::cube(2, -1.0, 3.0);
  Rng rng(3);
  auto pts = latin_hypercube(dom, 16, rng);
  REQUIRE(pts.size() == 16);
  for (int k = 0; k < 2; ++k) {
    std::vector<bool> hit(16, false);
    for (const auto& p : pts) {
      CHECK(dom.contains(p));
      int cell = static_cast<int>((p[k] - dom.lower[k]) / dom.width(k) * 16);
      hit[std::min(cell, 15)] = true;
    }
    for (bool h : hit) CHECK(h);
  }
}

TEST_CASE("gauss hermite integrates low-order polynomials exactly") {
  std::vector<double> nodes, weights;
  gauss_hermite(7, &nodes, &weights);
  double m0 = 0.0, m2 = 0.0, m4 = 0.0;
  for (int i = 0; i < 7; ++i) {
    m0 += weights[i];
    m2 += weights[i] * nodes[i] * nodes[i];
    m4 += weights[i] * std::pow(nodes[i], 4);
  }
  // Against exp(-t^2): integral 1 -> sqrt(pi), t^2 -> sqrt(pi)/2, t^4 -> 3 sqrt(pi)/4.
  CHECK(m0 == doctest::Approx(std::sqrt(std::numbers::pi)).epsilon(1e-12));
  CHECK(m2 == doctest::Approx(0.5 * std::sqrt(std::numbers::pi)).epsilon(1e-12));
  CHECK(m4 == doctest::Approx(0.75 * std::sqrt(std::numbers::pi)).epsilon(1e-12));
}

TEST_CASE("slice sampler approximates a truncated normal") {
  Domain dom = Domain::cube(1, -4.0, 4.0);
  auto log_density = [](const Vector& x) { return -0.5 * x[0] * x[0] / 0.25; };  // sd 0.5
  Rng rng(11);
  auto samples = slice_sample(log_density, dom, Vector::Zero(1), 4000, 50, 2, rng);
  double mean = 0.0, var = 0.0;
  for (const auto& s : samples) mean += s[0];
  mean /= samples.size();
  for (const auto& s : samples) var += (s[0] - mean) * (s[0] - mean);
  var /= samples.size();
  CHECK(std::abs(mean) < 0.05);
  CHECK(var == doctest::Approx(0.25).epsilon(0.15));
}

TEST_CASE("nelder mead finds a quadratic minimum inside the box") {
  Domain dom = Domain::cube(3, -2.0, 2.0);
  Vector target(3);
  target << 0.7, -1.1, 0.3;
  auto f = [&](const Vector& x) { return (x - target).squaredNorm(); };
  double best;
  Vector x = nelder_mead(f, dom, Vector::Zero(3), 0.1, 2000, &best);
  CHECK((x - target).norm() < 1e-4);
}
