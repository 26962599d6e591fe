#include "blossom/linalg.hpp"

#include "test_util.hpp"

#include <doctest.h>

using namespace blossom;
using blossom::testing::vec;

TEST_CASE("ladder records the first succeeding rung and is repeatable") {
  // Well-conditioned PD matrix: no jitter needed.
  Matrix a(2, 2);
  a << 2.0, 0.3, 0.3, 1.0;
  auto f = cholesky_with_ladder(a);
  CHECK(f.jitter == 0.0);
  CHECK(((f.L * f.L.transpose()) - a).norm() < 1e-12);

  // Singular matrix: some positive rung is required, and the rung is stable
  // across repeated factorizations.
  Matrix s(2, 2);
  s << 1.0, 1.0, 1.0, 1.0;
  auto f1 = cholesky_with_ladder(s);
  auto f2 = cholesky_with_ladder(s);
  CHECK(f1.jitter > 0.0);
  CHECK(f1.jitter == f2.jitter);
  Matrix reconstructed = f1.L * f1.L.transpose();
  Matrix target = s + f1.jitter * Matrix::Identity(2, 2);
  CHECK((reconstructed - target).norm() / target.norm() < 1e-8);

  // Indefinite matrix: every rung fails below the abort ceiling.
  Matrix ind(2, 2);
  ind << 1.0, 0.0, 0.0, -1.0;
  CHECK_THROWS_AS(cholesky_with_ladder(ind), FactorizationError);
}

TEST_CASE("rung sequence starts at 1e-20 and rises by decades") {
  // A matrix with a -1e-12 eigenvalue needs the first rung above 1e-12.
  Matrix m = Matrix::Identity(2, 2);
  m(1, 1) = -1e-12;
  auto f = cholesky_with_ladder(m);
  CHECK(f.jitter > 1e-12);
  CHECK(f.jitter <= 1e-11 * 1.0000001);
}

TEST_CASE("pd check is exact for definite and indefinite matrices") {
  Matrix pd(2, 2);
  pd << 2.0, 0.0, 0.0, 3.0;
  CHECK(cholesky_succeeds(pd));
  Matrix saddle(2, 2);
  saddle << 1.0, 0.0, 0.0, -1.0;
  CHECK_FALSE(cholesky_succeeds(saddle));
  Matrix semi(2, 2);
  semi << 1.0, 1.0, 1.0, 1.0;
  CHECK_FALSE(cholesky_succeeds(semi));
}

TEST_CASE("solve round trips") {
  Matrix a(3, 3);
  a << 4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 2.0;
  auto f = cholesky_with_ladder(a);
  Vector b = vec({1.0, -2.0, 0.5});
  Vector x = f.solve(b);
  CHECK((a * x - b).norm() < 1e-10);
}

TEST_CASE("mvn sampler matches mean and covariance") {
  Vector mean = vec({1.0, -2.0});
  Matrix cov(2, 2);
  cov << 1.0, 0.6, 0.6, 0.5;
  Rng rng(5);
  Matrix draws = sample_mvn(mean, cov, 40000, rng);
  Vector emp_mean = draws.colwise().mean();
  Matrix centered = draws.rowwise() - emp_mean.transpose();
  Matrix emp_cov = centered.transpose() * centered / draws.rows();
  CHECK((emp_mean - mean).norm() < 0.02);
  CHECK((emp_cov - cov).norm() < 0.03);
}
