#include "blossom/linalg.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace blossom {

Vector JitteredCholesky::solve(const Vector& b) const {
  Vector y = L.triangularView<Eigen::Lower>().solve(b);
  return L.transpose().triangularView<Eigen::Upper>().solve(y);
}

Matrix JitteredCholesky::solve(const Matrix& B) const {
  Matrix y = L.triangularView<Eigen::Lower>().solve(B);
  return L.transpose().triangularView<Eigen::Upper>().solve(y);
}

Vector JitteredCholesky::solve_lower(const Vector& b) const {
  return L.triangularView<Eigen::Lower>().solve(b);
}

Matrix JitteredCholesky::solve_lower(const Matrix& B) const {
  return L.triangularView<Eigen::Lower>().solve(B);
}

double JitteredCholesky::log_det_half() const {
  double s = 0.0;
  for (int i = 0; i < L.rows(); ++i) s += std::log(L(i, i));
  return s;
}

namespace {

// In-place lower Cholesky; returns false on a non-positive pivot (or on a
// pivot below pivot_floor, used by the ladder to reject factorizations that
// only survive by rounding luck). Hand-rolled so strict failure is exactly
// "no real lower-triangular factor exists".
bool cholesky_lower(const Matrix& A, Matrix* L, double pivot_floor = 0.0) {
  const int n = static_cast<int>(A.rows());
  *L = Matrix::Zero(n, n);
  for (int j = 0; j < n; ++j) {
    double d = A(j, j);
    for (int k = 0; k < j; ++k) d -= (*L)(j, k) * (*L)(j, k);
    if (!(d > pivot_floor) || !std::isfinite(d)) return false;
    double lj = std::sqrt(d);
    (*L)(j, j) = lj;
    for (int i = j + 1; i < n; ++i) {
      double s = A(i, j);
      for (int k = 0; k < j; ++k) s -= (*L)(i, k) * (*L)(j, k);
      (*L)(i, j) = s / lj;
    }
  }
  return true;
}

}  // namespace

JitteredCholesky cholesky_with_ladder(const Matrix& A, double max_jitter, double scale) {
  const int n = static_cast<int>(A.rows());
  JitteredCholesky out;
  if (n == 0) {
    out.L = Matrix(0, 0);
    return out;
  }
  double rung = 0.0;
  for (;;) {
    Matrix Aj = A;
    if (rung > 0.0) Aj.diagonal().array() += rung * scale;
    double pivot_floor = 64.0 * std::numeric_limits<double>::epsilon() *
                         std::max(Aj.diagonal().maxCoeff(), 0.0);
    if (cholesky_lower(Aj, &out.L, pivot_floor)) {
      out.jitter = rung * scale;
      return out;
    }
    if (rung == 0.0)
      rung = 1e-20;
    else
      rung *= 10.0;
    if (rung > max_jitter) {
      std::ostringstream msg;
      msg << "cholesky_with_ladder: factorization failed up to jitter " << max_jitter * scale
          << " (n=" << n << ", diag range [" << A.diagonal().minCoeff() << ", "
          << A.diagonal().maxCoeff() << "])";
      throw FactorizationError(msg.str());
    }
  }
}

bool cholesky_succeeds(const Matrix& A) {
  Matrix L;
  return cholesky_lower(A, &L);
}

Matrix sample_mvn(const Vector& mean, const Matrix& cov, int n, Rng& rng) {
  const int m = static_cast<int>(mean.size());
  double scale = std::max(cov.diagonal().maxCoeff(), 0.0);
  if (scale <= 0.0) scale = 1.0;
  JitteredCholesky f = cholesky_with_ladder(cov, 1e-2, scale);
  Matrix out(n, m);
  for (int i = 0; i < n; ++i) {
    Vector z = rng.normal_vector(m);
    out.row(i) = (mean + f.L * z).transpose();
  }
  return out;
}

}  // namespace blossom
