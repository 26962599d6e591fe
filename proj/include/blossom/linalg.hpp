#pragma once

#include "blossom/math.hpp"
#include "blossom/types.hpp"

#include <stdexcept>
#include <string>

namespace blossom {

/// Thrown when a kernel matrix cannot be factorized even at the top of the
/// jitter ladder. Carries basic conditioning diagnostics.
class FactorizationError : public std::runtime_error {
 public:
  explicit FactorizationError(const std::string& what) : std::runtime_error(what) {}
};

/// Lower-triangular Cholesky factor together with the diagonal jitter that was
/// actually added to make the factorization succeed.
struct JitteredCholesky {
  Matrix L;
  double jitter = 0.0;

  Vector solve(const Vector& b) const;   // (L L^T) x = b
  Matrix solve(const Matrix& B) const;
  Vector solve_lower(const Vector& b) const;  // L x = b
  Matrix solve_lower(const Matrix& B) const;
  double log_det_half() const;  // sum log L_ii
};

/// Attempt a Cholesky factorization of A + jitter*I, walking the jitter ladder
/// {0, 1e-20, 1e-19, ...} in decade increments and stopping at the first rung
/// that succeeds. Rungs above `max_jitter` abort with FactorizationError.
/// `scale` multiplies the ladder rungs; use 1 for matrices with O(1) diagonal.
JitteredCholesky cholesky_with_ladder(const Matrix& A, double max_jitter = 1e-2,
                                      double scale = 1.0);

/// True iff the matrix admits a real Cholesky factorization (strictly positive
/// pivots). No jitter is added; this is the positive-definiteness test.
bool cholesky_succeeds(const Matrix& A);

/// Draw n samples from N(mean, cov). The covariance factorization uses a
/// ladder scaled to the matrix diagonal, so PSD matrices with tiny negative
/// eigenvalues from roundoff are handled. Rows of the result are samples.
Matrix sample_mvn(const Vector& mean, const Matrix& cov, int n, Rng& rng);

}  // namespace blossom
