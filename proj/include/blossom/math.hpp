#pragma once

#include "blossom/types.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace blossom {

/// Deterministic, portable random stream (splitmix64 core). The standard
/// library distributions are implementation-defined, so all sampling used in
/// reproducible paths goes through this class.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64();

  /// Uniform on [0, 1).
  double uniform();

  /// Uniform on [a, b).
  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  /// Integer in [0, n).
  std::uint64_t uniform_index(std::uint64_t n);

  /// Standard normal draw (Box-Muller, cached spare).
  double normal();

  Vector normal_vector(int n);

 private:
  std::uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Stable combination of seed material for derived streams.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c);

/// Hash of the exact bit pattern of a point, for per-location seeding.
std::uint64_t hash_point(const Vector& x);

/// Standard normal pdf.
double normal_pdf(double z);
/// Standard normal cdf.
double normal_cdf(double z);

/// E[max(Z - a, 0)] for Z ~ N(mu, sd^2). The sd -> 0 limit is max(mu - a, 0).
double normal_expected_excess(double mu, double sd, double a);

/// Latin hypercube sample of n points in the box.
std::vector<Vector> latin_hypercube(const Domain& domain, int n, Rng& rng);

/// k-th point of the R2 additive quasi-random sequence mapped into the box.
Vector r2_point(const Domain& domain, std::uint64_t k);

/// Gauss-Hermite nodes and weights for integrals against exp(-t^2), computed
/// by the Golub-Welsch eigenvalue method.
void gauss_hermite(int n, std::vector<double>* nodes, std::vector<double>* weights);

/// Component-wise slice sampler with stepping out and shrinkage over a box.
/// log_density may return -inf outside its support. Returns n_samples states
/// of the chain taken every `thin` sweeps after `burn_in` sweeps.
std::vector<Vector> slice_sample(const std::function<double(const Vector&)>& log_density,
                                 const Domain& domain, Vector x0, int n_samples, int burn_in,
                                 int thin, Rng& rng);

/// Nelder-Mead simplex minimization clamped to a box. Returns the best vertex.
/// `max_evals` bounds the number of function evaluations.
Vector nelder_mead(const std::function<double(const Vector&)>& f, const Domain& domain,
                   const Vector& x0, double initial_step, int max_evals, double* best_value);

}  // namespace blossom
