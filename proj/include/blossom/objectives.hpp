#pragma once

#include "blossom/kernel.hpp"
#include "blossom/types.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace blossom {

/// A deterministic benchmark objective on its standard domain. The known
/// minimum is established numerically at construction (dense scan plus
/// multistart refinement), not transcribed from tables.
struct Benchmark {
  std::string name;
  int dimension = 0;
  Domain domain;
  std::function<double(const Vector&)> evaluate;
  std::optional<double> known_minimum;
  std::optional<std::vector<Vector>> known_minimizers;
};

/// Supported names: branin, camel3, camel6, hartmann3, hartmann4, hartmann6.
Benchmark make_benchmark(const std::string& name);
std::vector<std::string> benchmark_names();

/// Wraps the objective as y' = log(y - y* + 1). The transformed minimum is 0
/// and minimizer locations are unchanged. Requires known_minimum.
Benchmark log_transform(const Benchmark& b);

/// A lazily realized sample path from a GP prior: each new query point is
/// sampled conditional on every previously queried (point, value) pair and
/// cached, so the function is deterministic once queried. Repeated queries at
/// a point return the cached value exactly. Requires exclusive access.
class GpDrawObjective {
 public:
  GpDrawObjective(KernelSpec kernel, Domain domain, std::uint64_t seed);

  double operator()(const Vector& x);

  const std::vector<Vector>& cached_points() const { return points_; }
  const std::vector<double>& cached_values() const { return values_; }
  const Domain& domain() const { return domain_; }
  const KernelSpec& kernel() const { return kernel_; }

 private:
  double conditional_draw(const Vector& x);

  KernelSpec kernel_;
  Domain domain_;
  std::uint64_t seed_;
  std::vector<Vector> points_;
  std::vector<double> values_;
  Matrix factor_;        // growing lower Cholesky factor of the cache kernel matrix
  Vector whitened_;      // factor^-1 * values
  std::unordered_map<std::uint64_t, std::vector<int>> exact_lookup_;
};

}  // namespace blossom
