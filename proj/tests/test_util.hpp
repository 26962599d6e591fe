#pragma once

#include "blossom/gp.hpp"
#include "blossom/controller.hpp"
#include "blossom/regret.hpp"
#include "blossom/kernel.hpp"
#include "blossom/linalg.hpp"
#include "blossom/math.hpp"

#include <cmath>
#include <functional>
#include <vector>

namespace blossom::testing {

// Central-difference oracle for mixed kernel derivatives. Total orders up to
// two are differenced directly on k. Higher orders difference the analytic
// derivative with one order removed, so each order is validated against the
// one below it and the chain bottoms out at plain function evaluations.
inline double fd_kernel_derivative(const KernelSpec& spec, const Vector& a, const Vector& b,
                                   const MultiIndex& ia, const MultiIndex& ib, double step) {
  const int order_a = multi_index_order(ia);
  const int order_b = multi_index_order(ib);
  const int total = order_a + order_b;

  if (total == 0) return kernel_value(spec, a, b);

  if (total <= 2) {
    // Difference k itself; peel one order from a first, then from b.
    if (order_a > 0) {
      int k = 0;
      while (ia[k] == 0) ++k;
      MultiIndex ia_low = ia;
      ia_low[k] -= 1;
      Vector ap = a, am = a;
      ap[k] += step;
      am[k] -= step;
      return (fd_kernel_derivative(spec, ap, b, ia_low, ib, step) -
              fd_kernel_derivative(spec, am, b, ia_low, ib, step)) /
             (2.0 * step);
    }
    int k = 0;
    while (ib[k] == 0) ++k;
    MultiIndex ib_low = ib;
    ib_low[k] -= 1;
    Vector bp = b, bm = b;
    bp[k] += step;
    bm[k] -= step;
    return (fd_kernel_derivative(spec, a, bp, ia, ib_low, step) -
            fd_kernel_derivative(spec, a, bm, ia, ib_low, step)) /
           (2.0 * step);
  }

  // Ladder step: difference the analytic derivative one order lower.
  if (order_a > 0) {
    int k = 0;
    while (ia[k] == 0) ++k;
    MultiIndex ia_low = ia;
    ia_low[k] -= 1;
    Vector ap = a, am = a;
    ap[k] += step;
    am[k] -= step;
    return (kernel_derivative(spec, ap, b, ia_low, ib) -
            kernel_derivative(spec, am, b, ia_low, ib)) /
           (2.0 * step);
  }
  int k = 0;
  while (ib[k] == 0) ++k;
  MultiIndex ib_low = ib;
  ib_low[k] -= 1;
  Vector bp = b, bm = b;
  bp[k] += step;
  bm[k] -= step;
  return (kernel_derivative(spec, a, bp, ia, ib_low) -
          kernel_derivative(spec, a, bm, ia, ib_low)) /
         (2.0 * step);
}

// All multi-indices of total order <= 2 in d dimensions.
inline std::vector<MultiIndex> multi_indices_to_order2(int d) {
  std::vector<MultiIndex> out;
  out.push_back(MultiIndex::Zero(d));
  for (int i = 0; i < d; ++i) {
    MultiIndex m = MultiIndex::Zero(d);
    m[i] = 1;
    out.push_back(m);
  }
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j) {
      MultiIndex m = MultiIndex::Zero(d);
      m[i] += 1;
      m[j] += 1;
      out.push_back(m);
    }
  return out;
}

// Noiseless draw from a GP prior at fixed points, for fit-recovery tests.
inline std::vector<Observation> sample_gp_dataset(const KernelSpec& spec,
                                                  const std::vector<Vector>& points,
                                                  std::uint64_t seed) {
  const int n = static_cast<int>(points.size());
  Matrix K(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) K(i, j) = kernel_value(spec, points[i], points[j]);
  JitteredCholesky f = cholesky_with_ladder(K, 1e-2, spec.output_scale * spec.output_scale);
  Rng rng(seed);
  Vector z = rng.normal_vector(n);
  Vector y = f.L * z;
  std::vector<Observation> data(n);
  for (int i = 0; i < n; ++i) data[i] = {points[i], y[i]};
  return data;
}

// Evenly spaced 1D observations of f over [lo, hi].
inline std::vector<Observation> grid_1d(const std::function<double(double)>& f, double lo,
                                        double hi, int n) {
  std::vector<Observation> data;
  for (int i = 0; i < n; ++i) {
    double x = lo + (hi - lo) * i / (n - 1);
    Vector v(1);
    v[0] = x;
    data.push_back({v, f(x)});
  }
  return data;
}

// Delta-method standard error for the closed-form regret estimate: the
// summation noise over outer samples plus the sampling noise of the fitted
// inner-minimum mean and sd (mu: sd^2/N, sd: sd^2/(2N)).
inline double regret_estimator_se(const RegretEstimate& est) {
  const int n_outer = static_cast<int>(est.outer_samples.size());
  if (n_outer == 0) return 0.0;
  double ss = 0.0, phi_bar = 0.0, cdf_bar = 0.0;
  for (double y_o : est.outer_samples) {
    double s = normal_expected_excess(est.mu_i, est.sigma_i, y_o);
    ss += (s - est.value) * (s - est.value);
    double z = (est.mu_i - y_o) / est.sigma_i;
    phi_bar += normal_pdf(z);
    cdf_bar += normal_cdf(z);
  }
  phi_bar /= n_outer;
  cdf_bar /= n_outer;
  double se_sum2 = ss / n_outer / n_outer;
  double var_mu = est.sigma_i * est.sigma_i / est.n_draws;
  double var_sd = est.sigma_i * est.sigma_i / (2.0 * est.n_draws);
  return std::sqrt(se_sum2 + cdf_bar * cdf_bar * var_mu + phi_bar * phi_bar * var_sd);
}

// Double Monte-Carlo reference for the global regret: y_i from inner minima
// and y_o from outer minima of two independent draw sets, averaged through
// max(y_i - y_o, 0). Returns the estimate and its standard error.
inline std::pair<double, double> brute_force_regret(const GpModel& model,
                                                    const SupportSet& support, int n,
                                                    std::uint64_t seed) {
  Matrix draws_i = model.draw_posterior(support.points, n, mix_seed(seed, 0xAA));
  Matrix draws_o = model.draw_posterior(support.points, n, mix_seed(seed, 0xBB));
  const int m = static_cast<int>(support.points.size());
  double acc = 0.0, acc2 = 0.0;
  for (int r = 0; r < n; ++r) {
    double y_i = std::numeric_limits<double>::infinity();
    double y_o = std::numeric_limits<double>::infinity();
    for (int c = 0; c < m; ++c) {
      if (support.inner_mask[c])
        y_i = std::min(y_i, draws_i(r, c));
      else
        y_o = std::min(y_o, draws_o(r, c));
    }
    double v = std::max(y_i - y_o, 0.0);
    acc += v;
    acc2 += v * v;
  }
  double mean = acc / n;
  double var = std::max(0.0, acc2 / n - mean * mean);
  return {mean, std::sqrt(var / n)};
}

// Trace and hook invariants of the switching controller, shared between the
// unit tests and the acceptance suite. Returns a failure description or "".
inline std::string check_run_invariants(const RunResult& result,
                                        const std::vector<IterationInfo>& hook_log,
                                        double target_regret) {
  using P = Phase;
  auto allowed = [](P from, P to) {
    switch (from) {
      case P::RandomInit:
        return to == P::RandomInit || to == P::BayesAcq || to == P::GlobalRegretReduction ||
               to == P::LocalExploit;
      case P::BayesAcq:
        return to == P::BayesAcq || to == P::GlobalRegretReduction || to == P::LocalExploit;
      case P::GlobalRegretReduction:
        return to == P::GlobalRegretReduction || to == P::BayesAcq || to == P::LocalExploit;
      case P::LocalExploit:
        return to == P::LocalExploit;
      default:
        return false;
    }
  };

  const auto& trace = result.trace;
  if (trace.empty()) return "empty trace";
  if (trace.front().phase != P::RandomInit) return "trace must start with initialization";
  for (std::size_t i = 1; i < trace.size(); ++i)
    if (!allowed(trace[i - 1].phase, trace[i].phase)) return "illegal phase transition";

  // Local exploitation is a suffix entered at most once, gated by the regret
  // estimate recorded on its first step.
  for (std::size_t i = 0; i < trace.size(); ++i) {
    if (trace[i].phase != P::LocalExploit) continue;
    if (!trace[i].regret_estimate.has_value()) return "local phase without a gating estimate";
    if (*trace[i].regret_estimate > target_regret) return "regret gate violated";
    for (std::size_t j = i; j < trace.size(); ++j)
      if (trace[j].phase != P::LocalExploit) return "local phase is not a suffix";
    break;
  }

  double incumbent = std::numeric_limits<double>::infinity();
  for (const auto& rec : trace) {
    if (rec.incumbent_y > incumbent + 1e-15) return "incumbent increased";
    incumbent = rec.incumbent_y;
    if (rec.incumbent_y > rec.y + 1e-15 && rec.y == rec.y) return "incumbent above observed value";
  }

  for (const auto& info : hook_log) {
    if (info.phase == P::GlobalRegretReduction) {
      if (!info.region.has_value()) return "regret phase without a region";
      double dist = (info.proposal - info.region->center).norm();
      if (dist <= info.region->radius) return "regret proposal inside the excluded region";
    }
    if (info.probability_of_improvement < 0.0 || info.probability_of_improvement > 1.0)
      return "probability of improvement out of range";
  }
  return "";
}

inline Vector vec(std::initializer_list<double> values) {
  Vector v(static_cast<int>(values.size()));
  int i = 0;
  for (double x : values) v[i++] = x;
  return v;
}

inline MultiIndex midx(std::initializer_list<int> values) {
  MultiIndex m(static_cast<int>(values.size()));
  int i = 0;
  for (int x : values) m[i++] = x;
  return m;
}

}  // namespace blossom::testing
