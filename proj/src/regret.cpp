#include "blossom/regret.hpp"

#include "blossom/math.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace blossom {

int SupportSet::inner_count() const {
  int c = 0;
  for (bool b : inner_mask) c += b ? 1 : 0;
  return c;
}

int SupportSet::outer_count() const { return static_cast<int>(points.size()) - inner_count(); }

SupportSet build_support(const GpModel& model, const ConvexRegion& region, const Domain& domain,
                         int n_support, std::uint64_t seed) {
  if (n_support < 4 || n_support % 2 != 0)
    throw std::invalid_argument("build_support: n_support must be even and >= 4");
  const int half = n_support / 2;

  SupportSet support;
  support.points.reserve(n_support);
  support.origin.reserve(n_support);

  // Minimizer-location half: slice sampling over exp(-LCB), LCB = mu - 2 sd.
  {
    Rng rng(mix_seed(seed, 0x51));
    auto log_density = [&](const Vector& x) {
      double mu, var;
      model.mean_var(x, &mu, &var);
      return -(mu - 2.0 * std::sqrt(std::max(var, 0.0)));
    };
    // Start the chain at the best of a small scan.
    Vector x0 = domain.center();
    double best = log_density(x0);
    for (int i = 0; i < 32; ++i) {
      Vector c = r2_point(domain, static_cast<std::uint64_t>(i));
      double v = log_density(c);
      if (v > best) {
        best = v;
        x0 = c;
      }
    }
    auto samples = slice_sample(log_density, domain, x0, half, /*burn_in=*/20, /*thin=*/2, rng);
    for (auto& s : samples) {
      support.points.push_back(std::move(s));
      support.origin.push_back(SupportOrigin::MinimizerSampled);
    }
  }

  // Variance half: rejection sampling against the prior variance bound.
  {
    Rng rng(mix_seed(seed, 0x52));
    const double bound =
        model.kernel().output_scale * model.kernel().output_scale + 1e-300;
    int accepted = 0;
    long proposals = 0;
    const long max_proposals = 100000;
    while (accepted < half && proposals < max_proposals) {
      ++proposals;
      Vector x(domain.dim());
      for (int k = 0; k < domain.dim(); ++k)
        x[k] = rng.uniform(domain.lower[k], domain.upper[k]);
      double mu, var;
      model.mean_var(x, &mu, &var);
      if (rng.uniform() * bound <= var) {
        support.points.push_back(std::move(x));
        support.origin.push_back(SupportOrigin::VarianceSampled);
        ++accepted;
      }
    }
    while (accepted < half) {  // posterior variance nearly zero everywhere
      Vector x(domain.dim());
      for (int k = 0; k < domain.dim(); ++k)
        x[k] = rng.uniform(domain.lower[k], domain.upper[k]);
      support.points.push_back(std::move(x));
      support.origin.push_back(SupportOrigin::VarianceSampled);
      ++accepted;
      support.diagnostic = "variance rejection sampler fell back to uniform";
    }
  }

  support.inner_mask.resize(n_support);
  for (int i = 0; i < n_support; ++i)
    support.inner_mask[i] = region.contains(support.points[i]);

  if (region.radius > 0.0) {
    if (support.inner_count() == 0) {
      // Swap the minimizer-sampled point nearest the center for the center
      // itself so the inner minimum is defined.
      int best = -1;
      double best_dist = std::numeric_limits<double>::infinity();
      for (int i = 0; i < n_support; ++i) {
        if (support.origin[i] != SupportOrigin::MinimizerSampled) continue;
        double dist = (support.points[i] - region.center).norm();
        if (dist < best_dist) {
          best_dist = dist;
          best = i;
        }
      }
      support.points[best] = region.center;
      support.inner_mask[best] = true;
    }
    if (support.outer_count() == 0) {
      int best = -1;
      double best_dist = -1.0;
      for (int i = 0; i < n_support; ++i) {
        if (support.origin[i] != SupportOrigin::VarianceSampled) continue;
        double dist = (support.points[i] - region.center).norm();
        if (dist > best_dist) {
          best_dist = dist;
          best = i;
        }
      }
      support.points[best] = domain.farthest_corner(region.center);
      support.inner_mask[best] = region.contains(support.points[best]);
    }
  }
  return support;
}

void inner_stats(const SupportSet& support, const Matrix& draws, double* mu_i, double* sigma_i) {
  const int n_points = static_cast<int>(support.points.size());
  if (draws.cols() != n_points)
    throw std::invalid_argument("inner_stats: draws must cover all support points");
  if (support.inner_count() == 0)
    throw std::invalid_argument("inner_stats: undefined inner minimum (no inner points)");

  const int n = static_cast<int>(draws.rows());
  double mean = 0.0, ss = 0.0;
  for (int r = 0; r < n; ++r) {
    double y_i = std::numeric_limits<double>::infinity();
    for (int c = 0; c < n_points; ++c)
      if (support.inner_mask[c]) y_i = std::min(y_i, draws(r, c));
    mean += y_i;
    ss += y_i * y_i;
  }
  mean /= n;
  double var = std::max(0.0, ss / n - mean * mean);  // 1/N convention
  *mu_i = mean;
  *sigma_i = std::max(std::sqrt(var), 1e-12);
}

double global_regret_sum(double mu_i, double sigma_i, const std::vector<double>& outer_samples) {
  if (outer_samples.empty()) return 0.0;
  double acc = 0.0;
  for (double y_o : outer_samples) acc += normal_expected_excess(mu_i, sigma_i, y_o);
  return acc / static_cast<double>(outer_samples.size());
}

RegretEstimate estimate_global_regret(const GpModel& model, const ConvexRegion& region,
                                      const Domain& domain, int n_draws, int n_support,
                                      std::uint64_t seed) {
  if (n_draws < 100) throw std::invalid_argument("estimate_global_regret: n_draws >= 100");
  SupportSet support = build_support(model, region, domain, n_support, mix_seed(seed, 1));
  Matrix draws = model.draw_posterior(support.points, n_draws, mix_seed(seed, 2));

  RegretEstimate est;
  est.n_draws = n_draws;
  inner_stats(support, draws, &est.mu_i, &est.sigma_i);

  const int n_points = static_cast<int>(support.points.size());
  est.outer_samples.reserve(n_draws);
  for (int r = 0; r < n_draws; ++r) {
    double y_o = std::numeric_limits<double>::infinity();
    for (int c = 0; c < n_points; ++c)
      if (!support.inner_mask[c]) y_o = std::min(y_o, draws(r, c));
    if (std::isfinite(y_o)) est.outer_samples.push_back(y_o);
  }
  est.value = global_regret_sum(est.mu_i, est.sigma_i, est.outer_samples);
  return est;
}

}  // namespace blossom
