#include "blossom/acquisition.hpp"

#include "blossom/math.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace blossom {

namespace {

double improvement_form(double reference, double mu, double sd) {
  return normal_expected_excess(reference, sd, mu);  // (ref-mu)Phi(.) + sd phi(.)
}

double entropy(const std::vector<double>& p) {
  double h = 0.0;
  for (double v : p)
    if (v > 0.0) h -= v * std::log(v);
  return h;
}

}  // namespace

double expected_improvement(const AcquisitionContext& ctx, const Vector& x) {
  double mu, var;
  ctx.model->mean_var(x, &mu, &var);
  return improvement_form(ctx.incumbent_best, mu, std::sqrt(std::max(var, 0.0)));
}

double global_regret_reduction(const AcquisitionContext& ctx, const Vector& x) {
  if (!ctx.expected_inner_min.has_value())
    throw std::invalid_argument("global_regret_reduction: expected_inner_min missing");
  double mu, var;
  ctx.model->mean_var(x, &mu, &var);
  return improvement_form(*ctx.expected_inner_min, mu, std::sqrt(std::max(var, 0.0)));
}

std::shared_ptr<const PesCache> prepare_pes_cache(const GpModel& model,
                                                  std::vector<Vector> support, int n_paths,
                                                  int n_fantasies, std::uint64_t seed) {
  auto cache = std::make_shared<PesCache>();
  cache->support = std::move(support);
  cache->n_paths = n_paths;
  cache->n_fantasies = n_fantasies;
  cache->seed = seed;

  const int m = static_cast<int>(cache->support.size());
  model.standardized_joint(cache->support, &cache->support_mean, &cache->support_cov);
  cache->support_factor = cholesky_with_ladder(cache->support_cov, 1e-2, 1.0);
  cache->data_solves = model.cross_solves(cache->support);

  Rng rng(mix_seed(seed, 0x9e5));
  cache->paths.resize(n_paths, m);
  for (int i = 0; i < n_paths; ++i) {
    Vector z = rng.normal_vector(m);
    cache->paths.row(i) = (cache->support_mean + cache->support_factor.L * z).transpose();
  }
  cache->path_noise = rng.normal_vector(n_paths);

  std::vector<double> hist(m, 0.0);
  for (int i = 0; i < n_paths; ++i) {
    int arg = 0;
    double best = cache->paths(i, 0);
    for (int j = 1; j < m; ++j)
      if (cache->paths(i, j) < best) {
        best = cache->paths(i, j);
        arg = j;
      }
    hist[arg] += 1.0 / n_paths;
  }
  cache->base_entropy = entropy(hist);

  gauss_hermite(n_fantasies, &cache->gh_nodes, &cache->gh_weights);
  double wsum = 0.0;
  for (double w : cache->gh_weights) wsum += w;
  for (double& w : cache->gh_weights) w /= wsum;
  return cache;
}

double pes_discrete(const AcquisitionContext& ctx, const Vector& x, int n_paths, int n_fantasies,
                    std::uint64_t seed) {
  const PesCache* cache = ctx.pes_cache.get();
  if (cache == nullptr)
    throw std::logic_error("pes_discrete: no support-set cache prepared on the context");
  if (cache->n_paths != n_paths || cache->n_fantasies != n_fantasies || cache->seed != seed)
    throw std::logic_error("pes_discrete: cache parameters do not match the call");

  const int m = static_cast<int>(cache->support.size());
  if (m <= 1) return 0.0;

  // Standardized posterior at x and its covariance to the support values.
  double mu, var;
  Vector c;
  ctx.model->cross_posterior(x, cache->support, cache->data_solves, &mu, &var, &c);
  double prior_var =
      std::pow(ctx.model->kernel().output_scale / std::max(ctx.model->y_sd(), 1e-300), 2);
  if (var <= 1e-12 * std::max(prior_var, 1e-300)) return 0.0;  // nothing to learn at x

  // Conditional of f(x) given the path values at the support set.
  Vector w = cache->support_factor.solve(c);
  double cond_sd = std::sqrt(std::max(var - c.dot(w), 0.0));

  // Extend every path to x with common random numbers, then condition the
  // support values on each fantasy observation by the usual Gaussian update.
  Vector fx(cache->n_paths);
  for (int i = 0; i < cache->n_paths; ++i) {
    double mi = mu + w.dot(cache->paths.row(i).transpose() - cache->support_mean);
    fx[i] = mi + cond_sd * cache->path_noise[i];
  }

  double sd = std::sqrt(var);
  std::vector<double> hist(m);
  double expected_entropy = 0.0;
  for (int h = 0; h < n_fantasies; ++h) {
    double y = mu + std::numbers::sqrt2 * sd * cache->gh_nodes[h];
    std::fill(hist.begin(), hist.end(), 0.0);
    for (int i = 0; i < cache->n_paths; ++i) {
      double shift = (y - fx[i]) / var;
      int arg = 0;
      double best = std::numeric_limits<double>::infinity();
      for (int j = 0; j < m; ++j) {
        double v = cache->paths(i, j) + c[j] * shift;
        if (v < best) {
          best = v;
          arg = j;
        }
      }
      hist[arg] += 1.0 / cache->n_paths;
    }
    expected_entropy += cache->gh_weights[h] * entropy(hist);
  }
  return cache->base_entropy - expected_entropy;
}

Proposal maximize_acquisition(const AcquisitionFn& f, const AcquisitionContext& ctx,
                              const std::optional<ConvexRegion>& exclude, int budget,
                              std::uint64_t seed) {
  if (budget < 1) throw std::invalid_argument("maximize_acquisition: budget >= 1 required");
  const Domain& domain = ctx.domain;
  const bool excluding = exclude.has_value() && exclude->radius > 0.0;

  auto is_excluded = [&](const Vector& x) { return excluding && exclude->contains(x); };

  struct Candidate {
    Vector x;
    double value;
    int order;
  };
  double best_value = -std::numeric_limits<double>::infinity();
  std::vector<Candidate> tied;     // all candidates at the current best value
  std::vector<Candidate> leaders;  // top few distinct starts for the polish
  int order_counter = 0;

  auto consider = [&](const Vector& x, double value) {
    int order = order_counter++;
    if (value > best_value) {
      best_value = value;
      tied.clear();
    }
    if (value == best_value) tied.push_back({x, value, order});
    leaders.push_back({x, value, order});
    std::sort(leaders.begin(), leaders.end(), [](const Candidate& a, const Candidate& b) {
      if (a.value != b.value) return a.value > b.value;
      return a.order < b.order;
    });
    if (leaders.size() > 5) leaders.resize(5);
  };

  Rng rng(mix_seed(seed, 0xACC));
  auto scan = latin_hypercube(domain, budget, rng);
  int n_feasible = 0;
  for (const auto& x : scan) {
    if (is_excluded(x)) continue;
    ++n_feasible;
    consider(x, f(ctx, x));
  }
  if (n_feasible == 0)
    throw std::runtime_error("maximize_acquisition: no feasible proposal (region covers domain)");

  // Simplex polish from the best scan points. Inside the exclusion region the
  // value is replaced by a penalty that worsens towards the center, steering
  // the simplex back out.
  if (budget > 5) {
    auto penalized_negative = [&](const Vector& x) {
      if (is_excluded(x)) {
        double dist = (x - exclude->center).norm();
        return 1e12 * (1.0 + (exclude->radius - dist));
      }
      return -f(ctx, x);
    };
    std::vector<Candidate> starts = leaders;
    for (const auto& s : starts) {
      double polished_neg;
      Vector x =
          nelder_mead(penalized_negative, domain, s.x, 0.05, 120 * domain.dim(), &polished_neg);
      if (!is_excluded(x)) consider(x, f(ctx, x));
    }
  }

  // Equal acquisition values prefer the lower posterior mean, then the
  // earlier (seed-deterministic) candidate.
  const Candidate* winner = &tied.front();
  if (tied.size() > 1 && ctx.model != nullptr) {
    double winner_mean = ctx.model->posterior_mean(winner->x);
    for (std::size_t i = 1; i < tied.size(); ++i) {
      double mean = ctx.model->posterior_mean(tied[i].x);
      if (mean < winner_mean) {
        winner = &tied[i];
        winner_mean = mean;
      }
    }
  }

  Proposal proposal;
  proposal.excluded_region_applied = excluding;
  proposal.x = domain.clamp(winner->x);
  proposal.value = winner->value;
  return proposal;
}

}  // namespace blossom
