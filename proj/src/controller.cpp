#include "blossom/controller.hpp"

#include "blossom/local_opt.hpp"
#include "blossom/math.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

namespace blossom {

const char* to_string(Phase phase) {
  switch (phase) {
    case Phase::RandomInit: return "random_init";
    case Phase::BayesAcq: return "bayes_acq";
    case Phase::GlobalRegretReduction: return "global_regret_reduction";
    case Phase::LocalExploit: return "local_exploit";
    case Phase::Terminated: return "terminated";
  }
  return "?";
}

const char* to_string(TerminationReason reason) {
  switch (reason) {
    case TerminationReason::RegretTargetMet: return "regret_target_met";
    case TerminationReason::MaxIterations: return "max_iterations";
    case TerminationReason::LocalConverged: return "local_converged";
    case TerminationReason::StoppingRuleMet: return "stopping_rule_met";
    case TerminationReason::Error: return "error";
  }
  return "?";
}

Vector posterior_minimum(const GpModel& model, const Domain& domain, int budget,
                         std::uint64_t seed) {
  auto mean = [&](const Vector& x) { return model.posterior_mean(x); };

  Rng rng(mix_seed(seed, 0xB0));
  auto scan = latin_hypercube(domain, std::max(budget, 1), rng);
  struct Candidate {
    Vector x;
    double value;
  };
  std::vector<Candidate> leaders;
  for (const auto& x : scan) {
    double v = mean(x);
    leaders.push_back({x, v});
    std::sort(leaders.begin(), leaders.end(),
              [](const Candidate& a, const Candidate& b) { return a.value < b.value; });
    if (leaders.size() > 5) leaders.resize(5);
  }

  Candidate best = leaders.front();
  for (const auto& s : leaders) {
    double v;
    Vector x = nelder_mead(mean, domain, s.x, 0.02, 150 * domain.dim(), &v);
    if (v < best.value) best = {x, v};
  }
  return best.x;
}

namespace {

struct CountingObjective {
  explicit CountingObjective(const std::function<double(const Vector&)>& fn) : f(fn) {}

  const std::function<double(const Vector&)>& f;
  long count = 0;
  Vector best_x;
  double best_y = std::numeric_limits<double>::infinity();
  bool saw_non_finite = false;

  double operator()(const Vector& x) {
    ++count;
    double y = f(x);
    if (!std::isfinite(y)) {
      saw_non_finite = true;
      return y;
    }
    if (y < best_y) {
      best_y = y;
      best_x = x;
    }
    return y;
  }
};

}  // namespace

RunResult run(const std::function<double(const Vector&)>& objective, const Domain& domain,
              const BlossomConfig& cfg, const IterationHook& hook) {
  const int d = domain.dim();
  const int n_init = cfg.n_init > 0 ? cfg.n_init : 2 * (d + 1);
  if (cfg.max_iterations < n_init)
    throw std::invalid_argument("run: max_iterations must be at least n_init");
  if (!(cfg.target_global_regret > 0.0))
    throw std::invalid_argument("run: target_global_regret must be positive");

  const auto t_start = std::chrono::steady_clock::now();
  auto elapsed = [&]() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  };

  CountingObjective eval(objective);
  RunResult result;
  PdTestConfig pd_cfg = PdTestConfig::from_epsilon(cfg.pd_epsilon);

  double mean_half_width = 0.0;
  for (int k = 0; k < d; ++k) mean_half_width += 0.5 * domain.width(k);
  mean_half_width /= d;
  const double h_r = cfg.h_r * mean_half_width;

  auto push_record = [&](Phase phase, const Vector& x, double y, double jitter,
                         std::optional<double> region_radius,
                         std::optional<double> regret_estimate) {
    StepRecord rec;
    rec.iteration = static_cast<int>(result.trace.size()) + 1;
    rec.phase = phase;
    rec.x = x;
    rec.y = y;
    rec.incumbent_x = eval.best_x;
    rec.incumbent_y = eval.best_y;
    rec.region_radius = region_radius;
    rec.regret_estimate = regret_estimate;
    rec.jitter = jitter;
    rec.wall_time_s = elapsed();
    result.trace.push_back(std::move(rec));
  };

  auto finish_with_incumbent = [&](TerminationReason reason, std::string diagnostic) {
    result.terminated_reason = reason;
    result.recommendation = eval.best_x;
    result.recommended_y = eval.best_y;
    result.total_evals = eval.count;
    result.diagnostic = std::move(diagnostic);
    return result;
  };

  // Random initialization.
  {
    Rng rng(mix_seed(cfg.seed, 0x111));
    auto init = latin_hypercube(domain, n_init, rng);
    for (const auto& x : init) {
      double y = eval(x);
      if (eval.saw_non_finite)
        return finish_with_incumbent(TerminationReason::Error,
                                     "objective returned a non-finite value during init");
      push_record(Phase::RandomInit, x, y, 0.0, std::nullopt, std::nullopt);
    }
  }

  std::vector<Observation> data;
  data.reserve(cfg.max_iterations);
  for (const auto& rec : result.trace) data.push_back({rec.x, rec.y});

  while (static_cast<int>(result.trace.size()) < cfg.max_iterations) {
    const int iter = static_cast<int>(result.trace.size()) + 1;
    const std::uint64_t iter_seed = mix_seed(cfg.seed, static_cast<std::uint64_t>(iter));

    // Refit the surrogate on everything observed so far.
    std::optional<GpModel> model;
    try {
      FitOptions fit_opts;
      fit_opts.n_restarts = cfg.fit_restarts;
      KernelSpec spec = fit_hyperparameters(data, domain, mix_seed(iter_seed, 0xF1), fit_opts);
      model.emplace(spec, data, domain);
    } catch (const std::exception& e) {
      return finish_with_incumbent(TerminationReason::Error,
                                   std::string("model fitting failed: ") + e.what());
    }

    Vector x_min =
        posterior_minimum(*model, domain, cfg.posterior_min_budget_per_dim * d,
                          mix_seed(iter_seed, 0xB0));

    std::optional<ConvexRegion> region;
    std::optional<RegretEstimate> regret;
    bool pd = pd_test_point(*model, x_min, domain, pd_cfg, mix_seed(iter_seed, 0xBD));
    if (pd) {
      region = pd_sphere_radius(*model, x_min, domain, cfg.n_u, h_r, pd_cfg,
                                mix_seed(iter_seed, 0xBE));
      if (region->radius > 0.0) {
        try {
          regret = estimate_global_regret(*model, *region, domain, cfg.n_draws, cfg.n_support,
                                          mix_seed(iter_seed, 0xBF));
        } catch (const std::exception& e) {
          return finish_with_incumbent(TerminationReason::Error,
                                       std::string("regret estimation failed: ") + e.what());
        }
      }
    }

    // Regret gate: hand over to the local exploitation phase.
    if (regret.has_value() && regret->value <= cfg.target_global_regret) {
      RescaledProblem problem = build_rescaling(*model, x_min, domain);
      double jitter = model->jitter();

      double y_start = eval(x_min);
      if (eval.saw_non_finite)
        return finish_with_incumbent(TerminationReason::Error,
                                     "objective returned a non-finite value");
      push_record(Phase::LocalExploit, x_min, y_start, jitter, region->radius, regret->value);

      LocalResult local = bfgs_minimize(
          [&](const Vector& x) { return eval(x); }, problem, x_min, cfg.grad_tol,
          cfg.local_max_evals,
          [&](const Vector& x, double y, double /*grad*/, int /*evals*/) {
            push_record(Phase::LocalExploit, x, y, jitter, std::nullopt, std::nullopt);
          });

      result.terminated_reason = local.converged ? TerminationReason::LocalConverged
                                                 : TerminationReason::RegretTargetMet;
      if (std::isfinite(local.y_final)) {
        result.recommendation = local.x_final;
        result.recommended_y = local.y_final;
      } else {
        result.recommendation = eval.best_x;
        result.recommended_y = eval.best_y;
      }
      result.total_evals = eval.count;
      result.diagnostic = local.diagnostic;
      return result;
    }

    // Otherwise propose the next evaluation.
    AcquisitionContext ctx;
    ctx.model = &*model;
    ctx.domain = domain;
    ctx.incumbent_best = eval.best_y;
    ctx.region = region;
    if (regret.has_value()) {
      ctx.expected_inner_min = regret->mu_i;
      ctx.inner_sd = regret->sigma_i;
    }

    Phase phase;
    Proposal proposal;
    try {
      if (regret.has_value()) {
        phase = Phase::GlobalRegretReduction;
        proposal = maximize_acquisition(global_regret_reduction, ctx, region,
                                        cfg.acq_budget_per_dim * d, mix_seed(iter_seed, 0xA1));
      } else if (cfg.bayes_acquisition == BayesAcquisition::EI) {
        phase = Phase::BayesAcq;
        proposal = maximize_acquisition(expected_improvement, ctx, std::nullopt,
                                        cfg.acq_budget_per_dim * d, mix_seed(iter_seed, 0xA2));
      } else {
        phase = Phase::BayesAcq;
        ConvexRegion no_region;
        no_region.center = domain.center();
        SupportSet support = build_support(*model, region.value_or(no_region), domain,
                                           cfg.n_support, mix_seed(iter_seed, 0xE5));
        ctx.pes_cache = prepare_pes_cache(*model, support.points, cfg.pes_paths,
                                          cfg.pes_fantasies, mix_seed(iter_seed, 0xE6));
        auto pes = [&](const AcquisitionContext& c, const Vector& x) {
          return pes_discrete(c, x, cfg.pes_paths, cfg.pes_fantasies, mix_seed(iter_seed, 0xE6));
        };
        proposal = maximize_acquisition(pes, ctx, std::nullopt, cfg.pes_budget_per_dim * d,
                                        mix_seed(iter_seed, 0xA3));
      }
    } catch (const std::exception& e) {
      // A degenerate exclusion region can leave no feasible candidate; fall
      // back to the plain Bayesian acquisition for this iteration.
      try {
        phase = Phase::BayesAcq;
        proposal = maximize_acquisition(expected_improvement, ctx, std::nullopt,
                                        cfg.acq_budget_per_dim * d, mix_seed(iter_seed, 0xA4));
      } catch (const std::exception& e2) {
        return finish_with_incumbent(TerminationReason::Error,
                                     std::string("acquisition failed: ") + e2.what());
      }
    }

    if (hook) {
      IterationInfo info;
      info.iteration = iter;
      info.phase = phase;
      info.model = &*model;
      info.proposal = proposal.x;
      info.acquisition_value = proposal.value;
      info.region = region;
      info.regret = regret;
      double mu, var;
      model->mean_var(proposal.x, &mu, &var);
      double sd = std::sqrt(std::max(var, 0.0));
      info.probability_of_improvement =
          sd > 0.0 ? normal_cdf((eval.best_y - mu) / sd) : (mu < eval.best_y ? 1.0 : 0.0);
      if (!hook(info))
        return finish_with_incumbent(TerminationReason::StoppingRuleMet, "stopped by hook");
    }

    double y = eval(proposal.x);
    if (eval.saw_non_finite)
      return finish_with_incumbent(TerminationReason::Error,
                                   "objective returned a non-finite value");
    push_record(phase, proposal.x, y, model->jitter(),
                region.has_value() ? std::optional<double>(region->radius) : std::nullopt,
                regret.has_value() ? std::optional<double>(regret->value) : std::nullopt);
    data.push_back({proposal.x, y});
  }

  return finish_with_incumbent(TerminationReason::MaxIterations, "");
}

}  // namespace blossom
