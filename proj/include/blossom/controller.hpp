#pragma once

#include "blossom/acquisition.hpp"
#include "blossom/convexity.hpp"
#include "blossom/gp.hpp"
#include "blossom/regret.hpp"
#include "blossom/types.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace blossom {

enum class Phase { RandomInit, BayesAcq, GlobalRegretReduction, LocalExploit, Terminated };

enum class TerminationReason {
  RegretTargetMet,   // regret gate passed but the local search did not reach grad_tol
  MaxIterations,
  LocalConverged,
  StoppingRuleMet,   // an external hook requested the stop
  Error,
};

enum class BayesAcquisition { PesDiscrete, EI };

const char* to_string(Phase phase);
const char* to_string(TerminationReason reason);

struct BlossomConfig {
  double target_global_regret = 1e-2;
  int n_init = 0;  // 0 resolves to 2 * (d + 1)
  double pd_epsilon = 0.01;
  int n_u = 20;
  double h_r = 1e-3;  // binary-search resolution in normalized units
  int n_draws = 400;
  int n_support = 100;
  BayesAcquisition bayes_acquisition = BayesAcquisition::PesDiscrete;
  int max_iterations = 200;
  double grad_tol = 1e-6;
  std::uint64_t seed = 0;

  // Inner-loop budgets; defaults sized for desk-scale runs.
  int acq_budget_per_dim = 2000;       // coarse evaluations for EI / regret acquisitions
  int pes_budget_per_dim = 600;        // coarse evaluations for the sampled-minimizer acquisition
  int pes_paths = 200;
  int pes_fantasies = 7;
  int posterior_min_budget_per_dim = 1500;
  int local_max_evals = 2000;
  int fit_restarts = 4;
};

struct StepRecord {
  int iteration = 0;  // 1-based position in the trace
  Phase phase = Phase::RandomInit;
  Vector x;
  double y = 0.0;
  Vector incumbent_x;
  double incumbent_y = 0.0;
  std::optional<double> region_radius;
  std::optional<double> regret_estimate;
  double jitter = 0.0;
  double wall_time_s = 0.0;  // seconds since the start of the run
};

/// Per-iteration context passed to the hook before the objective evaluation
/// is committed. Returning false stops the run (StoppingRuleMet).
struct IterationInfo {
  int iteration = 0;
  Phase phase = Phase::RandomInit;
  const GpModel* model = nullptr;
  Vector proposal;
  double acquisition_value = 0.0;
  double probability_of_improvement = 1.0;  // at the proposal, against the incumbent
  std::optional<ConvexRegion> region;
  std::optional<RegretEstimate> regret;
};
using IterationHook = std::function<bool(const IterationInfo&)>;

struct RunResult {
  Vector recommendation;
  double recommended_y = 0.0;
  std::vector<StepRecord> trace;
  TerminationReason terminated_reason = TerminationReason::Error;
  long total_evals = 0;  // every objective call, finite differences included
  std::string diagnostic;
};

/// The full switching optimizer: Latin-hypercube initialization, a Bayesian
/// acquisition while no convex region is identified, the regret-reduction
/// acquisition (with the region excluded) while the estimated global regret
/// exceeds the target, and a final Hessian-rescaled BFGS exploitation phase.
RunResult run(const std::function<double(const Vector&)>& objective, const Domain& domain,
              const BlossomConfig& cfg, const IterationHook& hook = nullptr);

/// Minimizer of the posterior mean: coarse scan plus simplex polish.
/// Deterministic for a fixed seed.
Vector posterior_minimum(const GpModel& model, const Domain& domain, int budget,
                         std::uint64_t seed);

}  // namespace blossom
