#pragma once

#include "blossom/controller.hpp"
#include "blossom/objectives.hpp"
#include "blossom/types.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace blossom {

enum class Algorithm { Blossom, EiWithPiStop, BayesAcqValueStop };

const char* to_string(Algorithm a);
Algorithm algorithm_from_string(const std::string& s);

/// One experiment: an objective, an algorithm with its stopping parameter,
/// and a set of seeds. Each seed produces a trace CSV and a metadata record
/// in output_dir.
struct ExperimentConfig {
  std::string objective = "branin";  // benchmark name or "gp-draw"
  int dimension = 0;                 // gp-draw dimension (benchmarks fix their own)
  Algorithm algorithm = Algorithm::Blossom;
  double stop_param = 1e-2;          // regret target or stopping threshold
  std::vector<std::uint64_t> seeds = {0};
  int max_iterations = 200;
  std::string output_dir = "runs";
  bool log_transform_objective = true;  // benchmarks only
  double gp_draw_lengthscale = 0.25;    // relative to the unit box
  int jobs = 1;
  BlossomConfig blossom;  // base settings; seed and budget fields set per run

  void validate() const;
};

/// Per-run metadata alongside the RunResult (also serialized to JSON).
struct RunMeta {
  std::uint64_t seed = 0;
  int steps = 0;
  double regret = 0.0;
  double recommended_y = 0.0;
  long total_evals = 0;
  TerminationReason reason = TerminationReason::Error;
  double stop_metric_final = std::numeric_limits<double>::quiet_NaN();
  double wall_time_s = 0.0;
};

struct SummaryRow {
  std::string objective;
  std::string algorithm_param;
  double mean_regret = 0.0;
  double mean_steps = 0.0;
  double mean_step_regret_product = 0.0;  // mean over runs of steps * regret
  int n_runs = 0;
};

/// Runs one optimization per seed (optionally in parallel worker threads),
/// writing a trace CSV and a metadata JSON for each. Individual failures are
/// recorded with the Error reason and the experiment continues.
std::vector<RunResult> run_experiment(const ExperimentConfig& cfg,
                                      std::vector<RunMeta>* metas = nullptr);

/// Reads every run record under results_dir and emits the summary CSV plus a
/// survival table (fraction of runs still active after n steps) next to it.
/// Throws when the directory contains no completed runs.
std::vector<SummaryRow> summarize(const std::string& results_dir,
                                  const std::string& out_file = "");

/// Trace round-trip helpers. Values are printed with 17 significant digits so
/// parsing reproduces the in-memory trace exactly.
void write_trace_csv(const std::string& path, const std::vector<StepRecord>& trace,
                     int dimension);
std::vector<StepRecord> read_trace_csv(const std::string& path, int* dimension = nullptr);

/// Plain Bayesian-optimization loop used by the baseline stopping rules: EI
/// with the probability-of-improvement stop, or the default Bayes acquisition
/// stopped on its own maximized value. The stopping metric is checked before
/// evaluating the proposal and never inspects the true objective minimum.
RunResult baseline_run(const std::function<double(const Vector&)>& objective,
                       const Domain& domain, const BlossomConfig& cfg, Algorithm algorithm,
                       double stop_param, double* stop_metric_final = nullptr);

}  // namespace blossom
