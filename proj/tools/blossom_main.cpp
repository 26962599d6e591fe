#include "blossom/harness.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

namespace {

using blossom::ExperimentConfig;
using nlohmann::json;

std::vector<std::uint64_t> parse_seed_list(const std::string& csv) {
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ','))
    if (!tok.empty()) seeds.push_back(std::stoull(tok));
  return seeds;
}

// Flat key-value config file mirroring the CLI flags plus every tunable of
// the optimizer itself. CLI flags override file values.
void apply_config_file(const std::string& path, ExperimentConfig* cfg) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file: " + path);
  json j = json::parse(in);

  if (j.contains("objective")) cfg->objective = j["objective"].get<std::string>();
  if (j.contains("algorithm"))
    cfg->algorithm = blossom::algorithm_from_string(j["algorithm"].get<std::string>());
  if (j.contains("stop")) cfg->stop_param = j["stop"].get<double>();
  if (j.contains("seeds")) cfg->seeds = j["seeds"].get<std::vector<std::uint64_t>>();
  if (j.contains("max_iter")) cfg->max_iterations = j["max_iter"].get<int>();
  if (j.contains("out")) cfg->output_dir = j["out"].get<std::string>();
  if (j.contains("dim")) cfg->dimension = j["dim"].get<int>();
  if (j.contains("jobs")) cfg->jobs = j["jobs"].get<int>();
  if (j.contains("log_transform")) cfg->log_transform_objective = j["log_transform"].get<bool>();
  if (j.contains("gp_draw_lengthscale"))
    cfg->gp_draw_lengthscale = j["gp_draw_lengthscale"].get<double>();

  auto& b = cfg->blossom;
  if (j.contains("target_global_regret"))
    b.target_global_regret = j["target_global_regret"].get<double>();
  if (j.contains("n_init")) b.n_init = j["n_init"].get<int>();
  if (j.contains("pd_epsilon")) b.pd_epsilon = j["pd_epsilon"].get<double>();
  if (j.contains("n_u")) b.n_u = j["n_u"].get<int>();
  if (j.contains("h_r")) b.h_r = j["h_r"].get<double>();
  if (j.contains("n_draws")) b.n_draws = j["n_draws"].get<int>();
  if (j.contains("n_support")) b.n_support = j["n_support"].get<int>();
  if (j.contains("bayes_acquisition")) {
    std::string a = j["bayes_acquisition"].get<std::string>();
    if (a == "pes")
      b.bayes_acquisition = blossom::BayesAcquisition::PesDiscrete;
    else if (a == "ei")
      b.bayes_acquisition = blossom::BayesAcquisition::EI;
    else
      throw std::invalid_argument("bayes_acquisition must be 'pes' or 'ei'");
  }
  if (j.contains("grad_tol")) b.grad_tol = j["grad_tol"].get<double>();
  if (j.contains("acq_budget_per_dim")) b.acq_budget_per_dim = j["acq_budget_per_dim"].get<int>();
  if (j.contains("pes_budget_per_dim")) b.pes_budget_per_dim = j["pes_budget_per_dim"].get<int>();
  if (j.contains("pes_paths")) b.pes_paths = j["pes_paths"].get<int>();
  if (j.contains("pes_fantasies")) b.pes_fantasies = j["pes_fantasies"].get<int>();
  if (j.contains("posterior_min_budget_per_dim"))
    b.posterior_min_budget_per_dim = j["posterior_min_budget_per_dim"].get<int>();
  if (j.contains("local_max_evals")) b.local_max_evals = j["local_max_evals"].get<int>();
  if (j.contains("fit_restarts")) b.fit_restarts = j["fit_restarts"].get<int>();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Global optimization with switched acquisitions and regret-based stopping"};
  app.require_subcommand(1);

  auto* run_cmd = app.add_subcommand("run", "execute seeded optimization runs");
  std::string objective = "branin";
  std::string algorithm = "blossom";
  double stop = 1e-2;
  std::string seeds_csv = "0";
  int max_iter = 200;
  std::string out_dir = "runs";
  int dim = 0;
  int jobs = 1;
  std::string config_path;
  bool no_log_transform = false;
  run_cmd->add_option("--objective", objective, "benchmark name or gp-draw");
  run_cmd->add_option("--algorithm", algorithm, "blossom | ei-pi | bayes-aqstop");
  run_cmd->add_option("--stop", stop, "regret target (blossom) or stopping threshold");
  run_cmd->add_option("--seeds", seeds_csv, "comma-separated seed list");
  run_cmd->add_option("--max-iter", max_iter, "iteration cap per run");
  run_cmd->add_option("--out", out_dir, "output directory for traces and run records");
  run_cmd->add_option("--dim", dim, "dimension for gp-draw objectives");
  run_cmd->add_option("--jobs", jobs, "parallel worker threads over seeds");
  run_cmd->add_option("--config", config_path, "JSON config file (CLI flags override)");
  run_cmd->add_flag("--no-log-transform", no_log_transform,
                    "evaluate benchmarks without the log transform");

  auto* sum_cmd = app.add_subcommand("summarize", "aggregate run records into summary tables");
  std::string in_dir;
  std::string out_file = "summary.csv";
  sum_cmd->add_option("--in", in_dir, "directory of run records")->required();
  sum_cmd->add_option("--out", out_file, "summary CSV path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (run_cmd->parsed()) {
      ExperimentConfig cfg;
      if (!config_path.empty()) apply_config_file(config_path, &cfg);
      if (run_cmd->count("--objective") || config_path.empty()) cfg.objective = objective;
      if (run_cmd->count("--algorithm") || config_path.empty())
        cfg.algorithm = blossom::algorithm_from_string(algorithm);
      if (run_cmd->count("--stop")) cfg.stop_param = stop;
      if (run_cmd->count("--seeds")) cfg.seeds = parse_seed_list(seeds_csv);
      if (run_cmd->count("--max-iter")) cfg.max_iterations = max_iter;
      if (run_cmd->count("--out")) cfg.output_dir = out_dir;
      if (run_cmd->count("--dim")) cfg.dimension = dim;
      if (run_cmd->count("--jobs")) cfg.jobs = jobs;
      if (no_log_transform) cfg.log_transform_objective = false;
      cfg.validate();

      std::vector<blossom::RunMeta> metas;
      run_experiment(cfg, &metas);
      int failures = 0;
      for (const auto& m : metas) {
        std::cout << "seed " << m.seed << ": " << blossom::to_string(m.reason) << ", steps "
                  << m.steps << ", evals " << m.total_evals << ", regret " << m.regret << "\n";
        if (m.reason == blossom::TerminationReason::Error) ++failures;
      }
      if (failures == static_cast<int>(metas.size())) {
        std::cerr << "all runs failed\n";
        return 2;
      }
      return 0;
    }
    auto rows = blossom::summarize(in_dir, out_file);
    for (const auto& r : rows)
      std::cout << r.objective << " | " << r.algorithm_param << " | regret " << r.mean_regret
                << " | steps " << r.mean_steps << " | steps*regret "
                << r.mean_step_regret_product << " | runs " << r.n_runs << "\n";
    return 0;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
