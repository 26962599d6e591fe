#include "blossom/harness.hpp"

#include "blossom/math.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

namespace blossom {

namespace fs = std::filesystem;
using nlohmann::json;

const char* to_string(Algorithm a) {
  switch (a) {
    case Algorithm::Blossom: return "blossom";
    case Algorithm::EiWithPiStop: return "ei-pi";
    case Algorithm::BayesAcqValueStop: return "bayes-aqstop";
  }
  return "?";
}

Algorithm algorithm_from_string(const std::string& s) {
  if (s == "blossom") return Algorithm::Blossom;
  if (s == "ei-pi") return Algorithm::EiWithPiStop;
  if (s == "bayes-aqstop") return Algorithm::BayesAcqValueStop;
  throw std::invalid_argument("unknown algorithm '" + s +
                              "' (expected blossom, ei-pi or bayes-aqstop)");
}

void ExperimentConfig::validate() const {
  if (seeds.empty()) throw std::invalid_argument("config: seeds must be non-empty");
  std::vector<std::uint64_t> sorted = seeds;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw std::invalid_argument("config: seeds must be distinct");
  if (objective != "gp-draw") make_benchmark(objective);  // throws for unknown names
  if (objective == "gp-draw" && dimension < 1)
    throw std::invalid_argument("config: gp-draw objectives need --dim >= 1");
  if (max_iterations < 1) throw std::invalid_argument("config: max_iterations >= 1");
  if (!(stop_param > 0.0)) throw std::invalid_argument("config: stop parameter must be > 0");
}

namespace {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string format_param(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

std::string phase_name(Phase p) { return to_string(p); }

Phase phase_from_string(const std::string& s) {
  for (Phase p : {Phase::RandomInit, Phase::BayesAcq, Phase::GlobalRegretReduction,
                  Phase::LocalExploit, Phase::Terminated})
    if (s == to_string(p)) return p;
  throw std::invalid_argument("unknown phase '" + s + "' in trace");
}

TerminationReason reason_from_string(const std::string& s) {
  for (TerminationReason r :
       {TerminationReason::RegretTargetMet, TerminationReason::MaxIterations,
        TerminationReason::LocalConverged, TerminationReason::StoppingRuleMet,
        TerminationReason::Error})
    if (s == to_string(r)) return r;
  throw std::invalid_argument("unknown termination reason '" + s + "'");
}

}  // namespace

void write_trace_csv(const std::string& path, const std::vector<StepRecord>& trace,
                     int dimension) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open trace file for writing: " + path);
  out << "iteration,phase";
  for (int k = 0; k < dimension; ++k) out << ",x_" << k;
  out << ",y,incumbent_y,region_radius,regret_estimate,jitter,wall_time_s\n";
  for (const auto& rec : trace) {
    out << rec.iteration << ',' << phase_name(rec.phase);
    for (int k = 0; k < dimension; ++k) out << ',' << format_double(rec.x[k]);
    out << ',' << format_double(rec.y) << ',' << format_double(rec.incumbent_y) << ',';
    if (rec.region_radius) out << format_double(*rec.region_radius);
    out << ',';
    if (rec.regret_estimate) out << format_double(*rec.regret_estimate);
    out << ',' << format_double(rec.jitter) << ',' << format_double(rec.wall_time_s) << '\n';
  }
}

std::vector<StepRecord> read_trace_csv(const std::string& path, int* dimension) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open trace file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty trace file: " + path);

  int d = 0;
  {
    std::stringstream header(line);
    std::string col;
    while (std::getline(header, col, ','))
      if (col.rfind("x_", 0) == 0) ++d;
  }
  if (dimension) *dimension = d;

  std::vector<StepRecord> trace;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream row(line);
    std::string cell;
    StepRecord rec;
    std::getline(row, cell, ',');
    rec.iteration = std::stoi(cell);
    std::getline(row, cell, ',');
    rec.phase = phase_from_string(cell);
    rec.x.resize(d);
    for (int k = 0; k < d; ++k) {
      std::getline(row, cell, ',');
      rec.x[k] = std::stod(cell);
    }
    std::getline(row, cell, ',');
    rec.y = std::stod(cell);
    std::getline(row, cell, ',');
    rec.incumbent_y = std::stod(cell);
    std::getline(row, cell, ',');
    if (!cell.empty()) rec.region_radius = std::stod(cell);
    std::getline(row, cell, ',');
    if (!cell.empty()) rec.regret_estimate = std::stod(cell);
    std::getline(row, cell, ',');
    rec.jitter = std::stod(cell);
    std::getline(row, cell, ',');
    rec.wall_time_s = std::stod(cell);
    trace.push_back(std::move(rec));
  }
  return trace;
}

RunResult baseline_run(const std::function<double(const Vector&)>& objective,
                       const Domain& domain, const BlossomConfig& cfg, Algorithm algorithm,
                       double stop_param, double* stop_metric_final) {
  const int d = domain.dim();
  const int n_init = cfg.n_init > 0 ? cfg.n_init : 2 * (d + 1);
  const auto t_start = std::chrono::steady_clock::now();
  auto elapsed = [&]() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  };

  RunResult result;
  long evals = 0;
  Vector best_x;
  double best_y = std::numeric_limits<double>::infinity();
  if (stop_metric_final) *stop_metric_final = std::numeric_limits<double>::quiet_NaN();

  auto record = [&](Phase phase, const Vector& x, double y, double jitter) {
    StepRecord rec;
    rec.iteration = static_cast<int>(result.trace.size()) + 1;
    rec.phase = phase;
    rec.x = x;
    rec.y = y;
    if (y < best_y) {
      best_y = y;
      best_x = x;
    }
    rec.incumbent_x = best_x;
    rec.incumbent_y = best_y;
    rec.jitter = jitter;
    rec.wall_time_s = elapsed();
    result.trace.push_back(std::move(rec));
  };

  std::vector<Observation> data;
  {
    Rng rng(mix_seed(cfg.seed, 0x111));
    for (const auto& x : latin_hypercube(domain, n_init, rng)) {
      double y = objective(x);
      ++evals;
      if (!std::isfinite(y)) {
        result.terminated_reason = TerminationReason::Error;
        result.diagnostic = "objective returned a non-finite value";
        result.recommendation = best_x;
        result.recommended_y = best_y;
        result.total_evals = evals;
        return result;
      }
      record(Phase::RandomInit, x, y, 0.0);
      data.push_back({x, y});
    }
  }

  result.terminated_reason = TerminationReason::MaxIterations;
  while (static_cast<int>(result.trace.size()) < cfg.max_iterations) {
    const int iter = static_cast<int>(result.trace.size()) + 1;
    const std::uint64_t iter_seed = mix_seed(cfg.seed, static_cast<std::uint64_t>(iter));

    std::optional<GpModel> model;
    try {
      FitOptions fit_opts;
      fit_opts.n_restarts = cfg.fit_restarts;
      KernelSpec spec = fit_hyperparameters(data, domain, mix_seed(iter_seed, 0xF1), fit_opts);
      model.emplace(spec, data, domain);
    } catch (const std::exception& e) {
      result.terminated_reason = TerminationReason::Error;
      result.diagnostic = std::string("model fitting failed: ") + e.what();
      break;
    }

    AcquisitionContext ctx;
    ctx.model = &*model;
    ctx.domain = domain;
    ctx.incumbent_best = best_y;

    Proposal proposal;
    double metric = 0.0;
    try {
      if (algorithm == Algorithm::EiWithPiStop) {
        proposal = maximize_acquisition(expected_improvement, ctx, std::nullopt,
                                        cfg.acq_budget_per_dim * d, mix_seed(iter_seed, 0xA2));
        double mu, var;
        model->mean_var(proposal.x, &mu, &var);
        double sd = std::sqrt(std::max(var, 0.0));
        metric = sd > 0.0 ? normal_cdf((best_y - mu) / sd) : (mu < best_y ? 1.0 : 0.0);
      } else {
        ConvexRegion no_region;
        no_region.center = domain.center();
        SupportSet support =
            build_support(*model, no_region, domain, cfg.n_support, mix_seed(iter_seed, 0xE5));
        ctx.pes_cache = prepare_pes_cache(*model, support.points, cfg.pes_paths,
                                          cfg.pes_fantasies, mix_seed(iter_seed, 0xE6));
        auto pes = [&](const AcquisitionContext& c, const Vector& x) {
          return pes_discrete(c, x, cfg.pes_paths, cfg.pes_fantasies, mix_seed(iter_seed, 0xE6));
        };
        proposal = maximize_acquisition(pes, ctx, std::nullopt, cfg.pes_budget_per_dim * d,
                                        mix_seed(iter_seed, 0xA3));
        metric = proposal.value;
      }
    } catch (const std::exception& e) {
      result.terminated_reason = TerminationReason::Error;
      result.diagnostic = std::string("acquisition failed: ") + e.what();
      break;
    }

    if (stop_metric_final) *stop_metric_final = metric;
    if (metric < stop_param) {
      result.terminated_reason = TerminationReason::StoppingRuleMet;
      break;
    }

    double y = objective(proposal.x);
    ++evals;
    if (!std::isfinite(y)) {
      result.terminated_reason = TerminationReason::Error;
      result.diagnostic = "objective returned a non-finite value";
      break;
    }
    record(Phase::BayesAcq, proposal.x, y, model->jitter());
    data.push_back({proposal.x, y});
  }

  result.recommendation = best_x;
  result.recommended_y = best_y;
  result.total_evals = evals;
  return result;
}

namespace {

struct PreparedObjective {
  std::function<double(const Vector&)> fn;
  Domain domain;
  std::shared_ptr<GpDrawObjective> gp_draw;  // set for in-model objectives
  double known_minimum = 0.0;                // valid for benchmarks
  bool minimum_known = false;
};

PreparedObjective prepare_objective(const ExperimentConfig& cfg, std::uint64_t seed) {
  PreparedObjective out;
  if (cfg.objective == "gp-draw") {
    KernelSpec spec;
    spec.family = KernelFamily::Matern52;
    spec.output_scale = 1.0;
    spec.lengthscales = Vector::Constant(cfg.dimension, cfg.gp_draw_lengthscale);
    out.domain = Domain::cube(cfg.dimension, 0.0, 1.0);
    out.gp_draw = std::make_shared<GpDrawObjective>(spec, out.domain, mix_seed(seed, 0x60D));
    auto draw = out.gp_draw;
    out.fn = [draw](const Vector& x) { return (*draw)(x); };
    return out;
  }
  Benchmark bench = make_benchmark(cfg.objective);
  if (cfg.log_transform_objective) bench = log_transform(bench);
  out.domain = bench.domain;
  out.fn = bench.evaluate;
  out.known_minimum = bench.known_minimum.value();
  out.minimum_known = true;
  return out;
}

// Oracle minimum of a realized GP draw: best cached value refined by a
// simplex polish (whose queries extend the cache consistently).
double gp_draw_oracle_minimum(GpDrawObjective& draw) {
  const auto& values = draw.cached_values();
  const auto& points = draw.cached_points();
  int best = 0;
  for (int i = 1; i < static_cast<int>(values.size()); ++i)
    if (values[i] < values[best]) best = i;
  double refined;
  auto f = [&](const Vector& x) { return draw(x); };
  nelder_mead(f, draw.domain(), points[best], 0.01, 200 * draw.domain().dim(), &refined);
  double out = refined;
  for (double v : draw.cached_values()) out = std::min(out, v);
  return out;
}

json meta_to_json(const ExperimentConfig& cfg, const RunMeta& meta,
                  const std::string& trace_file, int dimension) {
  json j;
  j["objective"] = cfg.objective;
  j["log_transform"] = cfg.objective != "gp-draw" && cfg.log_transform_objective;
  j["algorithm"] = to_string(cfg.algorithm);
  j["stop_param"] = cfg.stop_param;
  j["algorithm_param"] = std::string(to_string(cfg.algorithm)) + " " + format_param(cfg.stop_param);
  j["seed"] = meta.seed;
  j["steps"] = meta.steps;
  j["regret"] = meta.regret;
  j["recommended_y"] = meta.recommended_y;
  j["total_evals"] = meta.total_evals;
  j["reason"] = to_string(meta.reason);
  if (std::isfinite(meta.stop_metric_final)) j["stop_metric_final"] = meta.stop_metric_final;
  j["wall_time_s"] = meta.wall_time_s;
  j["trace_file"] = trace_file;
  j["dimension"] = dimension;
  return j;
}

}  // namespace

std::vector<RunResult> run_experiment(const ExperimentConfig& cfg, std::vector<RunMeta>* metas) {
  cfg.validate();
  fs::create_directories(cfg.output_dir);

  const int n_runs = static_cast<int>(cfg.seeds.size());
  std::vector<RunResult> results(n_runs);
  std::vector<RunMeta> all_meta(n_runs);

  auto one_run = [&](int i) {
    const std::uint64_t seed = cfg.seeds[i];
    const auto t0 = std::chrono::steady_clock::now();
    PreparedObjective obj = prepare_objective(cfg, seed);

    RunMeta meta;
    meta.seed = seed;
    RunResult res;
    try {
      if (cfg.algorithm == Algorithm::Blossom) {
        BlossomConfig bc = cfg.blossom;
        bc.seed = seed;
        bc.target_global_regret = cfg.stop_param;
        bc.max_iterations = cfg.max_iterations;
        res = run(obj.fn, obj.domain, bc);
      } else {
        BlossomConfig bc = cfg.blossom;
        bc.seed = seed;
        bc.max_iterations = cfg.max_iterations;
        res = baseline_run(obj.fn, obj.domain, bc, cfg.algorithm, cfg.stop_param,
                           &meta.stop_metric_final);
      }
    } catch (const std::exception& e) {
      res.terminated_reason = TerminationReason::Error;
      res.diagnostic = e.what();
    }

    meta.reason = res.terminated_reason;
    meta.steps = static_cast<int>(res.trace.size());
    meta.total_evals = res.total_evals;
    meta.recommended_y = res.recommended_y;
    if (res.terminated_reason != TerminationReason::Error || !res.trace.empty()) {
      if (obj.minimum_known) {
        double reference = cfg.log_transform_objective ? 0.0 : obj.known_minimum;
        meta.regret = std::max(0.0, res.recommended_y - reference);
      } else if (obj.gp_draw) {
        meta.regret = std::max(0.0, res.recommended_y - gp_draw_oracle_minimum(*obj.gp_draw));
      }
    }
    meta.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    std::string tag = cfg.objective + "_" + to_string(cfg.algorithm) + "_" +
                      format_param(cfg.stop_param) + "_seed" + std::to_string(seed);
    std::string trace_file = (fs::path(cfg.output_dir) / ("trace_" + tag + ".csv")).string();
    write_trace_csv(trace_file, res.trace, obj.domain.dim());
    std::ofstream meta_out(fs::path(cfg.output_dir) / ("run_" + tag + ".json"));
    meta_out << meta_to_json(cfg, meta, trace_file, obj.domain.dim()).dump(2) << "\n";

    results[i] = std::move(res);
    all_meta[i] = meta;
  };

  const int jobs = std::max(1, std::min(cfg.jobs, n_runs));
  if (jobs == 1) {
    for (int i = 0; i < n_runs; ++i) one_run(i);
  } else {
    std::vector<std::thread> workers;
    std::mutex next_mutex;
    int next = 0;
    for (int w = 0; w < jobs; ++w)
      workers.emplace_back([&]() {
        for (;;) {
          int i;
          {
            std::lock_guard<std::mutex> lock(next_mutex);
            if (next >= n_runs) return;
            i = next++;
          }
          one_run(i);
        }
      });
    for (auto& t : workers) t.join();
  }

  if (metas) *metas = all_meta;
  return results;
}

std::vector<SummaryRow> summarize(const std::string& results_dir, const std::string& out_file) {
  struct Group {
    std::vector<double> regrets;
    std::vector<double> steps;
  };
  std::map<std::pair<std::string, std::string>, Group> groups;

  if (!fs::is_directory(results_dir))
    throw std::runtime_error("summarize: not a directory: " + results_dir);
  for (const auto& entry : fs::directory_iterator(results_dir)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("run_", 0) != 0 || entry.path().extension() != ".json") continue;
    std::ifstream in(entry.path());
    json j = json::parse(in);
    reason_from_string(j["reason"].get<std::string>());  // validates the record
    Group& g = groups[{j["objective"].get<std::string>(), j["algorithm_param"].get<std::string>()}];
    g.regrets.push_back(j["regret"].get<double>());
    g.steps.push_back(j["steps"].get<double>());
  }
  if (groups.empty())
    throw std::runtime_error("summarize: no completed runs under " + results_dir);

  std::vector<SummaryRow> rows;
  for (const auto& [key, g] : groups) {
    SummaryRow row;
    row.objective = key.first;
    row.algorithm_param = key.second;
    row.n_runs = static_cast<int>(g.regrets.size());
    double sr = 0.0, ss = 0.0, sp = 0.0;
    for (int i = 0; i < row.n_runs; ++i) {
      sr += g.regrets[i];
      ss += g.steps[i];
      sp += g.steps[i] * g.regrets[i];
    }
    row.mean_regret = sr / row.n_runs;
    row.mean_steps = ss / row.n_runs;
    row.mean_step_regret_product = sp / row.n_runs;
    rows.push_back(std::move(row));
  }

  if (!out_file.empty()) {
    std::ofstream out(out_file);
    if (!out) throw std::runtime_error("summarize: cannot open " + out_file);
    out << "objective,algorithm_param,mean_regret,mean_steps,mean_step_regret_product,n_runs\n";
    for (const auto& r : rows)
      out << r.objective << ',' << r.algorithm_param << ',' << format_double(r.mean_regret)
          << ',' << format_double(r.mean_steps) << ','
          << format_double(r.mean_step_regret_product) << ',' << r.n_runs << "\n";

    // Survival table: fraction of runs still active after n steps.
    fs::path survival_path = fs::path(out_file);
    survival_path.replace_extension();
    survival_path += "_survival.csv";
    std::ofstream surv(survival_path);
    surv << "objective,algorithm_param,n,fraction_active\n";
    for (const auto& [key, g] : groups) {
      int max_steps = 0;
      for (double s : g.steps) max_steps = std::max(max_steps, static_cast<int>(s));
      for (int n = 0; n <= max_steps; ++n) {
        int active = 0;
        for (double s : g.steps)
          if (s > n) ++active;
        surv << key.first << ',' << key.second << ',' << n << ','
             << format_double(static_cast<double>(active) / g.steps.size()) << "\n";
      }
    }
  }
  return rows;
}

}  // namespace blossom
