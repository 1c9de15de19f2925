// Command-line front end: single runs, the seeded plate study, the scaling
// comparison, and re-verification of emitted traces.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <tuple>

#include "CLI11.hpp"
#include "shdempc/csv_io.hpp"
#include "shdempc/experiments.hpp"

namespace fs = std::filesystem;
using namespace shdempc;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;
constexpr int kExitAudit = 3;
constexpr int kExitIo = 4;

struct CliOverrides {
  std::string config_path;
  std::string output_dir;
  std::string variant, coupling, hierarchy_init, sampling;
  std::vector<std::uint64_t> seeds;
  std::vector<int> scaling_agents;
  int num_seeds = -1;
  int n_agents = -1, levels = -1, iterations = -1, horizon = -1, time_steps = -1;
  long long seed = -1;
  double dt = -1, u_bound = -1, settle_tol = -1;
  double mu_smooth = -1, tol_eq = -1, tol_grad = -1;
  bool parallel_solve = false;
  bool plots = false;
  bool no_csv = false;
  int verbosity = -1;
};

void add_common_options(CLI::App* cmd, CliOverrides& o) {
  cmd->add_option("-c,--config", o.config_path, "JSON configuration file");
  cmd->add_option("-o,--out", o.output_dir, "output directory");
  cmd->add_option("--n-agents", o.n_agents, "number of plates N");
  cmd->add_option("--levels", o.levels, "hierarchy levels N_q");
  cmd->add_option("--iterations", o.iterations, "negotiation iterations N_p per phase");
  cmd->add_option("--horizon", o.horizon, "prediction horizon H");
  cmd->add_option("--time-steps", o.time_steps, "simulated sampling time-steps T");
  cmd->add_option("--dt", o.dt, "sampling period (s)");
  cmd->add_option("--u-bound", o.u_bound, "actuation bound (N)");
  cmd->add_option("--seed", o.seed, "seed for single runs");
  cmd->add_option("--seeds", o.seeds, "seed list for multi-run experiments")->delimiter(',');
  cmd->add_option("--num-seeds", o.num_seeds, "use seeds 1..n");
  cmd->add_option("--variant", o.variant, "hierarchy|parallel");
  cmd->add_option("--coupling", o.coupling, "local|cooperative");
  cmd->add_option("--hierarchy-init", o.hierarchy_init, "all_one|universal");
  cmd->add_option("--sampling", o.sampling, "per_level|per_iteration");
  cmd->add_option("--settle-tol", o.settle_tol, "settle tolerance on the global cost");
  cmd->add_option("--mu-smooth", o.mu_smooth, "cost smoothing width");
  cmd->add_option("--tol-eq", o.tol_eq, "solver equality tolerance");
  cmd->add_option("--tol-grad", o.tol_grad, "solver gradient tolerance");
  cmd->add_option("--scaling-agents", o.scaling_agents, "system sizes for the scaling study")
      ->delimiter(',');
  cmd->add_flag("--parallel-solve", o.parallel_solve, "solve same-level agents on threads");
  cmd->add_flag("--plots", o.plots, "emit the plot scripts next to the CSVs");
  cmd->add_flag("--no-csv", o.no_csv, "disable the CSV sink");
  cmd->add_option("-v,--verbosity", o.verbosity, "0 quiet, 1 normal, 2 chatty");
}

RunConfig resolve_config(const CliOverrides& o) {
  RunConfig config = o.config_path.empty() ? default_config() : parse_config(o.config_path);
  if (!o.output_dir.empty()) config.output_dir = o.output_dir;
  if (o.n_agents >= 0) config.system.n_agents = o.n_agents;
  if (o.levels >= 0) config.system.num_levels = o.levels;
  if (o.iterations >= 0) config.system.iterations = o.iterations;
  if (o.horizon >= 0) config.system.horizon = o.horizon;
  if (o.time_steps >= 0) config.system.time_steps = o.time_steps;
  if (o.seed >= 0) config.system.seed = static_cast<std::uint64_t>(o.seed);
  if (!o.seeds.empty()) config.seeds = o.seeds;
  if (o.num_seeds != -1) {
    if (o.num_seeds <= 0) throw ConfigError("config: the seed count must be positive");
    config.seeds.clear();
    for (int i = 1; i <= o.num_seeds; ++i) config.seeds.push_back(i);
  }
  if (o.dt > 0) config.system.dt = o.dt;
  if (o.u_bound > 0) config.system.u_bound = o.u_bound;
  if (o.settle_tol > 0) config.system.settle_tol = o.settle_tol;
  if (o.mu_smooth > 0) config.system.solver.mu_smooth = o.mu_smooth;
  if (o.tol_eq > 0) config.system.solver.tol_eq = o.tol_eq;
  if (o.tol_grad > 0) config.system.solver.tol_grad = o.tol_grad;
  if (!o.scaling_agents.empty()) config.scaling_agents = o.scaling_agents;
  if (!o.variant.empty()) {
    if (o.variant == "parallel") {
      config.system.variant = Variant::parallel;
      config.system.num_levels = 1;
    } else if (o.variant == "hierarchy") {
      config.system.variant = Variant::hierarchy;
    } else {
      throw ConfigError("config: variant must be hierarchy or parallel");
    }
  }
  if (!o.coupling.empty()) {
    if (o.coupling == "local") config.system.coupling = CouplingMode::local;
    else if (o.coupling == "cooperative") config.system.coupling = CouplingMode::cooperative;
    else throw ConfigError("config: coupling must be local or cooperative");
  }
  if (!o.hierarchy_init.empty()) {
    if (o.hierarchy_init == "all_one") config.system.hierarchy_init = HierarchyInit::all_one;
    else if (o.hierarchy_init == "universal") config.system.hierarchy_init = HierarchyInit::universal;
    else throw ConfigError("config: hierarchy-init must be all_one or universal");
  }
  if (!o.sampling.empty()) {
    if (o.sampling == "per_level") config.system.sampling_mode = SamplingMode::per_level;
    else if (o.sampling == "per_iteration") config.system.sampling_mode = SamplingMode::per_iteration;
    else throw ConfigError("config: sampling must be per_level or per_iteration");
  }
  if (o.parallel_solve) config.system.parallel_solve = true;
  if (o.plots) config.sink_plots = true;
  if (o.no_csv) config.sink_csv = false;
  if (o.verbosity >= 0) config.verbosity = o.verbosity;
  config.validate();
  return config;
}

int run_command(const CliOverrides& o) {
  const RunConfig config = resolve_config(o);
  Coordinator coordinator(config.system);
  const RunMetrics metrics = coordinator.run();
  const auto files = emit_metrics(metrics, config, config.output_dir);
  if (config.verbosity >= 1) {
    std::printf("run %s: seed %llu, %zu samples, %llu hierarchy changes, final V %s\n",
                config.name.c_str(), static_cast<unsigned long long>(config.system.seed),
                metrics.samples.size(), static_cast<unsigned long long>(metrics.total_mutations),
                format_double(metrics.samples.back().global_cost).c_str());
  }
  if (config.verbosity >= 2) {
    for (const auto& path : files) std::printf("  wrote %s\n", path.c_str());
  }
  if (!metrics.audit_findings.empty()) {
    for (const auto& finding : metrics.audit_findings)
      std::fprintf(stderr, "audit: %s\n", finding.c_str());
    return kExitAudit;
  }
  return kExitOk;
}

int study_command(const CliOverrides& o) {
  const RunConfig config = resolve_config(o);
  const StudySummary summary = plate_study(config);

  fs::create_directories(config.output_dir);
  std::ofstream table(fs::path(config.output_dir) / "study_summary.csv", std::ios::binary);
  table << "seed,settle_sample,final_V,mutations,last_mutation_time_step\n";
  bool audits_clean = true;
  for (const StudyRun& run : summary.runs) {
    RunConfig echo = config;
    echo.system.seed = run.seed;
    const std::string dir =
        (fs::path(config.output_dir) / ("seed_" + std::to_string(run.seed))).string();
    emit_metrics(run.metrics, echo, dir);
    table << run.seed << ',' << run.settle_sample << ',' << format_double(run.final_cost) << ','
          << run.mutations << ',' << run.last_mutation_time_step << '\n';
    audits_clean = audits_clean && run.metrics.audit_findings.empty();
    if (config.verbosity >= 1) {
      std::printf("seed %llu: settle %ld, mutations %llu (last at time-step %d), final V %s\n",
                  static_cast<unsigned long long>(run.seed), run.settle_sample,
                  static_cast<unsigned long long>(run.mutations), run.last_mutation_time_step,
                  format_double(run.final_cost).c_str());
    }
  }
  return audits_clean ? kExitOk : kExitAudit;
}

int scaling_command(const CliOverrides& o) {
  const RunConfig config = resolve_config(o);
  const auto table = scaling_comparison(config, config.scaling_agents,
                                        {Variant::parallel, Variant::hierarchy}, config.seeds);

  fs::create_directories(config.output_dir);
  std::ofstream out(fs::path(config.output_dir) / "scaling.csv", std::ios::binary);
  out << "variant,n_agents,median_settle,settles\n";
  for (const ScalingCell& cell : table) {
    out << (cell.variant == Variant::parallel ? "parallel" : "hierarchy") << ',' << cell.n_agents
        << ',' << cell.median_settle << ',';
    for (std::size_t i = 0; i < cell.settles.size(); ++i) {
      if (i) out << ';';
      out << cell.settles[i];
    }
    out << '\n';
    if (config.verbosity >= 1) {
      std::printf("%s N=%d: median settle %ld\n",
                  cell.variant == Variant::parallel ? "parallel" : "hierarchy", cell.n_agents,
                  cell.median_settle);
    }
  }
  std::ofstream echo(fs::path(config.output_dir) / "config.json", std::ios::binary);
  echo << config_to_json(config);
  return kExitOk;
}

int audit_command(const std::string& directory) {
  const auto trace = read_trace_csv((fs::path(directory) / "trace.csv").string());
  const auto samples = read_global_csv((fs::path(directory) / "global.csv").string());
  int failures = 0;
  const auto fail = [&failures](const std::string& what) {
    std::fprintf(stderr, "audit: %s\n", what.c_str());
    ++failures;
  };

  // Conflict flags must match the naive/informed comparison.
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const TraceRow& row = trace[i];
    const bool expected = row.v_breve > row.v_hat + conflict_eps(row.v_hat);
    if (row.conflict != expected)
      fail("trace row " + std::to_string(i) + ": conflict flag does not match V_hat/V_breve");
  }

  // One hierarchy mutation per conflict.
  std::uint64_t conflicts = 0;
  for (const TraceRow& row : trace) conflicts += row.conflict ? 1 : 0;
  if (!samples.empty() && samples.back().cumulative_mutations != conflicts)
    fail("cumulative mutation count " + std::to_string(samples.back().cumulative_mutations) +
         " does not equal the " + std::to_string(conflicts) + " conflicts in the trace");

  // After the last conflict, the per-phase global sums must be non-increasing
  // across iterations within each time-step.
  std::size_t last_conflict = 0;
  for (std::size_t i = 0; i < trace.size(); ++i) {
    if (trace[i].conflict) last_conflict = i + 1;
  }
  std::map<std::tuple<int, int, int>, double> sums;
  for (std::size_t i = last_conflict; i < trace.size(); ++i) {
    const TraceRow& row = trace[i];
    sums[{row.time_step, row.phase == Phase::stationary ? 0 : 1, row.iteration}] += row.v_breve;
  }
  for (auto it = sums.begin(); it != sums.end(); ++it) {
    const auto [t, phase, p] = it->first;
    const auto prev = sums.find({t, phase, p - 1});
    if (prev == sums.end()) continue;
    if (it->second > prev->second + 1e-9 * std::max(1.0, std::abs(prev->second)))
      fail("global cost increased at time-step " + std::to_string(t) + ", phase " +
           std::to_string(phase) + ", iteration " + std::to_string(p));
  }

  if (failures == 0)
    std::printf("audit: %s ok (%zu trace rows, %zu samples)\n", directory.c_str(), trace.size(),
                samples.size());
  return failures == 0 ? kExitOk : kExitAudit;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Social-hierarchy distributed economic MPC on the plate-overlap benchmark"};
  app.require_subcommand(1);

  CliOverrides run_opts, study_opts, scaling_opts;
  std::string audit_dir;

  CLI::App* run_cmd = app.add_subcommand("run", "single seeded run");
  add_common_options(run_cmd, run_opts);
  CLI::App* study_cmd = app.add_subcommand("study", "multi-seed plate study");
  add_common_options(study_cmd, study_opts);
  CLI::App* scaling_cmd =
      app.add_subcommand("scaling", "parallel vs hierarchy across system sizes");
  add_common_options(scaling_cmd, scaling_opts);
  CLI::App* audit_cmd = app.add_subcommand("audit", "re-verify invariants over an emitted trace");
  audit_cmd->add_option("dir", audit_dir, "run directory containing trace.csv and global.csv")
      ->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) return run_command(run_opts);
    if (study_cmd->parsed()) return study_command(study_opts);
    if (scaling_cmd->parsed()) return scaling_command(scaling_opts);
    if (audit_cmd->parsed()) return audit_command(audit_dir);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const IoError& e) {
    std::fprintf(stderr, "io error: %s\n", e.what());
    return kExitIo;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitRuntime;
  }
  return kExitOk;
}
