// Acceptance suite: executes every acceptance criterion at its stated
// tolerance and prints one PASS/FAIL line per criterion. Exits nonzero if
// any criterion fails. Expect a long wall-clock run: the scaling comparison
// alone covers eighty agents times thirty time-steps per seed.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "oracles.hpp"
#include "shdempc/csv_io.hpp"
#include "shdempc/experiments.hpp"

using namespace shdempc;
namespace fs = std::filesystem;

namespace {

struct Criterion {
  int number;
  std::string title;
  bool pass = true;
  std::string detail;
};

std::vector<Criterion> g_results;

void report(int number, const std::string& title, bool pass, const std::string& detail = "") {
  g_results.push_back({number, title, pass, detail});
  std::printf("%s  criterion %d: %s%s%s\n", pass ? "PASS" : "FAIL", number, title.c_str(),
              detail.empty() ? "" : " — ", detail.c_str());
  std::fflush(stdout);
}

int last_mutation_time_step(const RunMetrics& metrics) {
  int last = 0;
  std::uint64_t previous = 0;
  for (const GlobalSample& sample : metrics.samples) {
    if (sample.cumulative_mutations != previous) {
      last = sample.time_step;
      previous = sample.cumulative_mutations;
    }
  }
  return last;
}

// Per-(time_step, phase, iteration) sums of the informed values, restricted
// to trace rows at or after `from`.
std::map<std::tuple<int, int, int>, double> informed_sums(const std::vector<TraceRow>& trace,
                                                          std::size_t from) {
  std::map<std::tuple<int, int, int>, double> sums;
  for (std::size_t i = from; i < trace.size(); ++i) {
    const TraceRow& row = trace[i];
    sums[{row.time_step, row.phase == Phase::stationary ? 0 : 1, row.iteration}] += row.v_breve;
  }
  return sums;
}

// Non-increase of the per-phase global cost across iterations within each
// time-step, from the given trace row onward. Relative tolerance 1e-9.
bool phase_monotone(const std::vector<TraceRow>& trace, std::size_t from, std::string* why) {
  const auto sums = informed_sums(trace, from);
  for (const auto& [key, value] : sums) {
    const auto [t, phase, p] = key;
    const auto previous = sums.find({t, phase, p - 1});
    if (previous == sums.end()) continue;
    if (value > previous->second + 1e-9 * std::max(1.0, std::abs(previous->second))) {
      if (why != nullptr) {
        std::ostringstream oss;
        oss << "V rose from " << previous->second << " to " << value << " at time-step " << t
            << ", " << (phase == 0 ? "stationary" : "trajectory") << " phase, iteration " << p;
        *why = oss.str();
      }
      return false;
    }
  }
  return true;
}

std::size_t row_after_last_conflict(const std::vector<TraceRow>& trace) {
  std::size_t last = 0;
  for (std::size_t i = 0; i < trace.size(); ++i) {
    if (trace[i].conflict) last = i + 1;
  }
  return last;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

Vec vec2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

Vec vec1(double a) {
  Vec v(1);
  v << a;
  return v;
}

// ---------------------------------------------------------------------------

void criteria_1_to_5(const RunConfig& config) {
  const StudySummary study = plate_study(config);
  const int time_steps = kStudyTimeSteps;

  // 1: cumulative mutation count constant before the end of each run.
  {
    bool pass = true;
    std::string detail;
    for (const StudyRun& run : study.runs) {
      const bool quiet = run.last_mutation_time_step <= time_steps - 2;
      if (!quiet) pass = false;
      detail += (detail.empty() ? "" : ", ") + std::to_string(run.mutations) + "@t" +
                std::to_string(run.last_mutation_time_step);
    }
    report(1, "conflict resolution: mutations freeze before the final 2 time-steps", pass,
           "mutations@last-change: " + detail);
  }

  // 2: after the last mutation, V non-increasing across iterations within
  // every time-step and phase.
  {
    bool pass = true;
    std::string detail;
    for (const StudyRun& run : study.runs) {
      std::string why;
      if (!phase_monotone(run.metrics.trace, row_after_last_conflict(run.metrics.trace), &why)) {
        pass = false;
        detail = "seed " + std::to_string(run.seed) + ": " + why;
        break;
      }
    }
    report(2, "post-resolution monotonicity of the exact global cost", pass, detail);
  }

  // 4: the independent constraint auditor passes everywhere (box bounds
  // exact, equality residuals <= 1e-8), for every study run.
  {
    bool pass = true;
    std::string detail;
    std::size_t audits = 0;
    for (const StudyRun& run : study.runs) {
      audits += run.metrics.audit_findings.size();
      if (!run.metrics.audit_findings.empty() && detail.empty())
        detail = "seed " + std::to_string(run.seed) + ": " + run.metrics.audit_findings.front();
      if (run.metrics.solver_failures != 0) {
        pass = false;
        detail += " (solver failures)";
      }
    }
    pass = pass && audits == 0;
    report(4, "recursive feasibility audited at every iteration of every run", pass, detail);
  }

  // 5: stationary targets fixed over the final time-step, plant delivered to
  // its target by the frozen candidate plans.
  {
    bool pass = true;
    std::string detail;
    for (const StudyRun& run : study.runs) {
      const auto& history = run.metrics.target_history;
      double worst = 0.0;
      for (std::size_t agent = 0; agent < history.back().size(); ++agent) {
        worst = std::max(worst, (history[history.size() - 1][agent] -
                                 history[history.size() - 2][agent])
                                    .lpNorm<Eigen::Infinity>());
      }
      if (worst >= 1e-6) {
        pass = false;
        detail = "seed " + std::to_string(run.seed) + ": target moved " + std::to_string(worst);
      }
    }
    // Rollout audit on the final state: re-run one seed and freeze inputs.
    SystemConfig system = config.system;
    system.seed = config.seeds.front();
    system.time_steps = time_steps;
    Coordinator coordinator(system);
    coordinator.run();
    for (const AgentRuntime& agent : coordinator.agents()) {
      const Trajectory frozen =
          rollout(agent.model, agent.measured_state, agent.candidate.trajectory.inputs);
      const double reach =
          (frozen.states.back() - agent.candidate.stationary.x_s).lpNorm<Eigen::Infinity>();
      if (reach > kAuditTolerance) {
        pass = false;
        detail += " agent " + std::to_string(agent.id) + " misses its target by " +
                  std::to_string(reach);
      }
    }
    report(5, "bounded stability: targets fixed and reached under frozen inputs", pass, detail);
  }
}

void criterion_3(const RunConfig& config) {
  SystemConfig system = config.system;
  system.hierarchy_init = HierarchyInit::universal;
  system.time_steps = kStudyTimeSteps;
  system.seed = 1;
  Coordinator coordinator(system);
  const RunMetrics metrics = coordinator.run();

  int conflicts = 0;
  for (const TraceRow& row : metrics.trace) conflicts += row.conflict ? 1 : 0;
  std::string why;
  const bool monotone = phase_monotone(metrics.trace, 0, &why);
  const bool pass = conflicts == 0 && monotone;
  report(3, "universal hierarchy: conflict-free and monotone from iteration 1", pass,
         conflicts != 0 ? std::to_string(conflicts) + " conflicts" : why);
}

void criterion_6(const RunConfig& config) {
  const auto table = scaling_comparison(config, {10, 20, 40, 80},
                                        {Variant::parallel, Variant::hierarchy}, config.seeds);
  std::map<std::pair<int, int>, long> medians;  // (variant, N) -> median settle
  std::string detail;
  for (const ScalingCell& cell : table) {
    medians[{cell.variant == Variant::parallel ? 0 : 1, cell.n_agents}] = cell.median_settle;
    detail += (cell.variant == Variant::parallel ? "par" : "hier");
    detail += std::to_string(cell.n_agents) + "=" + std::to_string(cell.median_settle) + " ";
  }
  const double par_ratio = static_cast<double>(medians[{0, 80}]) /
                           std::max<long>(1, medians[{0, 10}]);
  long hier_min = medians[{1, 10}], hier_max = medians[{1, 10}];
  for (int n : {10, 20, 40, 80}) {
    hier_min = std::min(hier_min, medians[{1, n}]);
    hier_max = std::max(hier_max, medians[{1, n}]);
  }
  const double hier_ratio = static_cast<double>(hier_max) / std::max<long>(1, hier_min);
  const bool pass = par_ratio >= 2.0 && hier_ratio <= 2.0;
  char buffer[160];
  std::snprintf(buffer, sizeof buffer, "parallel 80/10 = %.2fx (need >= 2), hierarchy max/min = %.2fx (need <= 2)",
                par_ratio, hier_ratio);
  report(6, "scaling separation between the parallel baseline and the hierarchy", pass,
         std::string(buffer) + " [" + detail + "]");
}

void criterion_7(const RunConfig& config) {
  bool pass = true;
  std::string detail;

  AgentModel model = discretize_plate(1, 1, 1, 1);
  model.u_lo = vec1(-0.25);
  model.u_hi = vec1(0.25);
  const int H = config.system.horizon;

  // Stationary solve vs the brute-force grid, 1- and 2-agent instances.
  for (int n_agents : {1, 2}) {
    const auto sets = local_coupling_sets(chain(n_agents));
    const CooperativeStageCost cost(sets[0], PlateCostParams{});
    AssumedNeighborData assumed(sets[0].cost_upstream);
    for (AgentId j : sets[0].cost_upstream) {
      Trajectory flat;
      flat.states.assign(H + 1, vec2(0, 0));
      flat.inputs.assign(H, vec1(0));
      assumed.set_trajectory(j, flat);
      assumed.set_stationary(j, StationaryPoint{vec2(0, 0), vec1(0)});
    }
    LocalSolver solver(model, cost, config.system.solver);
    const SolveResult result = solver.solve_stationary(
        vec2(0, 0), assumed, std::vector<Vec>(H, vec1(0)), StationaryPoint{vec2(0, 0), vec1(0)});
    const auto objective_of = [&](double us) {
      return cost.value(vec2(us, 0), vec1(us), assumed, Instant::stationary(),
                        CostKind::smoothed);
    };
    const double oracle_best = oracle::grid_min_1d(objective_of, -0.25, 0.25, 1e-4);
    const double gap = std::abs(result.objective - oracle_best);
    if (!result.converged || gap > 1e-3) {
      pass = false;
      detail += " grid(" + std::to_string(n_agents) + " agents): gap " + std::to_string(gap);
    }
  }

  // Analytic vs central-difference gradients at 100 random points.
  {
    const auto sets = local_coupling_sets(chain(3));
    const CooperativeStageCost cost(sets[1], PlateCostParams{});
    AssumedNeighborData assumed(sets[1].cost_upstream);
    std::mt19937 gen(2024);
    std::uniform_real_distribution<double> dist(-0.25, 0.25);
    Trajectory left, right;
    left.states.assign(H + 1, vec2(0.07, 0));
    left.inputs.assign(H, vec1(0));
    right.states.assign(H + 1, vec2(-0.11, 0));
    right.inputs.assign(H, vec1(0));
    assumed.set_trajectory(0, left);
    assumed.set_trajectory(2, right);
    assumed.set_stationary(0, StationaryPoint{vec2(0.07, 0), vec1(0.07)});
    assumed.set_stationary(2, StationaryPoint{vec2(-0.11, 0), vec1(-0.11)});

    const auto traj_objective = make_trajectory_objective(model, cost, vec2(0, 0), assumed, H);
    const auto stat_objective = make_stationary_objective(model, cost, assumed, H);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
      Vec z(H);
      for (int k = 0; k < H; ++k) z(k) = dist(gen);
      worst = std::max(worst, check_gradient(traj_objective, z, 1e-6));
      Vec zs(H + 3);
      for (int k = 0; k < H + 3; ++k) zs(k) = dist(gen);
      worst = std::max(worst, check_gradient(stat_objective, zs, 1e-6));
    }
    if (worst > 1e-4) {
      pass = false;
      detail += " gradient error " + std::to_string(worst);
    }
  }
  report(7, "stationary solves match the grid oracle; gradients match finite differences", pass,
         detail);
}

void criterion_8(const RunConfig& base) {
  RunConfig config = base;
  config.system.n_agents = 10;
  config.system.time_steps = 5;
  config.system.seed = 3;
  config.sink_plots = false;

  const fs::path root = fs::temp_directory_path() / "shdempc_acceptance";
  fs::remove_all(root);

  const auto emit_run = [&](const std::string& tag, bool parallel_solve) {
    RunConfig variant = config;
    variant.system.parallel_solve = parallel_solve;
    Coordinator coordinator(variant.system);
    const RunMetrics metrics = coordinator.run();
    const fs::path dir = root / tag;
    emit_metrics(metrics, variant, dir.string());
    return dir;
  };

  const fs::path serial_a = emit_run("serial_a", false);
  const fs::path serial_b = emit_run("serial_b", false);
  const fs::path threaded_a = emit_run("threaded_a", true);
  const fs::path threaded_b = emit_run("threaded_b", true);

  bool pass = true;
  std::string detail;
  for (const char* name : {"trace.csv", "global.csv", "final.csv"}) {
    const std::string reference = slurp(serial_a / name);
    if (slurp(serial_b / name) != reference) {
      pass = false;
      detail += std::string(" serial rerun differs in ") + name;
    }
    if (slurp(threaded_a / name) != reference || slurp(threaded_b / name) != reference) {
      pass = false;
      detail += std::string(" threaded run differs in ") + name;
    }
  }
  report(8, "byte-identical CSVs across reruns, serial and intra-level parallel", pass, detail);
}

}  // namespace

int main() {
  const RunConfig config = default_config();

  criteria_1_to_5(config);
  criterion_3(config);
  criterion_6(config);
  criterion_7(config);
  criterion_8(config);

  int failures = 0;
  for (const Criterion& criterion : g_results) failures += criterion.pass ? 0 : 1;
  std::printf("%d/%zu criteria passed\n", static_cast<int>(g_results.size()) - failures,
              g_results.size());
  return failures;
}
