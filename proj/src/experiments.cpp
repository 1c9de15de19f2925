#include "shdempc/experiments.hpp"

#include <algorithm>

namespace shdempc {

namespace {

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

long median(std::vector<long> values) {
  std::sort(values.begin(), values.end());
  return values[values.size() / 2];
}

}  // namespace

StudySummary plate_study(const RunConfig& config) {
  config.validate();
  StudySummary summary;
  for (std::uint64_t seed : config.seeds) {
    SystemConfig system = config.system;
    system.seed = seed;
    if (system.time_steps == SystemConfig{}.time_steps) system.time_steps = kStudyTimeSteps;

    Coordinator coordinator(system);
    StudyRun run;
    run.seed = seed;
    run.metrics = coordinator.run();
    run.settle_sample = run.metrics.settle_sample;
    run.final_cost = run.metrics.samples.back().global_cost;
    run.mutations = run.metrics.total_mutations;
    run.last_mutation_time_step = last_mutation_time_step(run.metrics);
    for (const FinalRow& row : run.metrics.finals) run.final_positions.push_back(row.position);
    summary.runs.push_back(std::move(run));
  }
  return summary;
}

std::vector<ScalingCell> scaling_comparison(const RunConfig& config, const std::vector<int>& sizes,
                                            const std::vector<Variant>& variants,
                                            const std::vector<std::uint64_t>& seeds) {
  config.validate();
  if (sizes.empty()) throw ConfigError("scaling: need at least one system size");
  if (seeds.empty()) throw ConfigError("scaling: need at least one seed");

  std::vector<ScalingCell> table;
  for (Variant variant : variants) {
    for (int n : sizes) {
      ScalingCell cell;
      cell.n_agents = n;
      cell.variant = variant;
      for (std::uint64_t seed : seeds) {
        SystemConfig system = config.system;
        system.n_agents = n;
        system.seed = seed;
        system.variant = variant;
        if (variant == Variant::parallel) system.num_levels = 1;
        if (system.time_steps == SystemConfig{}.time_steps) system.time_steps = kScalingTimeSteps;

        Coordinator coordinator(system);
        const RunMetrics metrics = coordinator.run();
        cell.settles.push_back(metrics.settle_sample);
      }
      cell.median_settle = median(cell.settles);
      table.push_back(std::move(cell));
    }
  }
  return table;
}

}  // namespace shdempc
