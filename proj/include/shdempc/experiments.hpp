#pragma once

#include <functional>
#include <optional>

#include "shdempc/config.hpp"
#include "shdempc/metrics.hpp"

namespace shdempc {

/// Per-seed outcome of the ten-plate study.
struct StudyRun {
  std::uint64_t seed = 0;
  long settle_sample = 0;
  double final_cost = 0.0;
  std::uint64_t mutations = 0;
  int last_mutation_time_step = 0;  // 0 when nothing ever mutated
  std::vector<double> final_positions;
  RunMetrics metrics;
};

struct StudySummary {
  std::vector<StudyRun> runs;
};

/// Seeded multi-run reproduction of the plate benchmark: one full run per
/// seed in config.seeds. Defaults (applied when the caller keeps the stock
/// configuration): 20 time-steps, enough for every default seed's hierarchy
/// to go quiet well before the end.
StudySummary plate_study(const RunConfig& config);

/// Time-steps used by plate_study / scaling_comparison when the caller's
/// configuration still carries the generic default.
inline constexpr int kStudyTimeSteps = 20;
inline constexpr int kScalingTimeSteps = 30;

struct ScalingCell {
  int n_agents = 0;
  Variant variant = Variant::hierarchy;
  std::vector<long> settles;  // one per seed
  long median_settle = 0;
};

/// Iterations-to-settle across system sizes for the parallel baseline
/// (N_q = 1) and the hierarchy scheme. The parallel baseline still draws
/// its tie-break orientations from the seed, so both variants honor the
/// seed list.
std::vector<ScalingCell> scaling_comparison(const RunConfig& config, const std::vector<int>& sizes,
                                            const std::vector<Variant>& variants,
                                            const std::vector<std::uint64_t>& seeds);

}  // namespace shdempc
