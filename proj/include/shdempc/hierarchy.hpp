#pragma once

#include <cstdint>

#include "shdempc/objective.hpp"

namespace shdempc {

enum class Phase { stationary, trajectory };

/// One agent's position in the social hierarchy plus its private random
/// stream. Streams are derived from (global_seed, agent_id) so results do
/// not depend on agent scheduling order.
struct HierarchyState {
  int level = 1;
  int num_levels = 1;
  long mutations = 0;
  std::uint64_t rng_state = 0;
};

HierarchyState make_hierarchy_state(int num_levels, std::uint64_t global_seed, AgentId agent);

/// Redraws the level uniformly over {1..num_levels} (the current level may
/// be re-selected) and bumps the mutation counter. Consumes only this
/// agent's stream.
int mutate(HierarchyState& state);

/// Fair +/-1 draw from the agent's stream, used to break exact ties in the
/// local solves (the aligned-plates start is symmetric, so a deterministic
/// preference would move every agent the same way). Does not count as a
/// mutation.
int draw_sign(HierarchyState& state);

/// Tolerance for conflict comparisons: floating-point noise must not
/// trigger spurious mutations.
inline double conflict_eps(double v_hat) {
  return 1e-9 * std::max(1.0, std::abs(v_hat));
}

/// Conflict per the naive/informed comparison: in the stationary phase an
/// agent is in conflict iff its informed stage value exceeds the naive one
/// beyond eps; the trajectory phase compares the horizon values.
bool detect_conflict(const CostReport& report, Phase phase, double eps);

}  // namespace shdempc
