#include "shdempc/hierarchy.hpp"

#include <cmath>
#include <stdexcept>

namespace shdempc {

namespace {

// splitmix64: well-mixed 64-bit stream, one step per draw.
std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Unbiased draw from {0..bound-1} by rejection; portable across standard
// libraries, unlike std::uniform_int_distribution.
std::uint64_t bounded_draw(std::uint64_t& state, std::uint64_t bound) {
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  std::uint64_t v;
  do {
    v = splitmix64(state);
  } while (v >= limit);
  return v % bound;
}

}  // namespace

HierarchyState make_hierarchy_state(int num_levels, std::uint64_t global_seed, AgentId agent) {
  if (num_levels < 1) throw std::invalid_argument("HierarchyState: num_levels must be >= 1");
  HierarchyState state;
  state.num_levels = num_levels;
  state.level = 1;
  // Decorrelate the per-agent streams by running the seed material through
  // the mixer twice.
  std::uint64_t s = global_seed;
  (void)splitmix64(s);
  s ^= 0x632BE59BD9B4E019ULL * (static_cast<std::uint64_t>(agent) + 1);
  (void)splitmix64(s);
  state.rng_state = s;
  return state;
}

int mutate(HierarchyState& state) {
  if (state.num_levels < 1) throw std::invalid_argument("mutate: num_levels must be >= 1");
  state.level = 1 + static_cast<int>(
                        bounded_draw(state.rng_state, static_cast<std::uint64_t>(state.num_levels)));
  ++state.mutations;
  return state.level;
}

int draw_sign(HierarchyState& state) {
  return bounded_draw(state.rng_state, 2) == 0 ? 1 : -1;
}

bool detect_conflict(const CostReport& report, Phase phase, double eps) {
  if (!std::isfinite(report.naive_stage) || !std::isfinite(report.informed_stage) ||
      !std::isfinite(report.naive_horizon) || !std::isfinite(report.informed_horizon))
    throw std::invalid_argument("detect_conflict: non-finite cost report");
  if (phase == Phase::stationary) return report.informed_stage > report.naive_stage + eps;
  return report.informed_horizon > report.naive_horizon + eps;
}

}  // namespace shdempc
