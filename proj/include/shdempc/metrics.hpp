#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "shdempc/hierarchy.hpp"
#include "shdempc/netsim.hpp"

namespace shdempc {

/// One per-agent record per negotiation iteration. v_hat / v_breve carry
/// the phase-appropriate pair: stage values during stationary negotiation,
/// horizon values during trajectory negotiation (exact piecewise cost).
struct TraceRow {
  int time_step = 0;
  Phase phase = Phase::stationary;
  int iteration = 0;  // p, 1-based
  AgentId agent = 0;
  int level = 0;       // level held while solving, before any mutation
  bool conflict = false;
  double v_hat = 0.0;
  double v_breve = 0.0;
};

/// One row of the global-cost series. V is the exact global horizon cost of
/// the candidate solutions every agent would execute at that moment.
struct GlobalSample {
  long sample = 0;
  int time_step = 0;
  Phase phase = Phase::stationary;
  int iteration = 0;   // p, 1-based (0 for the initialization record)
  int level_slot = 0;  // q under per-level sampling, 0 otherwise
  double global_cost = 0.0;
  std::uint64_t cumulative_mutations = 0;
  double mean_target = 0.0;
};

struct FinalRow {
  AgentId agent = 0;
  double position = 0.0;
  int level = 0;
};

struct RunMetrics {
  std::vector<TraceRow> trace;
  std::vector<GlobalSample> samples;
  std::vector<FinalRow> finals;

  /// Candidate stationary states per agent, recorded at initialization
  /// (index 0) and after every time-step.
  std::vector<std::vector<Vec>> target_history;

  BusStats bus;
  std::vector<std::string> audit_findings;
  std::vector<std::string> warnings;
  std::uint64_t total_mutations = 0;
  int solver_failures = 0;

  /// First sample index after which the global-cost series changes by less
  /// than the settle tolerance for the remainder of the run; 0 when the
  /// series never moves that much.
  long settle_sample = 0;
};

/// Settle index of a value series under the given tolerance on successive
/// changes.
long settle_index(const std::vector<double>& series, double tol);

}  // namespace shdempc
