#pragma once

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <vector>

#include "shdempc/audit.hpp"
#include "shdempc/metrics.hpp"
#include "shdempc/netsim.hpp"
#include "shdempc/solver.hpp"
#include "shdempc/topology.hpp"

namespace shdempc {

class InitializationError : public std::runtime_error {
 public:
  InitializationError(AgentId agent, const std::string& why)
      : std::runtime_error("agent " + std::to_string(agent) + ": " + why), agent_(agent) {}
  AgentId agent() const { return agent_; }

 private:
  AgentId agent_;
};

/// Experiment label: the parallel baseline is the same coordination scheme
/// with a single hierarchy level (everyone solves simultaneously; conflicts
/// still roll candidates back, and the level redraw is a no-op).
enum class Variant { hierarchy, parallel };

enum class HierarchyInit { all_one, universal, explicit_levels };

enum class SamplingMode { per_level, per_iteration };

/// Which cost each agent optimizes. The plate benchmark's stage cost already
/// shares its overlap terms with the direct neighbors, so its coupling is
/// `local` and the influence closure collapses to the direct edges.
/// `cooperative` wires the neighborhood-cooperative sum (own local cost plus
/// the local costs of all downstream neighbors) with the two-hop closure.
enum class CouplingMode { local, cooperative };

struct PlateParams {
  double mass = 1.0;    // kg
  double spring = 1.0;  // N/m
  double damper = 1.0;  // kg/s
  double side = 0.25;   // m
};

struct SystemConfig {
  int n_agents = 10;
  Variant variant = Variant::hierarchy;
  int num_levels = 2;   ///< N_q
  int iterations = 5;   ///< N_p, per negotiation phase
  int horizon = 5;      ///< H
  double dt = 1.0;      ///< sampling period, s
  int time_steps = 10;  ///< T
  double u_bound = 0.25;
  PlateParams plate;
  std::uint64_t seed = 1;
  CouplingMode coupling = CouplingMode::local;
  HierarchyInit hierarchy_init = HierarchyInit::all_one;
  std::vector<int> explicit_levels;
  SamplingMode sampling_mode = SamplingMode::per_level;
  double settle_tol = 1e-6;
  bool parallel_solve = false;
  SolverConfig solver;

  void validate() const;
};

/// The accepted (conflict-free) trajectory and stationary pair: the only
/// solution an agent will actually execute. The trajectory always starts at
/// the agent's measured state and ends at the stationary state.
struct CandidateSolution {
  Trajectory trajectory;
  StationaryPoint stationary;
};

struct AgentRuntime {
  AgentId id = 0;
  AgentModel model;
  CostNeighborhood nbhd;
  CooperativeStageCost cost;
  HierarchyState hierarchy;
  CandidateSolution candidate;
  AssumedNeighborData assumed;
  Vec measured_state;
  std::unique_ptr<LocalSolver> solver;

  // per-iteration scratch
  CandidateSolution optimum;
  AssumedNeighborData assumed_at_solve;
  bool solve_failed = false;
  CostReport report;
};

/// Runs the coordination scheme over the plate chain: per time-step, a
/// stationary-negotiation phase and a trajectory-negotiation phase, each
/// N_p iterations of N_q sequential hierarchy levels, with conflict-driven
/// level mutation, candidate acceptance or rollback, and a warm-start shift
/// when the first input is applied to the plant.
class Coordinator {
 public:
  explicit Coordinator(SystemConfig config);

  void initialize();

  /// One full negotiation phase (N_p iterations). time_step labels the
  /// emitted trace rows and samples.
  void negotiate(Phase phase, int time_step);

  /// Applies u^0, advances the plant, shifts the input sequence (last slot
  /// filled with the stationary input) and re-rolls the trajectory from the
  /// new measured state. Returns the applied input.
  Vec apply_and_shift(AgentRuntime& agent);

  /// The whole run: T time-steps of measure, communicate, negotiate both
  /// phases, apply and shift.
  RunMetrics run();

  const std::vector<AgentRuntime>& agents() const { return agents_; }
  const SystemConfig& config() const { return cfg_; }
  const RunMetrics& metrics() const { return metrics_; }

  /// Exact global horizon cost of the current candidates, every agent
  /// evaluated against its neighbors' true candidate values.
  double global_candidate_cost() const;

 private:
  void protocol_round();
  void level_slot(Phase phase, int q);
  void resolve_conflicts(Phase phase, int time_step, int iteration);
  void refine_candidate_trajectory(AgentRuntime& agent);
  void ingest_inbox(Phase phase);
  void run_audit(const std::string& where);
  void emit_sample(int time_step, Phase phase, int iteration, int level_slot);
  void record_targets();
  std::uint64_t total_mutations() const;
  double mean_target() const;

  SystemConfig cfg_;
  std::vector<AgentRuntime> agents_;
  std::unique_ptr<MessageBus> bus_;
  RunMetrics metrics_;
  bool initialized_ = false;
  long sample_counter_ = 0;
};

}  // namespace shdempc
