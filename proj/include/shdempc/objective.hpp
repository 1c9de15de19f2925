#pragma once

#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "shdempc/model.hpp"

namespace shdempc {

using AgentId = int;

/// Thrown when a cooperative cost evaluation needs data for a neighbor that
/// has not been communicated yet. Carries the absent agent's id.
class IncompleteAssumptionError : public std::runtime_error {
 public:
  IncompleteAssumptionError(AgentId agent, const std::string& what_missing)
      : std::runtime_error("missing assumed " + what_missing + " for agent " +
                           std::to_string(agent)),
        agent_(agent) {}
  AgentId agent() const { return agent_; }

 private:
  AgentId agent_;
};

/// Cost-coupling neighbor sets of one agent. `upstream` holds the agents
/// whose variables enter this agent's local cost; `cost_upstream` is the
/// closure upstream + downstream + (upstream of each downstream neighbor),
/// i.e. every agent whose variables enter the cooperative cost.
/// `downstream_upstream` records, for each downstream neighbor j, the set
/// upstream_j needed to evaluate that neighbor's local cost.
struct CostNeighborhood {
  AgentId self_id = 0;
  std::vector<AgentId> upstream;
  std::vector<AgentId> downstream;
  std::vector<AgentId> cost_upstream;
  std::vector<AgentId> cost_downstream;
  std::vector<std::pair<AgentId, std::vector<AgentId>>> downstream_upstream;
};

/// What one agent currently assumes about a single neighbor.
struct NeighborSolution {
  std::optional<Trajectory> trajectory;
  std::optional<StationaryPoint> stationary;
};

/// Assumed trajectories and stationary pairs for every cost-upstream
/// neighbor. Slots exist exactly for the ids the container was built with.
class AssumedNeighborData {
 public:
  AssumedNeighborData() = default;
  explicit AssumedNeighborData(std::span<const AgentId> neighbor_ids);

  void set_trajectory(AgentId j, Trajectory traj);
  void set_stationary(AgentId j, StationaryPoint sp);

  bool covers(AgentId j) const;
  const Trajectory& trajectory_of(AgentId j) const;
  const StationaryPoint& stationary_of(AgentId j) const;

  std::size_t size() const { return slots_.size(); }
  const std::vector<std::pair<AgentId, NeighborSolution>>& slots() const { return slots_; }

 private:
  NeighborSolution& slot(AgentId j);
  const NeighborSolution* find(AgentId j) const;

  // sorted by agent id
  std::vector<std::pair<AgentId, NeighborSolution>> slots_;
};

/// Naive vs informed cost values (stage and horizon) for one agent at one
/// iteration. Naive values use the assumptions held when the agent solved;
/// informed values use the freshest communicated optima.
struct CostReport {
  double naive_stage = 0.0;
  double informed_stage = 0.0;
  double naive_horizon = 0.0;
  double informed_horizon = 0.0;
};

struct PlateCostParams {
  double side = 0.25;       ///< plate side length L
  double mu_smooth = 1e-3;  ///< smoothing width for the solver surrogate
};

enum class CostKind { exact, smoothed };

/// Which instant of an assumption a cooperative evaluation reads: a horizon
/// stage k, or the stationary pair.
struct Instant {
  static Instant stage(int k) { return Instant{false, k}; }
  static Instant stationary() { return Instant{true, 0}; }
  bool is_stationary = false;
  int k = 0;
};

/// Piecewise overlap area between two unit-depth plates of side L at
/// vertical positions xi and xj: 0 when |xi-xj| >= L, else L (L - |xi-xj|).
double overlap_area(double xi, double xj, double L);

/// Smooth surrogate of overlap_area, differentiable everywhere in xi:
///   L * mu * softplus((L - s) / mu),  s = sqrt((xi-xj)^2 + (mu/2)^2).
/// Converges pointwise to the piecewise area as mu -> 0.
double smoothed_overlap_area(double xi, double xj, double L, double mu);

/// Partial derivative of smoothed_overlap_area with respect to xi.
double smoothed_overlap_area_dxi(double xi, double xj, double L, double mu);

/// Local plate stage cost: mean overlap with the upstream neighbors plus
/// the input penalty u'u. With no upstream neighbors the mean degenerates
/// to zero and only the input penalty remains.
double local_stage_cost(const Vec& x, const Vec& u,
                        const std::map<AgentId, double>& neighbor_positions,
                        const PlateCostParams& params, CostKind kind);

/// Neighborhood-cooperative stage cost of one agent: its local cost plus the
/// local costs of all downstream neighbors, with every symbol resolved from
/// the agent's own (x, u) when the required agent is the agent itself and
/// from the assumed data otherwise.
class CooperativeStageCost {
 public:
  CooperativeStageCost() = default;
  CooperativeStageCost(CostNeighborhood nbhd, PlateCostParams params);

  double value(Eigen::Ref<const Vec> x, Eigen::Ref<const Vec> u,
               const AssumedNeighborData& assumed, Instant instant, CostKind kind) const;

  /// Smoothed value plus gradient with respect to the agent's own (x, u).
  double value_and_gradient(Eigen::Ref<const Vec> x, Eigen::Ref<const Vec> u,
                            const AssumedNeighborData& assumed, Instant instant, Vec& grad_x,
                            Vec& grad_u) const;

  const CostNeighborhood& neighborhood() const { return nbhd_; }
  const PlateCostParams& params() const { return params_; }

 private:
  double neighbor_position(AgentId j, const AssumedNeighborData& assumed, Instant instant) const;
  double neighbor_input_sq(AgentId j, const AssumedNeighborData& assumed, Instant instant) const;

  CostNeighborhood nbhd_;
  PlateCostParams params_;
};

/// Free-function form of the cooperative stage cost.
double cooperative_stage_cost(const CostNeighborhood& nbhd, const Vec& x, const Vec& u,
                              const AssumedNeighborData& assumed, Instant instant,
                              const PlateCostParams& params, CostKind kind);

/// Eq.-style naive/informed report for a freshly computed optimum. Stage
/// values evaluate the stationary pair, horizon values sum stages
/// k = 0..H-1 of the trajectory. All values use the exact piecewise cost.
CostReport evaluate_cost_report(const CooperativeStageCost& cost, const Trajectory& own_traj,
                                const StationaryPoint& own_sp,
                                const AssumedNeighborData& assumed_before,
                                const AssumedNeighborData& assumed_after, int horizon);

/// Sum of per-agent informed horizon values.
double global_cost(std::span<const double> informed_horizon_values);

}  // namespace shdempc
