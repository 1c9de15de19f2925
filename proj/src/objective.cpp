#include "shdempc/objective.hpp"

#include <algorithm>
#include <cmath>

namespace shdempc {

namespace {

constexpr int kPositionIndex = 0;

double softplus(double t) {
  // Stable in both tails.
  return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
}

double logistic(double t) {
  return t > 0.0 ? 1.0 / (1.0 + std::exp(-t)) : std::exp(t) / (1.0 + std::exp(t));
}

}  // namespace

AssumedNeighborData::AssumedNeighborData(std::span<const AgentId> neighbor_ids) {
  slots_.reserve(neighbor_ids.size());
  for (AgentId j : neighbor_ids) slots_.emplace_back(j, NeighborSolution{});
  std::sort(slots_.begin(), slots_.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
}

NeighborSolution& AssumedNeighborData::slot(AgentId j) {
  auto it = std::lower_bound(slots_.begin(), slots_.end(), j,
                             [](const auto& s, AgentId id) { return s.first < id; });
  if (it == slots_.end() || it->first != j)
    throw std::invalid_argument("AssumedNeighborData: agent " + std::to_string(j) +
                                " is not a cost-upstream neighbor");
  return it->second;
}

const NeighborSolution* AssumedNeighborData::find(AgentId j) const {
  auto it = std::lower_bound(slots_.begin(), slots_.end(), j,
                             [](const auto& s, AgentId id) { return s.first < id; });
  if (it == slots_.end() || it->first != j) return nullptr;
  return &it->second;
}

void AssumedNeighborData::set_trajectory(AgentId j, Trajectory traj) {
  slot(j).trajectory = std::move(traj);
}

void AssumedNeighborData::set_stationary(AgentId j, StationaryPoint sp) {
  slot(j).stationary = std::move(sp);
}

bool AssumedNeighborData::covers(AgentId j) const { return find(j) != nullptr; }

const Trajectory& AssumedNeighborData::trajectory_of(AgentId j) const {
  const NeighborSolution* s = find(j);
  if (s == nullptr || !s->trajectory.has_value()) throw IncompleteAssumptionError(j, "trajectory");
  return *s->trajectory;
}

const StationaryPoint& AssumedNeighborData::stationary_of(AgentId j) const {
  const NeighborSolution* s = find(j);
  if (s == nullptr || !s->stationary.has_value())
    throw IncompleteAssumptionError(j, "stationary pair");
  return *s->stationary;
}

double overlap_area(double xi, double xj, double L) {
  if (L <= 0.0) throw std::invalid_argument("overlap_area: L must be positive");
  const double d = std::abs(xi - xj);
  return d >= L ? 0.0 : L * (L - d);
}

double smoothed_overlap_area(double xi, double xj, double L, double mu) {
  if (mu <= 0.0) throw std::invalid_argument("smoothed_overlap_area: mu must be positive");
  const double delta = xi - xj;
  const double nu = 0.5 * mu;
  const double s = std::sqrt(delta * delta + nu * nu);
  return L * mu * softplus((L - s) / mu);
}

double smoothed_overlap_area_dxi(double xi, double xj, double L, double mu) {
  const double delta = xi - xj;
  const double nu = 0.5 * mu;
  const double s = std::sqrt(delta * delta + nu * nu);
  return -L * logistic((L - s) / mu) * (delta / s);
}

double local_stage_cost(const Vec& x, const Vec& u,
                        const std::map<AgentId, double>& neighbor_positions,
                        const PlateCostParams& params, CostKind kind) {
  double overlap_sum = 0.0;
  for (const auto& [j, pos] : neighbor_positions) {
    (void)j;
    overlap_sum += kind == CostKind::exact
                       ? overlap_area(x(kPositionIndex), pos, params.side)
                       : smoothed_overlap_area(x(kPositionIndex), pos, params.side,
                                               params.mu_smooth);
  }
  const double mean = neighbor_positions.empty()
                          ? 0.0
                          : overlap_sum / static_cast<double>(neighbor_positions.size());
  return mean + u.squaredNorm();
}

CooperativeStageCost::CooperativeStageCost(CostNeighborhood nbhd, PlateCostParams params)
    : nbhd_(std::move(nbhd)), params_(params) {}

double CooperativeStageCost::neighbor_position(AgentId j, const AssumedNeighborData& assumed,
                                               Instant instant) const {
  if (instant.is_stationary) return assumed.stationary_of(j).x_s(kPositionIndex);
  const Trajectory& traj = assumed.trajectory_of(j);
  if (instant.k < 0 || instant.k >= static_cast<int>(traj.states.size()))
    throw std::invalid_argument("cooperative cost: stage index " + std::to_string(instant.k) +
                                " outside assumed trajectory of agent " + std::to_string(j));
  return traj.states[instant.k](kPositionIndex);
}

double CooperativeStageCost::neighbor_input_sq(AgentId j, const AssumedNeighborData& assumed,
                                               Instant instant) const {
  if (instant.is_stationary) return assumed.stationary_of(j).u_s.squaredNorm();
  const Trajectory& traj = assumed.trajectory_of(j);
  if (instant.k < 0 || instant.k >= static_cast<int>(traj.inputs.size()))
    throw std::invalid_argument("cooperative cost: stage index " + std::to_string(instant.k) +
                                " outside assumed inputs of agent " + std::to_string(j));
  return traj.inputs[instant.k].squaredNorm();
}

double CooperativeStageCost::value(Eigen::Ref<const Vec> x, Eigen::Ref<const Vec> u,
                                   const AssumedNeighborData& assumed, Instant instant,
                                   CostKind kind) const {
  const double own_pos = x(kPositionIndex);
  const double L = params_.side;
  const double mu = params_.mu_smooth;
  const auto pair_area = [&](double a, double b) {
    return kind == CostKind::exact ? overlap_area(a, b, L) : smoothed_overlap_area(a, b, L, mu);
  };

  // Own local cost.
  double total = u.squaredNorm();
  if (!nbhd_.upstream.empty()) {
    double sum = 0.0;
    for (AgentId j : nbhd_.upstream)
      sum += pair_area(own_pos, neighbor_position(j, assumed, instant));
    total += sum / static_cast<double>(nbhd_.upstream.size());
  }

  // Local costs of the downstream neighbors, with our own position standing
  // in wherever they reference this agent.
  for (const auto& [j, j_upstream] : nbhd_.downstream_upstream) {
    const double j_pos = neighbor_position(j, assumed, instant);
    double sum = 0.0;
    for (AgentId k : j_upstream) {
      const double k_pos = k == nbhd_.self_id ? own_pos : neighbor_position(k, assumed, instant);
      sum += pair_area(j_pos, k_pos);
    }
    const double mean = j_upstream.empty() ? 0.0 : sum / static_cast<double>(j_upstream.size());
    total += mean + neighbor_input_sq(j, assumed, instant);
  }
  return total;
}

double CooperativeStageCost::value_and_gradient(Eigen::Ref<const Vec> x, Eigen::Ref<const Vec> u,
                                                const AssumedNeighborData& assumed,
                                                Instant instant, Vec& grad_x,
                                                Vec& grad_u) const {
  const double own_pos = x(kPositionIndex);
  const double L = params_.side;
  const double mu = params_.mu_smooth;

  grad_x.resize(x.size());
  grad_x.setZero();
  grad_u.resize(u.size());
  grad_u.noalias() = 2.0 * u;

  double total = u.squaredNorm();
  if (!nbhd_.upstream.empty()) {
    const double inv = 1.0 / static_cast<double>(nbhd_.upstream.size());
    double sum = 0.0;
    double dsum = 0.0;
    for (AgentId j : nbhd_.upstream) {
      const double j_pos = neighbor_position(j, assumed, instant);
      sum += smoothed_overlap_area(own_pos, j_pos, L, mu);
      dsum += smoothed_overlap_area_dxi(own_pos, j_pos, L, mu);
    }
    total += sum * inv;
    grad_x(kPositionIndex) += dsum * inv;
  }

  for (const auto& [j, j_upstream] : nbhd_.downstream_upstream) {
    const double j_pos = neighbor_position(j, assumed, instant);
    const double inv = j_upstream.empty() ? 0.0 : 1.0 / static_cast<double>(j_upstream.size());
    double sum = 0.0;
    for (AgentId k : j_upstream) {
      if (k == nbhd_.self_id) {
        sum += smoothed_overlap_area(j_pos, own_pos, L, mu);
        // d/d(own) of area(j_pos, own) is minus the xi-derivative.
        grad_x(kPositionIndex) -= smoothed_overlap_area_dxi(j_pos, own_pos, L, mu) * inv;
      } else {
        sum += smoothed_overlap_area(j_pos, neighbor_position(k, assumed, instant), L, mu);
      }
    }
    total += sum * inv + neighbor_input_sq(j, assumed, instant);
  }
  return total;
}

double cooperative_stage_cost(const CostNeighborhood& nbhd, const Vec& x, const Vec& u,
                              const AssumedNeighborData& assumed, Instant instant,
                              const PlateCostParams& params, CostKind kind) {
  return CooperativeStageCost(nbhd, params).value(x, u, assumed, instant, kind);
}

CostReport evaluate_cost_report(const CooperativeStageCost& cost, const Trajectory& own_traj,
                                const StationaryPoint& own_sp,
                                const AssumedNeighborData& assumed_before,
                                const AssumedNeighborData& assumed_after, int horizon) {
  if (own_traj.horizon() != horizon)
    throw std::invalid_argument("evaluate_cost_report: own trajectory horizon " +
                                std::to_string(own_traj.horizon()) + " != " +
                                std::to_string(horizon));
  CostReport report;
  report.naive_stage =
      cost.value(own_sp.x_s, own_sp.u_s, assumed_before, Instant::stationary(), CostKind::exact);
  report.informed_stage =
      cost.value(own_sp.x_s, own_sp.u_s, assumed_after, Instant::stationary(), CostKind::exact);
  for (int k = 0; k < horizon; ++k) {
    report.naive_horizon += cost.value(own_traj.states[k], own_traj.inputs[k], assumed_before,
                                       Instant::stage(k), CostKind::exact);
    report.informed_horizon += cost.value(own_traj.states[k], own_traj.inputs[k], assumed_after,
                                          Instant::stage(k), CostKind::exact);
  }
  return report;
}

double global_cost(std::span<const double> informed_horizon_values) {
  double sum = 0.0;
  for (double v : informed_horizon_values) sum += v;
  return sum;
}

}  // namespace shdempc
