#include "shdempc/audit.hpp"

#include <cmath>
#include <cstdio>

namespace shdempc {

namespace {

bool in_box(const Vec& v, const Vec& lo, const Vec& hi) {
  return (v.array() >= lo.array()).all() && (v.array() <= hi.array()).all();
}

std::string fmt(double value) {
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "%.3e", value);
  return buffer;
}

}  // namespace

std::vector<std::string> audit_agent_solution(const AgentModel& model, const Trajectory& traj,
                                              const StationaryPoint& sp, const Vec& measured,
                                              double tol) {
  std::vector<std::string> findings;
  const auto flag = [&findings](const std::string& what) { findings.push_back(what); };

  if (traj.states.size() != traj.inputs.size() + 1) {
    flag("trajectory shape: " + std::to_string(traj.states.size()) + " states for " +
         std::to_string(traj.inputs.size()) + " inputs");
    return findings;
  }
  if (traj.inputs.empty()) {
    flag("empty trajectory");
    return findings;
  }

  const double init_err = (traj.states.front() - measured).lpNorm<Eigen::Infinity>();
  if (init_err > tol) flag("initial condition off by " + fmt(init_err));

  const double dyn_err = max_dynamics_residual(model, traj);
  if (dyn_err > tol) flag("dynamics residual " + fmt(dyn_err));

  for (std::size_t k = 0; k < traj.inputs.size(); ++k) {
    if (!in_box(traj.inputs[k], model.u_lo, model.u_hi))
      flag("input bound violated at stage " + std::to_string(k));
  }
  for (std::size_t k = 0; k < traj.states.size(); ++k) {
    if (!in_box(traj.states[k], model.x_lo, model.x_hi))
      flag("state bound violated at stage " + std::to_string(k));
  }

  const double terminal_err = (traj.states.back() - sp.x_s).lpNorm<Eigen::Infinity>();
  if (terminal_err > tol) flag("terminal equality residual " + fmt(terminal_err));

  const double stat_err = (sp.x_s - step(model, sp.x_s, sp.u_s)).lpNorm<Eigen::Infinity>();
  if (stat_err > tol) flag("stationarity residual " + fmt(stat_err));

  if (!in_box(sp.x_s, model.x_lo, model.x_hi)) flag("stationary state outside its box");
  if (!in_box(sp.u_s, model.u_lo, model.u_hi)) flag("stationary input outside its box");

  return findings;
}

}  // namespace shdempc
