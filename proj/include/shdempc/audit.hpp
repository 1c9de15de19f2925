#pragma once

#include <string>
#include <vector>

#include "shdempc/model.hpp"

namespace shdempc {

/// Equality-residual bound the running audit holds every candidate to. The
/// solver's own tolerance is tighter, leaving headroom for the warm-start
/// shift (whose infinity-norm growth factor is bounded by the row sums of
/// the dynamics matrix).
inline constexpr double kAuditTolerance = 1e-8;

/// Re-verifies a candidate solution's constraints from the raw vectors,
/// independently of the solver that produced it: initial condition,
/// per-step dynamics, input and state boxes, terminal equality, and
/// stationarity of the terminal pair. Returns human-readable findings,
/// empty when everything holds. Box checks carry no tolerance; equality
/// residuals are compared against tol.
std::vector<std::string> audit_agent_solution(const AgentModel& model, const Trajectory& traj,
                                              const StationaryPoint& sp, const Vec& measured,
                                              double tol);

}  // namespace shdempc
