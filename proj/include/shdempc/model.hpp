#pragma once

#include <Eigen/Dense>
#include <vector>

namespace shdempc {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Absolute infinity-norm tolerance for dynamic consistency and
/// stationarity checks. Plant magnitudes in the benchmark are O(0.25),
/// so an absolute tolerance is safe.
inline constexpr double kTolDyn = 1e-8;

/// Linear discrete-time agent dynamics x+ = A x + B u with componentwise
/// box bounds on state and input. Bounds may be +/-infinity.
struct AgentModel {
  int n = 0;  ///< state dimension
  int m = 0;  ///< input dimension
  Mat A;
  Mat B;
  Vec x_lo, x_hi;
  Vec u_lo, u_hi;

  /// Model with the given dynamics and no finite bounds.
  static AgentModel unbounded(Mat A, Mat B);

  /// Throws std::invalid_argument on dimension mismatch, non-finite
  /// dynamics matrices, or inverted bounds.
  void validate() const;

  bool has_finite_state_bounds() const;
};

/// A horizon of states (H+1 entries) and inputs (H entries).
struct Trajectory {
  std::vector<Vec> states;
  std::vector<Vec> inputs;
  bool dynamically_consistent = false;

  int horizon() const { return static_cast<int>(inputs.size()); }
};

/// A fixed point of the dynamics: x_s = step(x_s, u_s).
struct StationaryPoint {
  Vec x_s;
  Vec u_s;
};

/// One step of the dynamics. No bound clipping: bounds are solver
/// constraints, not part of the plant map.
Vec step(const AgentModel& model, const Vec& x, const Vec& u);

/// Forward simulation from x0 under the given input sequence.
Trajectory rollout(const AgentModel& model, const Vec& x0, const std::vector<Vec>& inputs);

/// True iff ||x_s - step(x_s, u_s)||_inf <= tol.
bool is_stationary(const AgentModel& model, const StationaryPoint& p, double tol);

/// Largest per-step dynamics residual ||states[k+1] - step(states[k], inputs[k])||_inf.
double max_dynamics_residual(const AgentModel& model, const Trajectory& traj);

/// Exact zero-order-hold discretization of the continuous spring-mass-damper
/// plate dynamics
///   d/dt [x v] = [[0, 1], [-k/m, -c/m]] [x v] + [0, 1/m] u
/// over the sampling period dt: A = exp(A_c dt), B = A_c^{-1} (A - I) B_c.
/// State bounds are left unbounded; input bounds are filled by the caller.
/// Throws std::invalid_argument for k_spring <= 0 (A_c singular, the closed
/// form above does not apply), m_mass <= 0, or dt <= 0.
AgentModel discretize_plate(double m_mass, double k_spring, double c_damp, double dt);

}  // namespace shdempc
