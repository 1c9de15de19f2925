#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "shdempc/model.hpp"
#include "shdempc/objective.hpp"

namespace shdempc {

struct SolverConfig {
  int max_outer = 8;             ///< augmented-Lagrangian rounds
  int max_inner = 200;           ///< projected-gradient steps per round
  double step_init = 1.0;        ///< first backtracking trial step
  double step_shrink = 0.5;
  double armijo_c = 1e-4;
  double tol_grad = 1e-9;        ///< projected-gradient norm
  double tol_eq = 1e-9;          ///< equality residual (infinity norm)
  double penalty_init = 1.0;
  double penalty_growth = 10.0;
  double mu_smooth = 1e-3;       ///< cost smoothing width

  /// A feasible warm start is only abandoned for a point at least this far
  /// away (infinity norm over the decision variables). Hair-width
  /// re-adjustments otherwise ripple through the exchange forever: each is
  /// a genuine improvement for its owner but perturbs the neighbors'
  /// informed values at the same scale, so the negotiation never freezes.
  double min_accept_step = 1e-4;

  /// ... and it must also be worth the re-coordination: the smoothed
  /// objective has to improve by more than this. While the plant is still
  /// gliding toward a frozen target, re-planning from each new state moves
  /// the whole input sequence for a gain that is only quadratic in the
  /// remaining distance; refusing those keeps the plans frozen, so the
  /// terminal constraint delivers the plant in H steps and the exchange
  /// goes fully quiet.
  double min_accept_gain = 1e-6;

  /// Minimum decrease a coordinate probe must deliver before the solver
  /// leaves a stationary point. The probe exists to step off macroscopic
  /// flat saddles (every plate aligned is one); marginal cross-basin hops
  /// would only trade one local arrangement for an equally fragile one.
  double probe_min_gain = 5e-3;

  void validate() const;
};

struct SolveResult {
  Trajectory trajectory;
  StationaryPoint stationary;    ///< negotiated pair (stationary problem); target otherwise
  double objective = 0.0;        ///< smoothed cost at the returned point
  double objective_exact = 0.0;  ///< exact piecewise cost at the returned point
  double eq_residual = 0.0;
  bool converged = false;
  int inner_iterations = 0;
};

/// Single-shooting local solver for the per-agent trajectory and
/// stationary-negotiation problems. Decision variables are the input
/// sequence (plus the stationary pair for the stationary problem); the
/// dynamics and initial condition hold exactly by construction, input and
/// stationary boxes by projection, and the terminal/stationarity equalities
/// through an augmented Lagrangian. Inner iterations are spectral projected
/// gradient steps with monotone Armijo backtracking, plus a deterministic
/// coordinate probe that can step off flat saddle points (the aligned-plates
/// start is one) where the gradient vanishes without being a minimum.
///
/// Instances carry mutable workspace: one instance per agent, no sharing
/// between threads while a solve is running.
class LocalSolver {
 public:
  struct Workspace;

  LocalSolver(AgentModel model, CooperativeStageCost cost, SolverConfig config);
  ~LocalSolver();
  LocalSolver(LocalSolver&&) noexcept;
  LocalSolver& operator=(LocalSolver&&) noexcept;

  /// Minimize the horizon sum of the smoothed cooperative stage cost over
  /// the input sequence, subject to the terminal equality x^H = target.x_s.
  /// Accepts the warm start as the result whenever no strictly better
  /// feasible point is found, so a feasible warm start can never get worse
  /// (in both the smoothed and the exact cost).
  SolveResult solve_trajectory(const Vec& x0, const StationaryPoint& target,
                               const AssumedNeighborData& assumed,
                               const std::vector<Vec>& warm_inputs);

  /// Minimize the smoothed cooperative cost of the stationary pair over
  /// (inputs, x_s, u_s), subject to x_s = f(x_s, u_s) and x^H = x_s. The
  /// input trajectory makes the negotiated pair reachable from x0.
  SolveResult solve_stationary(const Vec& x0, const AssumedNeighborData& assumed,
                               const std::vector<Vec>& warm_inputs,
                               const StationaryPoint& warm_sp);

  const SolverConfig& config() const { return config_; }
  const AgentModel& model() const { return model_; }
  const CooperativeStageCost& cost() const { return cost_; }

  /// Which sign the stationarity-escape probe tries first (+1 by default).
  /// At exactly symmetric points the first improving probe wins, so this is
  /// the tie-break; everywhere else it has no effect on the optimum.
  void set_tie_break_sign(int sign) { tie_break_sign_ = sign >= 0 ? 1 : -1; }

 private:
  struct ProblemView;
  struct InnerResult;

  InnerResult minimize(const ProblemView& problem, Vec z, const Vec& lambda, double rho);
  bool probe_descent(const ProblemView& problem, const Vec& lambda, double rho, Vec& z,
                     double& fval) const;
  SolveResult drive(const ProblemView& problem, const Vec& warm);

  AgentModel model_;
  CooperativeStageCost cost_;
  SolverConfig config_;
  int tie_break_sign_ = 1;

  // reusable evaluation buffers
  std::unique_ptr<Workspace> ws_;
  Vec grad_, grad_try_, z_try_, gp_;
};

/// Smoothed horizon objective of the trajectory problem as a plain
/// functor over the stacked input vector; gradient optional. The referenced
/// arguments must outlive the functor.
std::function<double(const Vec&, Vec*)> make_trajectory_objective(
    const AgentModel& model, const CooperativeStageCost& cost, Vec x0,
    const AssumedNeighborData& assumed, int horizon);

/// Smoothed stationary objective over the stacked (inputs, x_s, u_s) vector.
std::function<double(const Vec&, Vec*)> make_stationary_objective(
    const AgentModel& model, const CooperativeStageCost& cost,
    const AssumedNeighborData& assumed, int horizon);

/// Largest relative disagreement between the analytic gradient of f and a
/// central finite difference with half-width h, over all coordinates of z.
double check_gradient(const std::function<double(const Vec&, Vec*)>& f, const Vec& z, double h);

}  // namespace shdempc
