#include "shdempc/solver.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>

namespace shdempc {

namespace {

Vec clamp(const Vec& z, const Vec& lo, const Vec& hi) {
  return z.cwiseMax(lo).cwiseMin(hi);
}

}  // namespace

// Scratch buffers shared by the fused evaluations below; owning one per
// solver instance keeps the hot loop allocation-free.
struct LocalSolver::Workspace {
  std::vector<Vec> states, gx, gu;
  Vec p, tmp_n, tmp_m;

  void prepare(int n, int m, int H, bool with_grad) {
    if (static_cast<int>(states.size()) != H + 1) states.assign(H + 1, Vec(n));
    if (with_grad && static_cast<int>(gx.size()) != H) {
      gx.assign(H, Vec(n));
      gu.assign(H, Vec(m));
    }
    p.resize(n);
    tmp_n.resize(n);
    tmp_m.resize(m);
  }
};

namespace {

using EvalWorkspace = LocalSolver::Workspace;

// Fused value/gradient of the trajectory problem's augmented Lagrangian.
// With lambda == nullptr the bare smoothed horizon objective is returned
// (no equality or state-box terms), which is what check_gradient probes.
double eval_trajectory(const AgentModel& model, const CooperativeStageCost& cost, const Vec& x0,
                       const AssumedNeighborData& assumed, int H, const Vec& z,
                       const Vec* lambda, double rho, const StationaryPoint* target, Vec* grad,
                       EvalWorkspace& ws) {
  const int m = model.m;
  ws.prepare(model.n, m, H, grad != nullptr);
  auto& states = ws.states;

  states[0] = x0;
  for (int k = 0; k < H; ++k) {
    states[k + 1].noalias() = model.A * states[k];
    states[k + 1].noalias() += model.B * z.segment(k * m, m);
  }

  const bool hinges = lambda != nullptr && model.has_finite_state_bounds();

  double value = 0.0;
  for (int k = 0; k < H; ++k) {
    if (grad != nullptr) {
      value += cost.value_and_gradient(states[k], z.segment(k * m, m), assumed,
                                       Instant::stage(k), ws.gx[k], ws.gu[k]);
    } else {
      value += cost.value(states[k], z.segment(k * m, m), assumed, Instant::stage(k),
                          CostKind::smoothed);
    }
  }

  if (lambda != nullptr) {
    ws.tmp_n = states[H] - target->x_s;
    value += lambda->dot(ws.tmp_n) + 0.5 * rho * ws.tmp_n.squaredNorm();
    if (hinges) {
      for (int k = 1; k <= H; ++k) {
        const Vec over = (states[k] - model.x_hi).cwiseMax(0.0);
        const Vec under = (model.x_lo - states[k]).cwiseMax(0.0);
        value += 0.5 * rho * (over.squaredNorm() + under.squaredNorm());
      }
    }
  }

  if (grad != nullptr) {
    grad->resize(H * m);
    if (lambda != nullptr) {
      ws.p = *lambda + rho * ws.tmp_n;
      if (hinges)
        ws.p += rho * ((states[H] - model.x_hi).cwiseMax(0.0) -
                       (model.x_lo - states[H]).cwiseMax(0.0));
    } else {
      ws.p.setZero();
    }
    for (int k = H - 1; k >= 0; --k) {
      ws.tmp_m.noalias() = model.B.transpose() * ws.p;
      grad->segment(k * m, m) = ws.gu[k] + ws.tmp_m;
      ws.tmp_n.noalias() = model.A.transpose() * ws.p;
      ws.p = ws.gx[k] + ws.tmp_n;
      if (hinges && k >= 1)
        ws.p += rho * ((states[k] - model.x_hi).cwiseMax(0.0) -
                       (model.x_lo - states[k]).cwiseMax(0.0));
    }
  }
  return value;
}

// Same for the stationary problem over z = (inputs, x_s, u_s).
double eval_stationary(const AgentModel& model, const CooperativeStageCost& cost, const Vec& x0,
                       const AssumedNeighborData& assumed, int H, const Vec& z,
                       const Vec* lambda, double rho, Vec* grad, EvalWorkspace& ws) {
  const int n = model.n;
  const int m = model.m;
  ws.prepare(n, m, H, grad != nullptr);
  auto& states = ws.states;

  states[0] = x0;
  for (int k = 0; k < H; ++k) {
    states[k + 1].noalias() = model.A * states[k];
    states[k + 1].noalias() += model.B * z.segment(k * m, m);
  }

  double value;
  Vec& gxs = ws.tmp_n;
  Vec& gus = ws.tmp_m;
  if (grad != nullptr) {
    value = cost.value_and_gradient(z.segment(H * m, n), z.segment(H * m + n, m), assumed,
                                    Instant::stationary(), gxs, gus);
  } else {
    value = cost.value(z.segment(H * m, n), z.segment(H * m + n, m), assumed,
                       Instant::stationary(), CostKind::smoothed);
  }

  const bool hinges = lambda != nullptr && model.has_finite_state_bounds();
  Vec h1, h2;
  if (lambda != nullptr) {
    const auto xs = z.segment(H * m, n);
    const auto us = z.segment(H * m + n, m);
    h1 = xs - (model.A * xs + model.B * us);
    h2 = states[H] - xs;
    value += lambda->segment(0, n).dot(h1) + 0.5 * rho * h1.squaredNorm();
    value += lambda->segment(n, n).dot(h2) + 0.5 * rho * h2.squaredNorm();
    if (hinges) {
      for (int k = 1; k <= H; ++k) {
        const Vec over = (states[k] - model.x_hi).cwiseMax(0.0);
        const Vec under = (model.x_lo - states[k]).cwiseMax(0.0);
        value += 0.5 * rho * (over.squaredNorm() + under.squaredNorm());
      }
    }
  }

  if (grad != nullptr) {
    grad->resize(H * m + n + m);
    if (lambda != nullptr) {
      const Vec w1 = lambda->segment(0, n) + rho * h1;
      const Vec w2 = lambda->segment(n, n) + rho * h2;
      grad->segment(H * m, n) = gxs + w1 - model.A.transpose() * w1 - w2;
      grad->segment(H * m + n, m) = gus - model.B.transpose() * w1;
      ws.p = w2;
      if (hinges)
        ws.p += rho * ((states[H] - model.x_hi).cwiseMax(0.0) -
                       (model.x_lo - states[H]).cwiseMax(0.0));
      for (int k = H - 1; k >= 0; --k) {
        grad->segment(k * m, m).noalias() = model.B.transpose() * ws.p;
        Vec next = model.A.transpose() * ws.p;
        ws.p.swap(next);
        if (hinges && k >= 1)
          ws.p += rho * ((states[k] - model.x_hi).cwiseMax(0.0) -
                         (model.x_lo - states[k]).cwiseMax(0.0));
      }
    } else {
      grad->setZero();
      grad->segment(H * m, n) = gxs;
      grad->segment(H * m + n, m) = gus;
    }
  }
  return value;
}

}  // namespace

void SolverConfig::validate() const {
  if (max_outer < 1 || max_inner < 1) throw std::invalid_argument("SolverConfig: iteration caps must be positive");
  if (step_init <= 0 || step_shrink <= 0 || step_shrink >= 1 || armijo_c <= 0)
    throw std::invalid_argument("SolverConfig: invalid backtracking parameters");
  if (tol_grad <= 0 || tol_eq <= 0) throw std::invalid_argument("SolverConfig: tolerances must be positive");
  if (penalty_init <= 0) throw std::invalid_argument("SolverConfig: penalty_init must be positive");
  if (penalty_growth <= 1) throw std::invalid_argument("SolverConfig: penalty_growth must exceed 1");
  if (mu_smooth <= 0) throw std::invalid_argument("SolverConfig: mu_smooth must be positive");
  if (min_accept_step < 0) throw std::invalid_argument("SolverConfig: min_accept_step must be >= 0");
  if (probe_min_gain < 0) throw std::invalid_argument("SolverConfig: probe_min_gain must be >= 0");
  if (min_accept_gain < 0) throw std::invalid_argument("SolverConfig: min_accept_gain must be >= 0");
}

struct LocalSolver::ProblemView {
  int dim = 0;
  int eq_dim = 0;
  Vec lo, hi;
  std::function<double(const Vec&, const Vec&, double, Vec*)> augmented;
  std::function<double(const Vec&)> objective;        // smoothed, no penalty terms
  std::function<double(const Vec&)> objective_exact;  // piecewise, no penalty terms
  std::function<void(const Vec&, Vec&)> equality;
};

struct LocalSolver::InnerResult {
  Vec z;
  double value = 0.0;
  double gp_norm = 0.0;
  int iterations = 0;
};

LocalSolver::~LocalSolver() = default;
LocalSolver::LocalSolver(LocalSolver&&) noexcept = default;
LocalSolver& LocalSolver::operator=(LocalSolver&&) noexcept = default;

LocalSolver::LocalSolver(AgentModel model, CooperativeStageCost cost, SolverConfig config)
    : model_(std::move(model)),
      cost_(std::move(cost)),
      config_(config),
      ws_(std::make_unique<Workspace>()) {
  config_.validate();
  model_.validate();
}

bool LocalSolver::probe_descent(const ProblemView& problem, const Vec& lambda, double rho, Vec& z,
                                double& fval) const {
  static constexpr double kFractions[] = {0.4, 0.08, 0.016};
  for (int d = 0; d < problem.dim; ++d) {
    const double lo = problem.lo(d), hi = problem.hi(d);
    const double scale = std::isfinite(lo) && std::isfinite(hi) ? 0.5 * (hi - lo) : 1.0;
    if (scale <= 0.0) continue;
    for (double frac : kFractions) {
      const double delta = frac * scale;
      const double first = static_cast<double>(tie_break_sign_);
      for (double sign : {first, -first}) {
        Vec z_try = z;
        z_try(d) = std::clamp(z(d) + sign * delta, lo, hi);
        if (z_try(d) == z(d)) continue;
        const double f_try = problem.augmented(z_try, lambda, rho, nullptr);
        if (f_try < fval - config_.probe_min_gain) {
          z = std::move(z_try);
          fval = f_try;
          return true;
        }
      }
    }
  }
  return false;
}

LocalSolver::InnerResult LocalSolver::minimize(const ProblemView& problem, Vec z,
                                               const Vec& lambda, double rho) {
  z = clamp(z, problem.lo, problem.hi);
  double fval = problem.augmented(z, lambda, rho, &grad_);

  int iterations = 0;
  int probe_cycles = 0;
  double bb_step = config_.step_init;
  bool have_bb = false;

  while (true) {
    bool converged = false;
    bool stalled = false;
    while (iterations < config_.max_inner) {
      gp_ = z - clamp(z - grad_, problem.lo, problem.hi);
      if (gp_.lpNorm<Eigen::Infinity>() <= config_.tol_grad) {
        converged = true;
        break;
      }
      double t = have_bb ? std::clamp(bb_step, 1e-12, 1e12) : config_.step_init;
      bool accepted = false;
      double f_try = 0.0;
      for (int bt = 0; bt < 60; ++bt) {
        z_try_ = clamp(z - t * grad_, problem.lo, problem.hi);
        const double dirder = grad_.dot(z_try_ - z);
        if (dirder < 0.0) {
          f_try = problem.augmented(z_try_, lambda, rho, nullptr);
          if (f_try <= fval + config_.armijo_c * dirder) {
            accepted = true;
            break;
          }
        }
        t *= config_.step_shrink;
      }
      if (!accepted) {
        stalled = true;
        break;
      }
      (void)problem.augmented(z_try_, lambda, rho, &grad_try_);
      const Vec s = z_try_ - z;
      const Vec y = grad_try_ - grad_;
      const double sy = s.dot(y);
      if (sy > 1e-16) {
        bb_step = s.squaredNorm() / sy;
        have_bb = true;
      } else {
        have_bb = false;
      }
      z = z_try_;
      fval = f_try;
      grad_ = grad_try_;
      ++iterations;
    }

    // A vanishing projected gradient is necessary but not sufficient here:
    // the smoothed overlap has flat ridges (all plates aligned) where the
    // gradient is exactly zero yet a finite move descends. Probe the
    // coordinates deterministically before accepting the point.
    if ((converged || stalled) && probe_cycles < 3 && iterations < config_.max_inner) {
      if (probe_descent(problem, lambda, rho, z, fval)) {
        ++probe_cycles;
        (void)problem.augmented(z, lambda, rho, &grad_);
        have_bb = false;
        continue;
      }
    }
    break;
  }

  InnerResult result;
  gp_ = z - clamp(z - grad_, problem.lo, problem.hi);
  result.gp_norm = gp_.lpNorm<Eigen::Infinity>();
  result.z = std::move(z);
  result.value = fval;
  result.iterations = iterations;
  return result;
}

SolveResult LocalSolver::drive(const ProblemView& problem, const Vec& warm) {
  Vec z = clamp(warm, problem.lo, problem.hi);
  Vec h(problem.eq_dim);

  problem.equality(z, h);
  const double warm_res = h.lpNorm<Eigen::Infinity>();
  const bool warm_feasible = warm_res <= config_.tol_eq;
  const double warm_objective = problem.objective(z);
  const double warm_exact = problem.objective_exact(z);

  bool have_best = warm_feasible;
  Vec best_z = z;
  double best_objective = warm_objective;

  Vec fallback_z = z;
  double fallback_res = warm_res;

  Vec lambda = Vec::Zero(problem.eq_dim);
  double rho = config_.penalty_init;
  int total_inner = 0;

  for (int outer = 0; outer < config_.max_outer; ++outer) {
    InnerResult inner = minimize(problem, z, lambda, rho);
    z = std::move(inner.z);
    total_inner += inner.iterations;

    problem.equality(z, h);
    const double res = h.lpNorm<Eigen::Infinity>();
    if (res < fallback_res) {
      fallback_res = res;
      fallback_z = z;
    }
    if (res <= config_.tol_eq) {
      const double objective = problem.objective(z);
      const bool improves = !have_best || objective < best_objective;
      const bool exact_ok = !warm_feasible || problem.objective_exact(z) <= warm_exact;
      const bool worthwhile =
          !warm_feasible ||
          ((z - clamp(warm, problem.lo, problem.hi)).lpNorm<Eigen::Infinity>() >
               config_.min_accept_step &&
           objective < warm_objective - config_.min_accept_gain);
      if (improves && exact_ok && worthwhile) {
        have_best = true;
        best_z = z;
        best_objective = objective;
      }
      if (inner.gp_norm <= config_.tol_grad) break;
    }
    lambda += rho * h;
    rho *= config_.penalty_growth;
  }

  SolveResult result;
  result.inner_iterations = total_inner;
  const Vec& chosen = have_best ? best_z : fallback_z;
  problem.equality(chosen, h);
  result.eq_residual = h.lpNorm<Eigen::Infinity>();
  result.converged = have_best;
  result.objective = problem.objective(chosen);
  result.objective_exact = problem.objective_exact(chosen);
  // The caller unpacks trajectory/stationary from this vector.
  result.trajectory.states.clear();
  result.trajectory.inputs.clear();
  // stash the decision vector through the stationary field temporarily
  result.stationary.x_s = chosen;
  return result;
}

SolveResult LocalSolver::solve_trajectory(const Vec& x0, const StationaryPoint& target,
                                          const AssumedNeighborData& assumed,
                                          const std::vector<Vec>& warm_inputs) {
  const int H = static_cast<int>(warm_inputs.size());
  if (H < 1) throw std::invalid_argument("solve_trajectory: warm start must cover the horizon");
  if (x0.size() != model_.n) throw std::invalid_argument("solve_trajectory: bad x0 dimension");
  if (!is_stationary(model_, target, 1e-6))
    throw std::invalid_argument("solve_trajectory: target is not a stationary point");

  const int m = model_.m;
  Vec warm(H * m);
  for (int k = 0; k < H; ++k) {
    if (warm_inputs[k].size() != m)
      throw std::invalid_argument("solve_trajectory: bad warm input dimension");
    warm.segment(k * m, m) = warm_inputs[k];
  }

  ProblemView problem;
  problem.dim = H * m;
  problem.eq_dim = model_.n;
  problem.lo.resize(problem.dim);
  problem.hi.resize(problem.dim);
  for (int k = 0; k < H; ++k) {
    problem.lo.segment(k * m, m) = model_.u_lo;
    problem.hi.segment(k * m, m) = model_.u_hi;
  }
  problem.augmented = [&](const Vec& z, const Vec& lambda, double rho, Vec* grad) {
    return eval_trajectory(model_, cost_, x0, assumed, H, z, &lambda, rho, &target, grad, *ws_);
  };
  problem.objective = [&](const Vec& z) {
    return eval_trajectory(model_, cost_, x0, assumed, H, z, nullptr, 0.0, nullptr, nullptr,
                           *ws_);
  };
  problem.objective_exact = [&](const Vec& z) {
    double value = 0.0;
    Vec x = x0;
    for (int k = 0; k < H; ++k) {
      value += cost_.value(x, z.segment(k * m, m), assumed, Instant::stage(k), CostKind::exact);
      x = model_.A * x + model_.B * z.segment(k * m, m);
    }
    return value;
  };
  problem.equality = [&](const Vec& z, Vec& h) {
    Vec x = x0;
    for (int k = 0; k < H; ++k) x = model_.A * x + model_.B * z.segment(k * m, m);
    h = x - target.x_s;
  };

  SolveResult result = drive(problem, warm);
  const Vec chosen = std::move(result.stationary.x_s);
  std::vector<Vec> inputs(H);
  for (int k = 0; k < H; ++k) inputs[k] = chosen.segment(k * m, m);
  result.trajectory = rollout(model_, x0, inputs);
  result.stationary = target;
  return result;
}

SolveResult LocalSolver::solve_stationary(const Vec& x0, const AssumedNeighborData& assumed,
                                          const std::vector<Vec>& warm_inputs,
                                          const StationaryPoint& warm_sp) {
  const int H = static_cast<int>(warm_inputs.size());
  if (H < 1) throw std::invalid_argument("solve_stationary: warm start must cover the horizon");
  if (x0.size() != model_.n) throw std::invalid_argument("solve_stationary: bad x0 dimension");
  if (warm_sp.x_s.size() != model_.n || warm_sp.u_s.size() != model_.m)
    throw std::invalid_argument("solve_stationary: bad warm stationary pair");

  const int n = model_.n;
  const int m = model_.m;
  const int dim = H * m + n + m;
  Vec warm(dim);
  for (int k = 0; k < H; ++k) warm.segment(k * m, m) = warm_inputs[k];
  warm.segment(H * m, n) = warm_sp.x_s;
  warm.segment(H * m + n, m) = warm_sp.u_s;

  ProblemView problem;
  problem.dim = dim;
  problem.eq_dim = 2 * n;
  problem.lo.resize(dim);
  problem.hi.resize(dim);
  for (int k = 0; k < H; ++k) {
    problem.lo.segment(k * m, m) = model_.u_lo;
    problem.hi.segment(k * m, m) = model_.u_hi;
  }
  problem.lo.segment(H * m, n) = model_.x_lo;
  problem.hi.segment(H * m, n) = model_.x_hi;
  problem.lo.segment(H * m + n, m) = model_.u_lo;
  problem.hi.segment(H * m + n, m) = model_.u_hi;

  problem.augmented = [&](const Vec& z, const Vec& lambda, double rho, Vec* grad) {
    return eval_stationary(model_, cost_, x0, assumed, H, z, &lambda, rho, grad, *ws_);
  };
  problem.objective = [&](const Vec& z) {
    return cost_.value(z.segment(H * m, n), z.segment(H * m + n, m), assumed,
                       Instant::stationary(), CostKind::smoothed);
  };
  problem.objective_exact = [&](const Vec& z) {
    return cost_.value(z.segment(H * m, n), z.segment(H * m + n, m), assumed,
                       Instant::stationary(), CostKind::exact);
  };
  problem.equality = [&](const Vec& z, Vec& h) {
    const Vec xs = z.segment(H * m, n);
    const Vec us = z.segment(H * m + n, m);
    Vec x = x0;
    for (int k = 0; k < H; ++k) x = model_.A * x + model_.B * z.segment(k * m, m);
    h.resize(2 * n);
    h.segment(0, n) = xs - (model_.A * xs + model_.B * us);
    h.segment(n, n) = x - xs;
  };

  SolveResult result = drive(problem, warm);
  const Vec chosen = std::move(result.stationary.x_s);
  std::vector<Vec> inputs(H);
  for (int k = 0; k < H; ++k) inputs[k] = chosen.segment(k * m, m);
  result.trajectory = rollout(model_, x0, inputs);
  result.stationary.x_s = chosen.segment(H * m, n);
  result.stationary.u_s = chosen.segment(H * m + n, m);
  return result;
}

std::function<double(const Vec&, Vec*)> make_trajectory_objective(
    const AgentModel& model, const CooperativeStageCost& cost, Vec x0,
    const AssumedNeighborData& assumed, int horizon) {
  auto ws = std::make_shared<LocalSolver::Workspace>();
  return [&model, &cost, &assumed, x0 = std::move(x0), horizon, ws](const Vec& z, Vec* grad) {
    return eval_trajectory(model, cost, x0, assumed, horizon, z, nullptr, 0.0, nullptr, grad,
                           *ws);
  };
}

std::function<double(const Vec&, Vec*)> make_stationary_objective(
    const AgentModel& model, const CooperativeStageCost& cost,
    const AssumedNeighborData& assumed, int horizon) {
  auto ws = std::make_shared<LocalSolver::Workspace>();
  return [&model, &cost, &assumed, horizon, ws](const Vec& z, Vec* grad) {
    return eval_stationary(model, cost, Vec::Zero(model.n), assumed, horizon, z, nullptr, 0.0,
                           grad, *ws);
  };
}

double check_gradient(const std::function<double(const Vec&, Vec*)>& f, const Vec& z, double h) {
  if (h <= 0.0) throw std::invalid_argument("check_gradient: h must be positive");
  Vec analytic;
  (void)f(z, &analytic);
  double worst = 0.0;
  Vec zp = z, zm = z;
  for (Eigen::Index d = 0; d < z.size(); ++d) {
    zp(d) = z(d) + h;
    zm(d) = z(d) - h;
    const double numeric = (f(zp, nullptr) - f(zm, nullptr)) / (2.0 * h);
    zp(d) = z(d);
    zm(d) = z(d);
    worst = std::max(worst, std::abs(analytic(d) - numeric) / std::max(1.0, std::abs(numeric)));
  }
  return worst;
}

}  // namespace shdempc
