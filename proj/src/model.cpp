#include "shdempc/model.hpp"

#include <stdexcept>
#include <string>

#include <unsupported/Eigen/MatrixFunctions>

namespace shdempc {

AgentModel AgentModel::unbounded(Mat A, Mat B) {
  AgentModel model;
  model.n = static_cast<int>(A.rows());
  model.m = static_cast<int>(B.cols());
  model.A = std::move(A);
  model.B = std::move(B);
  const double inf = std::numeric_limits<double>::infinity();
  model.x_lo = Vec::Constant(model.n, -inf);
  model.x_hi = Vec::Constant(model.n, inf);
  model.u_lo = Vec::Constant(model.m, -inf);
  model.u_hi = Vec::Constant(model.m, inf);
  model.validate();
  return model;
}

void AgentModel::validate() const {
  if (A.rows() != n || A.cols() != n) throw std::invalid_argument("AgentModel: A must be n x n");
  if (B.rows() != n || B.cols() != m) throw std::invalid_argument("AgentModel: B must be n x m");
  if (!A.allFinite() || !B.allFinite()) throw std::invalid_argument("AgentModel: A, B must be finite");
  if (x_lo.size() != n || x_hi.size() != n || u_lo.size() != m || u_hi.size() != m)
    throw std::invalid_argument("AgentModel: bound dimensions do not match n/m");
  if ((x_lo.array() > x_hi.array()).any()) throw std::invalid_argument("AgentModel: x_lo > x_hi");
  if ((u_lo.array() > u_hi.array()).any()) throw std::invalid_argument("AgentModel: u_lo > u_hi");
}

bool AgentModel::has_finite_state_bounds() const {
  return x_lo.allFinite() || x_hi.allFinite();
}

Vec step(const AgentModel& model, const Vec& x, const Vec& u) {
  if (x.size() != model.n)
    throw std::invalid_argument("step: state dimension " + std::to_string(x.size()) +
                                " does not match model n=" + std::to_string(model.n));
  if (u.size() != model.m)
    throw std::invalid_argument("step: input dimension " + std::to_string(u.size()) +
                                " does not match model m=" + std::to_string(model.m));
  return model.A * x + model.B * u;
}

Trajectory rollout(const AgentModel& model, const Vec& x0, const std::vector<Vec>& inputs) {
  if (inputs.empty()) throw std::invalid_argument("rollout: need at least one input");
  Trajectory traj;
  traj.states.reserve(inputs.size() + 1);
  traj.inputs = inputs;
  traj.states.push_back(x0);
  for (const Vec& u : inputs) {
    traj.states.push_back(step(model, traj.states.back(), u));
  }
  traj.dynamically_consistent = true;
  return traj;
}

bool is_stationary(const AgentModel& model, const StationaryPoint& p, double tol) {
  if (tol <= 0.0) throw std::invalid_argument("is_stationary: tol must be positive");
  const Vec next = step(model, p.x_s, p.u_s);
  return (p.x_s - next).lpNorm<Eigen::Infinity>() <= tol;
}

double max_dynamics_residual(const AgentModel& model, const Trajectory& traj) {
  if (traj.states.size() != traj.inputs.size() + 1)
    throw std::invalid_argument("max_dynamics_residual: states/inputs length mismatch");
  double worst = 0.0;
  for (std::size_t k = 0; k < traj.inputs.size(); ++k) {
    const Vec next = step(model, traj.states[k], traj.inputs[k]);
    worst = std::max(worst, (traj.states[k + 1] - next).lpNorm<Eigen::Infinity>());
  }
  return worst;
}

AgentModel discretize_plate(double m_mass, double k_spring, double c_damp, double dt) {
  if (m_mass <= 0.0) throw std::invalid_argument("discretize_plate: mass must be positive");
  if (dt <= 0.0) throw std::invalid_argument("discretize_plate: dt must be positive");
  if (k_spring <= 0.0)
    throw std::invalid_argument(
        "discretize_plate: k_spring <= 0 makes the continuous dynamics singular; "
        "the exact zero-order-hold formula does not apply");

  Mat Ac(2, 2);
  Ac << 0.0, 1.0, -k_spring / m_mass, -c_damp / m_mass;
  Mat Bc(2, 1);
  Bc << 0.0, 1.0 / m_mass;

  const Mat A = (Ac * dt).exp();
  // det(Ac) = k/m > 0, so the inverse exists.
  const Mat B = Ac.inverse() * (A - Mat::Identity(2, 2)) * Bc;

  AgentModel model = AgentModel::unbounded(A, B);
  return model;
}

}  // namespace shdempc
