#include "shdempc/coordinator.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

namespace shdempc {

long settle_index(const std::vector<double>& series, double tol) {
  long settle = 0;
  for (std::size_t i = 1; i < series.size(); ++i) {
    if (std::abs(series[i] - series[i - 1]) >= tol) settle = static_cast<long>(i);
  }
  return settle;
}

void SystemConfig::validate() const {
  if (n_agents < 1) throw std::invalid_argument("config: n_agents must be >= 1");
  if (num_levels < 1) throw std::invalid_argument("config: Specify N_q >= 1");
  if (iterations < 0) throw std::invalid_argument("config: iterations must be >= 0");
  if (horizon < 1) throw std::invalid_argument("config: horizon must be >= 1");
  if (dt <= 0) throw std::invalid_argument("config: dt must be positive");
  if (time_steps < 0) throw std::invalid_argument("config: time_steps must be >= 0");
  if (u_bound <= 0) throw std::invalid_argument("config: u_bound must be positive");
  if (plate.mass <= 0 || plate.spring <= 0 || plate.damper < 0 || plate.side <= 0)
    throw std::invalid_argument("config: plate parameters must be physically positive");
  if (settle_tol <= 0) throw std::invalid_argument("config: settle_tol must be positive");
  if (hierarchy_init == HierarchyInit::explicit_levels) {
    if (static_cast<int>(explicit_levels.size()) != n_agents)
      throw std::invalid_argument("config: explicit_levels must list one level per agent");
    for (int level : explicit_levels) {
      if (level < 1 || level > num_levels)
        throw std::invalid_argument("config: explicit level outside {1..N_q}");
    }
  }
  if (variant == Variant::parallel && num_levels != 1)
    throw std::invalid_argument("config: the parallel baseline runs with N_q = 1");
  solver.validate();
}

Coordinator::Coordinator(SystemConfig config) : cfg_(std::move(config)) { cfg_.validate(); }

void Coordinator::initialize() {
  AgentModel model = discretize_plate(cfg_.plate.mass, cfg_.plate.spring, cfg_.plate.damper, cfg_.dt);
  model.u_lo = Vec::Constant(model.m, -cfg_.u_bound);
  model.u_hi = Vec::Constant(model.m, cfg_.u_bound);

  const InfluenceGraph graph = chain(cfg_.n_agents);
  const auto sets = cfg_.coupling == CouplingMode::local ? local_coupling_sets(graph)
                                                         : cost_coupling_sets(graph);

  std::vector<int> levels(cfg_.n_agents, 1);
  if (cfg_.hierarchy_init == HierarchyInit::universal) {
    // A universal hierarchy must separate every cost-coupled pair, so the
    // coloring edge rule follows the active coupling.
    const EdgeRule rule =
        cfg_.coupling == CouplingMode::local ? EdgeRule::direct : EdgeRule::cost_coupled;
    const Coloring coloring = greedy_color(graph, rule);
    if (coloring.num_colors > cfg_.num_levels)
      throw std::invalid_argument("config: universal hierarchy needs N_q >= " +
                                  std::to_string(coloring.num_colors));
    levels = coloring.level_of;
  } else if (cfg_.hierarchy_init == HierarchyInit::explicit_levels) {
    levels = cfg_.explicit_levels;
  }

  PlateCostParams cost_params;
  cost_params.side = cfg_.plate.side;
  cost_params.mu_smooth = cfg_.solver.mu_smooth;

  agents_.clear();
  agents_.reserve(cfg_.n_agents);
  for (int i = 0; i < cfg_.n_agents; ++i) {
    AgentRuntime agent;
    agent.id = i;
    agent.model = model;
    agent.nbhd = sets[i];
    agent.cost = CooperativeStageCost(sets[i], cost_params);
    agent.hierarchy = make_hierarchy_state(cfg_.num_levels, cfg_.seed, i);
    agent.hierarchy.level = levels[i];
    agent.measured_state = Vec::Zero(model.n);
    agent.candidate.trajectory =
        rollout(model, agent.measured_state, std::vector<Vec>(cfg_.horizon, Vec::Zero(model.m)));
    agent.candidate.stationary = StationaryPoint{Vec::Zero(model.n), Vec::Zero(model.m)};
    agent.assumed = AssumedNeighborData(sets[i].cost_upstream);
    agent.assumed_at_solve = agent.assumed;
    agent.solver = std::make_unique<LocalSolver>(model, agent.cost, cfg_.solver);
    agent.solver->set_tie_break_sign(draw_sign(agent.hierarchy));
    agent.optimum = agent.candidate;

    const auto findings = audit_agent_solution(model, agent.candidate.trajectory,
                                               agent.candidate.stationary, agent.measured_state,
                                               kAuditTolerance);
    if (!findings.empty()) throw InitializationError(i, "infeasible initial candidate: " + findings.front());

    agents_.push_back(std::move(agent));
  }

  bus_ = std::make_unique<MessageBus>(cfg_.n_agents);
  metrics_ = RunMetrics{};
  sample_counter_ = 0;
  initialized_ = true;

  protocol_round();
  record_targets();
  run_audit("initialization");
}

void Coordinator::protocol_round() {
  for (AgentRuntime& agent : agents_) {
    SolutionMessage msg;
    msg.trajectory = agent.candidate.trajectory;
    msg.stationary = agent.candidate.stationary;
    bus_->broadcast(agent.id, msg, agent.nbhd.cost_downstream);
  }
  bus_->barrier();
  for (AgentRuntime& agent : agents_) {
    for (const auto& delivery : bus_->inbox(agent.id)) {
      agent.assumed.set_trajectory(delivery.sender, *delivery.payload.trajectory);
      agent.assumed.set_stationary(delivery.sender, *delivery.payload.stationary);
    }
  }
}

void Coordinator::level_slot(Phase phase, int q) {
  std::vector<AgentId> group;
  for (const AgentRuntime& agent : agents_) {
    if (agent.hierarchy.level == q) group.push_back(agent.id);
  }

  const auto solve_one = [&](AgentId id) {
    AgentRuntime& agent = agents_[id];
    agent.assumed_at_solve = agent.assumed;
    SolveResult result;
    if (phase == Phase::stationary) {
      result = agent.solver->solve_stationary(agent.measured_state, agent.assumed,
                                              agent.candidate.trajectory.inputs,
                                              agent.candidate.stationary);
    } else {
      result = agent.solver->solve_trajectory(agent.measured_state, agent.candidate.stationary,
                                              agent.assumed, agent.candidate.trajectory.inputs);
    }
    if (result.converged) {
      agent.solve_failed = false;
      agent.optimum.trajectory = std::move(result.trajectory);
      agent.optimum.stationary = phase == Phase::stationary ? std::move(result.stationary)
                                                            : agent.candidate.stationary;
    } else {
      // Infeasibility is not conflict: the candidate stays, nothing mutates.
      agent.solve_failed = true;
      agent.optimum = agent.candidate;
    }
  };

  if (cfg_.parallel_solve && group.size() > 1) {
    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const std::size_t n_threads = std::min<std::size_t>(group.size(), hw);
    std::vector<std::thread> workers;
    workers.reserve(n_threads);
    for (std::size_t t = 0; t < n_threads; ++t) {
      workers.emplace_back([&, t] {
        for (std::size_t g = t; g < group.size(); g += n_threads) solve_one(group[g]);
      });
    }
    for (auto& w : workers) w.join();
  } else {
    for (AgentId id : group) solve_one(id);
  }

  for (AgentId id : group) {
    AgentRuntime& agent = agents_[id];
    SolutionMessage msg;
    if (phase == Phase::stationary) {
      msg.stationary = agent.optimum.stationary;
    } else {
      msg.trajectory = agent.optimum.trajectory;
    }
    bus_->broadcast(agent.id, msg, agent.nbhd.cost_downstream);
  }
  bus_->barrier();
  ingest_inbox(phase);
}

void Coordinator::ingest_inbox(Phase phase) {
  for (AgentRuntime& agent : agents_) {
    for (const auto& delivery : bus_->inbox(agent.id)) {
      if (phase == Phase::stationary) {
        agent.assumed.set_stationary(delivery.sender, *delivery.payload.stationary);
      } else {
        agent.assumed.set_trajectory(delivery.sender, *delivery.payload.trajectory);
      }
    }
  }
}

void Coordinator::resolve_conflicts(Phase phase, int time_step, int iteration) {
  for (AgentRuntime& agent : agents_) {
    agent.report = evaluate_cost_report(agent.cost, agent.optimum.trajectory,
                                        agent.optimum.stationary, agent.assumed_at_solve,
                                        agent.assumed, cfg_.horizon);
    const double v_hat =
        phase == Phase::stationary ? agent.report.naive_stage : agent.report.naive_horizon;
    const double v_breve =
        phase == Phase::stationary ? agent.report.informed_stage : agent.report.informed_horizon;
    bool conflict = detect_conflict(agent.report, phase, conflict_eps(v_hat));
    if (agent.solve_failed) {
      conflict = false;
      metrics_.warnings.push_back("agent " + std::to_string(agent.id) +
                                  ": solver infeasible at time-step " + std::to_string(time_step) +
                                  ", candidate retained");
      ++metrics_.solver_failures;
    }

    TraceRow row;
    row.time_step = time_step;
    row.phase = phase;
    row.iteration = iteration;
    row.agent = agent.id;
    row.level = agent.hierarchy.level;
    row.conflict = conflict;
    row.v_hat = v_hat;
    row.v_breve = v_breve;
    metrics_.trace.push_back(row);

    if (conflict) {
      mutate(agent.hierarchy);
      agent.optimum = agent.candidate;  // discard: the rollback the neighbors will see
    } else {
      if (phase == Phase::stationary) {
        agent.candidate = agent.optimum;
      } else {
        agent.candidate.trajectory = agent.optimum.trajectory;
      }
    }
  }
}

void Coordinator::negotiate(Phase phase, int time_step) {
  if (!initialized_) throw std::logic_error("negotiate: initialize() first");
  for (int p = 1; p <= cfg_.iterations; ++p) {
    for (int q = 1; q <= cfg_.num_levels; ++q) {
      level_slot(phase, q);
      if (cfg_.sampling_mode == SamplingMode::per_level && q < cfg_.num_levels)
        emit_sample(time_step, phase, p, q);
    }
    resolve_conflicts(phase, time_step, p);
    protocol_round();
    run_audit("time-step " + std::to_string(time_step));
    emit_sample(time_step, phase, p,
                cfg_.sampling_mode == SamplingMode::per_level ? cfg_.num_levels : 0);
  }
}

Vec Coordinator::apply_and_shift(AgentRuntime& agent) {
  const Vec applied = agent.candidate.trajectory.inputs.front();
  agent.measured_state = step(agent.model, agent.measured_state, applied);

  std::vector<Vec> shifted(agent.candidate.trajectory.inputs.begin() + 1,
                           agent.candidate.trajectory.inputs.end());
  shifted.push_back(agent.candidate.stationary.u_s);
  agent.candidate.trajectory = rollout(agent.model, agent.measured_state, shifted);
  return applied;
}

double Coordinator::global_candidate_cost() const {
  double total = 0.0;
  for (const AgentRuntime& agent : agents_) {
    AssumedNeighborData truth(agent.nbhd.cost_upstream);
    for (AgentId j : agent.nbhd.cost_upstream) {
      truth.set_trajectory(j, agents_[j].candidate.trajectory);
      truth.set_stationary(j, agents_[j].candidate.stationary);
    }
    for (int k = 0; k < cfg_.horizon; ++k) {
      total += agent.cost.value(agent.candidate.trajectory.states[k],
                                agent.candidate.trajectory.inputs[k], truth, Instant::stage(k),
                                CostKind::exact);
    }
  }
  return total;
}

std::uint64_t Coordinator::total_mutations() const {
  std::uint64_t total = 0;
  for (const AgentRuntime& agent : agents_) total += agent.hierarchy.mutations;
  return total;
}

double Coordinator::mean_target() const {
  double sum = 0.0;
  for (const AgentRuntime& agent : agents_) sum += agent.candidate.stationary.x_s(0);
  return sum / static_cast<double>(agents_.size());
}

void Coordinator::emit_sample(int time_step, Phase phase, int iteration, int level_slot) {
  GlobalSample sample;
  sample.sample = sample_counter_++;
  sample.time_step = time_step;
  sample.phase = phase;
  sample.iteration = iteration;
  sample.level_slot = level_slot;
  sample.global_cost = global_candidate_cost();
  sample.cumulative_mutations = total_mutations();
  sample.mean_target = mean_target();
  metrics_.samples.push_back(sample);
}

void Coordinator::record_targets() {
  std::vector<Vec> targets;
  targets.reserve(agents_.size());
  for (const AgentRuntime& agent : agents_) targets.push_back(agent.candidate.stationary.x_s);
  metrics_.target_history.push_back(std::move(targets));
}

void Coordinator::run_audit(const std::string& where) {
  for (const AgentRuntime& agent : agents_) {
    const auto findings =
        audit_agent_solution(agent.model, agent.candidate.trajectory, agent.candidate.stationary,
                             agent.measured_state, kAuditTolerance);
    for (const std::string& finding : findings) {
      metrics_.audit_findings.push_back("agent " + std::to_string(agent.id) + " (" + where +
                                        "): " + finding);
    }
  }
}

RunMetrics Coordinator::run() {
  initialize();

  if (cfg_.time_steps == 0) {
    emit_sample(0, Phase::stationary, 0, 0);
  }

  for (int t = 1; t <= cfg_.time_steps; ++t) {
    // Step 1: measure, refresh the candidate trajectory from the plant state.
    for (AgentRuntime& agent : agents_) {
      agent.candidate.trajectory =
          rollout(agent.model, agent.measured_state, agent.candidate.trajectory.inputs);
    }
    run_audit("measure " + std::to_string(t));

    // Step 2: exchange candidates.
    protocol_round();

    negotiate(Phase::stationary, t);
    negotiate(Phase::trajectory, t);

    // Step 5: actuate and shift.
    for (AgentRuntime& agent : agents_) apply_and_shift(agent);
    run_audit("shift " + std::to_string(t));
    record_targets();
  }

  for (const AgentRuntime& agent : agents_) {
    FinalRow row;
    row.agent = agent.id;
    row.position = agent.measured_state(0);
    row.level = agent.hierarchy.level;
    metrics_.finals.push_back(row);
  }
  metrics_.bus = bus_->stats();
  metrics_.total_mutations = total_mutations();

  std::vector<double> series;
  series.reserve(metrics_.samples.size());
  for (const GlobalSample& s : metrics_.samples) series.push_back(s.global_cost);
  metrics_.settle_sample = settle_index(series, cfg_.settle_tol);

  return metrics_;
}

}  // namespace shdempc
