#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "shdempc/objective.hpp"
#include "shdempc/topology.hpp"

using namespace shdempc;

namespace {

constexpr double kL = 0.25;

Vec state_at(double pos, double vel = 0.0) {
  Vec x(2);
  x << pos, vel;
  return x;
}

Vec input_of(double u) {
  Vec v(1);
  v << u;
  return v;
}

Trajectory flat_trajectory(double pos, double u, int H) {
  Trajectory traj;
  traj.states.assign(H + 1, state_at(pos));
  traj.inputs.assign(H, input_of(u));
  return traj;
}

StationaryPoint sp_at(double pos, double u) { return {state_at(pos), input_of(u)}; }

// Assumed data where every neighbor sits still at the given position.
AssumedNeighborData still_assumptions(const std::vector<std::pair<AgentId, double>>& positions,
                                      int H) {
  std::vector<AgentId> ids;
  for (const auto& [id, pos] : positions) ids.push_back(id);
  AssumedNeighborData assumed(ids);
  for (const auto& [id, pos] : positions) {
    assumed.set_trajectory(id, flat_trajectory(pos, 0.0, H));
    assumed.set_stationary(id, sp_at(pos, 0.0));
  }
  return assumed;
}

}  // namespace

TEST_CASE("overlap_area: full, boundary, and partial overlap") {
  CHECK(overlap_area(0.0, 0.0, kL) == doctest::Approx(0.0625));
  CHECK(overlap_area(0.0, 0.25, kL) == 0.0);
  CHECK(overlap_area(0.3, 0.05, kL) == 0.0);
  CHECK(overlap_area(0.0, 0.1, kL) == doctest::Approx(0.0375));
  CHECK(overlap_area(0.1, 0.0, kL) == doctest::Approx(0.0375));
}

TEST_CASE("smoothed_overlap_area: close to the exact area at full overlap") {
  CHECK(std::abs(smoothed_overlap_area(0.1, 0.1, kL, 1e-3) - 0.0625) < 1e-3);
}

TEST_CASE("smoothed_overlap_area: exponentially small tail at 2L separation") {
  const double mu = 1e-3;
  const double bound = mu * kL * std::exp(-kL / mu);
  CHECK(smoothed_overlap_area(0.0, 2 * kL, kL, mu) <= bound);
  CHECK(smoothed_overlap_area(0.0, 2 * kL, kL, mu) > 0.0);
}

TEST_CASE("smoothed_overlap_area: symmetric in its two positions") {
  std::mt19937 gen(3);
  std::uniform_real_distribution<double> dist(-0.5, 0.5);
  for (int trial = 0; trial < 50; ++trial) {
    const double a = dist(gen), b = dist(gen);
    CHECK(smoothed_overlap_area(a, b, kL, 1e-3) == smoothed_overlap_area(b, a, kL, 1e-3));
  }
}

TEST_CASE("exact/smoothed agreement over a fine grid of separations") {
  for (double mu : {1e-2, 1e-3}) {
    double sup = 0.0;
    for (long i = -5000; i <= 5000; ++i) {
      const double delta = i * 1e-4;
      sup = std::max(sup, std::abs(overlap_area(delta, 0.0, kL) -
                                   smoothed_overlap_area(delta, 0.0, kL, mu)));
    }
    CHECK(sup <= mu * kL * std::log(2.0) + 1e-9);
  }
}

TEST_CASE("smoothed overlap derivative matches central differences") {
  std::mt19937 gen(17);
  std::uniform_real_distribution<double> dist(-0.6, 0.6);
  for (int trial = 0; trial < 100; ++trial) {
    const double xi = dist(gen), xj = dist(gen);
    const double analytic = smoothed_overlap_area_dxi(xi, xj, kL, 1e-3);
    const auto f = [&](const Vec& z) { return smoothed_overlap_area(z(0), xj, kL, 1e-3); };
    Vec z(1);
    z << xi;
    const double numeric = oracle::central_difference(f, z, 1e-6)(0);
    CHECK(std::abs(analytic - numeric) <= 1e-4 * std::max(1.0, std::abs(numeric)));
  }
}

TEST_CASE("local_stage_cost: plate examples") {
  const PlateCostParams params;
  SUBCASE("two aligned neighbors give the full mean overlap") {
    const std::map<AgentId, double> nbrs{{1, 0.0}, {2, 0.0}};
    CHECK(local_stage_cost(state_at(0.0), input_of(0.0), nbrs, params, CostKind::exact) ==
          doctest::Approx(0.0625));
  }
  SUBCASE("displacement at least L from both neighbors costs nothing") {
    const std::map<AgentId, double> nbrs{{1, -0.3}, {2, -0.25}};
    CHECK(local_stage_cost(state_at(0.0), input_of(0.0), nbrs, params, CostKind::exact) == 0.0);
  }
  SUBCASE("mixed overlap plus input penalty") {
    const std::map<AgentId, double> nbrs{{1, 0.0}, {2, 0.25}};
    CHECK(local_stage_cost(state_at(0.0), input_of(0.1), nbrs, params, CostKind::exact) ==
          doctest::Approx(0.04125));
  }
  SUBCASE("no neighbors degenerates to the input penalty") {
    CHECK(local_stage_cost(state_at(0.4), input_of(0.2), {}, params, CostKind::exact) ==
          doctest::Approx(0.04));
  }
}

TEST_CASE("cooperative_stage_cost: middle of a 3-chain at the origin") {
  const auto sets = cost_coupling_sets(chain(3));
  const auto assumed = still_assumptions({{0, 0.0}, {2, 0.0}}, 5);
  const double value = cooperative_stage_cost(sets[1], state_at(0.0), input_of(0.0), assumed,
                                              Instant::stationary(), PlateCostParams{},
                                              CostKind::exact);
  CHECK(value == doctest::Approx(0.1875));
}

TEST_CASE("cooperative_stage_cost: single agent equals the local cost") {
  const auto sets = cost_coupling_sets(chain(1));
  const AssumedNeighborData empty;
  const double value = cooperative_stage_cost(sets[0], state_at(0.2), input_of(0.1), empty,
                                              Instant::stationary(), PlateCostParams{},
                                              CostKind::exact);
  CHECK(value == doctest::Approx(local_stage_cost(state_at(0.2), input_of(0.1), {},
                                                  PlateCostParams{}, CostKind::exact)));
}

TEST_CASE("cooperative_stage_cost: invariant to agents outside the cost closure") {
  const auto sets = cost_coupling_sets(chain(5));
  // Agent 0's closure on the 5-chain is {1, 2}; agent 3 is outside it.
  REQUIRE(sets[0].cost_upstream == std::vector<AgentId>{1, 2});

  for (double outside_pos : {0.0, 0.1, -0.2, 0.24}) {
    auto assumed = still_assumptions({{1, 0.05}, {2, -0.1}}, 5);
    (void)outside_pos;  // agent 3 has no slot at all: structurally invisible
    const double value = cooperative_stage_cost(sets[0], state_at(0.02), input_of(0.01), assumed,
                                                Instant::stationary(), PlateCostParams{},
                                                CostKind::exact);
    CHECK(value == doctest::Approx(cooperative_stage_cost(
                       sets[0], state_at(0.02), input_of(0.01),
                       still_assumptions({{1, 0.05}, {2, -0.1}}, 5), Instant::stationary(),
                       PlateCostParams{}, CostKind::exact)));
  }
}

TEST_CASE("cooperative_stage_cost: missing neighbor data names the absent agent") {
  const auto sets = cost_coupling_sets(chain(3));
  AssumedNeighborData assumed(std::vector<AgentId>{0, 2});
  assumed.set_stationary(0, sp_at(0.0, 0.0));
  // agent 2's stationary pair never communicated
  try {
    cooperative_stage_cost(sets[1], state_at(0.0), input_of(0.0), assumed, Instant::stationary(),
                           PlateCostParams{}, CostKind::exact);
    FAIL("expected IncompleteAssumptionError");
  } catch (const IncompleteAssumptionError& e) {
    CHECK(e.agent() == 2);
  }
}

TEST_CASE("cooperative gradient matches central differences at random points") {
  const auto sets = cost_coupling_sets(chain(5));
  const CooperativeStageCost cost(sets[2], PlateCostParams{});
  std::mt19937 gen(23);
  std::uniform_real_distribution<double> dist(-0.4, 0.4);

  for (int trial = 0; trial < 100; ++trial) {
    const auto assumed = still_assumptions(
        {{0, dist(gen)}, {1, dist(gen)}, {3, dist(gen)}, {4, dist(gen)}}, 5);
    const Vec x = state_at(dist(gen), dist(gen));
    const Vec u = input_of(dist(gen));

    Vec gx, gu;
    cost.value_and_gradient(x, u, assumed, Instant::stationary(), gx, gu);

    Vec z(3);
    z << x(0), x(1), u(0);
    const auto f = [&](const Vec& p) {
      return cost.value(state_at(p(0), p(1)), input_of(p(2)), assumed, Instant::stationary(),
                        CostKind::smoothed);
    };
    const Vec fd = oracle::central_difference(f, z, 1e-6);
    CHECK(std::abs(gx(0) - fd(0)) <= 1e-4 * std::max(1.0, std::abs(fd(0))));
    CHECK(std::abs(gx(1) - fd(1)) <= 1e-4 * std::max(1.0, std::abs(fd(1))));
    CHECK(std::abs(gu(0) - fd(2)) <= 1e-4 * std::max(1.0, std::abs(fd(2))));
  }
}

TEST_CASE("evaluate_cost_report: identical assumptions give naive == informed") {
  const auto sets = cost_coupling_sets(chain(3));
  const CooperativeStageCost cost(sets[1], PlateCostParams{});
  const auto assumed = still_assumptions({{0, 0.1}, {2, -0.05}}, 5);
  const auto report = evaluate_cost_report(cost, flat_trajectory(0.02, 0.01, 5), sp_at(0.02, 0.01),
                                           assumed, assumed, 5);
  CHECK(report.naive_stage == report.informed_stage);
  CHECK(report.naive_horizon == report.informed_horizon);
}

TEST_CASE("evaluate_cost_report: a neighbor moving away lowers the informed value") {
  // Two agents at the origin; agent 0 (the one under evaluation) holds its
  // optimum at 0 while agent 1's fresh optimum moved to 0.25.
  const auto sets = cost_coupling_sets(chain(2));
  const CooperativeStageCost cost(sets[0], PlateCostParams{});
  const auto before = still_assumptions({{1, 0.0}}, 5);
  const auto after = still_assumptions({{1, 0.25}}, 5);
  const auto report =
      evaluate_cost_report(cost, flat_trajectory(0.0, 0.0, 5), sp_at(0.0, 0.0), before, after, 5);
  CHECK(report.informed_stage < report.naive_stage);
  CHECK(report.naive_stage == doctest::Approx(0.125));  // overlap counted in both local costs
  CHECK(report.informed_stage == doctest::Approx(0.0));
}

TEST_CASE("evaluate_cost_report: H=1 horizon values reduce to the k=0 stage") {
  const auto sets = cost_coupling_sets(chain(2));
  const CooperativeStageCost cost(sets[0], PlateCostParams{});
  const auto assumed = still_assumptions({{1, 0.07}}, 1);
  const auto report =
      evaluate_cost_report(cost, flat_trajectory(0.02, 0.03, 1), sp_at(0.02, 0.03), assumed,
                           assumed, 1);
  // Trajectory and stationary pair coincide here, so stage == horizon.
  CHECK(report.naive_horizon == doctest::Approx(report.naive_stage));
  CHECK(report.informed_horizon == doctest::Approx(report.informed_stage));
}

TEST_CASE("evaluate_cost_report: horizon mismatch is rejected") {
  const auto sets = cost_coupling_sets(chain(2));
  const CooperativeStageCost cost(sets[0], PlateCostParams{});
  const auto assumed = still_assumptions({{1, 0.0}}, 5);
  CHECK_THROWS_AS(evaluate_cost_report(cost, flat_trajectory(0.0, 0.0, 4), sp_at(0.0, 0.0),
                                       assumed, assumed, 5),
                  std::invalid_argument);
}

TEST_CASE("global_cost: sums per-agent informed horizon values") {
  CHECK(global_cost(std::vector<double>{}) == 0.0);
  CHECK(global_cost(std::vector<double>{0.0, 0.0, 0.0}) == 0.0);
  CHECK(global_cost(std::vector<double>{1.5}) == 1.5);

  // Ten plates at rest on a chain: each end agent contributes 2 L^2 per
  // stage, each middle agent 3 L^2, summed over H = 5 stages.
  const double L2 = kL * kL;
  const double per_stage = 2 * (2 * L2) + 8 * (3 * L2);
  const double expected = 5.0 * per_stage;
  CHECK(expected == doctest::Approx(8.75));

  const auto sets = cost_coupling_sets(chain(10));
  std::vector<double> informed;
  for (int i = 0; i < 10; ++i) {
    const CooperativeStageCost cost(sets[i], PlateCostParams{});
    std::vector<std::pair<AgentId, double>> nbr_positions;
    for (AgentId j : sets[i].cost_upstream) nbr_positions.emplace_back(j, 0.0);
    const auto assumed = still_assumptions(nbr_positions, 5);
    const auto report = evaluate_cost_report(cost, flat_trajectory(0.0, 0.0, 5), sp_at(0.0, 0.0),
                                             assumed, assumed, 5);
    informed.push_back(report.informed_horizon);
  }
  CHECK(global_cost(informed) == doctest::Approx(expected));
}
