#pragma once

#include <vector>

#include "shdempc/objective.hpp"

namespace shdempc {

/// Directed influence graph over the agents. upstream[i] holds the agents
/// whose variables enter agent i's local cost; downstream is the transpose.
struct InfluenceGraph {
  int n_agents = 0;
  std::vector<std::vector<AgentId>> upstream;
  std::vector<std::vector<AgentId>> downstream;

  void validate() const;  // throws on self-loops or broken duality
};

/// Path graph of n agents: agent i is coupled to i-1 and i+1.
InfluenceGraph chain(int n);

/// Per-agent cost-coupling neighbor sets for neighborhood-cooperative stage
/// costs (an agent's objective adds the local costs of everyone it
/// influences): cost_upstream_i = upstream_i + downstream_i + upstream of
/// every downstream neighbor, self removed; cost_downstream by duality.
std::vector<CostNeighborhood> cost_coupling_sets(const InfluenceGraph& g);

/// Coupling sets for stage costs whose only cross-agent terms are shared
/// pairwise terms with the direct neighbors (the plate overlap cost is one):
/// the objective reads nothing beyond upstream_i, so the coupling closure
/// collapses to the direct edges and the downstream local-cost sum is empty.
std::vector<CostNeighborhood> local_coupling_sets(const InfluenceGraph& g);

enum class EdgeRule {
  direct,        ///< edges of the influence graph itself
  cost_coupled,  ///< edges join i and every j in cost_upstream_i
};

/// Level assignment in {1..num_colors}.
struct Coloring {
  std::vector<int> level_of;
  int num_colors = 0;
};

/// Deterministic greedy coloring in agent-id order, smallest feasible color
/// first. num_colors upper-bounds the chromatic number of the chosen edge
/// set; it is a recommendation for the number of hierarchy levels, not an
/// exact chromatic number.
Coloring greedy_color(const InfluenceGraph& g, EdgeRule rule);

}  // namespace shdempc
