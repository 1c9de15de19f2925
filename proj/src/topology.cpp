#include "shdempc/topology.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>
#include <string>

namespace shdempc {

namespace {

std::vector<AgentId> sorted_unique(std::set<AgentId> s) {
  return std::vector<AgentId>(s.begin(), s.end());
}

}  // namespace

void InfluenceGraph::validate() const {
  if (n_agents < 1) throw std::invalid_argument("InfluenceGraph: need at least one agent");
  if (static_cast<int>(upstream.size()) != n_agents ||
      static_cast<int>(downstream.size()) != n_agents)
    throw std::invalid_argument("InfluenceGraph: adjacency size mismatch");
  for (int i = 0; i < n_agents; ++i) {
    for (AgentId j : upstream[i]) {
      if (j == i)
        throw std::invalid_argument("InfluenceGraph: self-loop at agent " + std::to_string(i));
      if (j < 0 || j >= n_agents)
        throw std::invalid_argument("InfluenceGraph: agent id out of range");
      if (std::find(downstream[j].begin(), downstream[j].end(), i) == downstream[j].end())
        throw std::invalid_argument("InfluenceGraph: duality violated between agents " +
                                    std::to_string(i) + " and " + std::to_string(j));
    }
  }
}

InfluenceGraph chain(int n) {
  if (n < 1) throw std::invalid_argument("chain: n must be at least 1");
  InfluenceGraph g;
  g.n_agents = n;
  g.upstream.resize(n);
  g.downstream.resize(n);
  for (int i = 0; i < n; ++i) {
    if (i > 0) g.upstream[i].push_back(i - 1);
    if (i + 1 < n) g.upstream[i].push_back(i + 1);
    g.downstream[i] = g.upstream[i];  // physical adjacency is symmetric
  }
  g.validate();
  return g;
}

std::vector<CostNeighborhood> cost_coupling_sets(const InfluenceGraph& g) {
  g.validate();
  std::vector<CostNeighborhood> result(g.n_agents);

  for (int i = 0; i < g.n_agents; ++i) {
    CostNeighborhood& nbhd = result[i];
    nbhd.self_id = i;
    nbhd.upstream = g.upstream[i];
    nbhd.downstream = g.downstream[i];
    std::sort(nbhd.upstream.begin(), nbhd.upstream.end());
    std::sort(nbhd.downstream.begin(), nbhd.downstream.end());

    std::set<AgentId> closure(nbhd.upstream.begin(), nbhd.upstream.end());
    closure.insert(nbhd.downstream.begin(), nbhd.downstream.end());
    for (AgentId j : nbhd.downstream) {
      closure.insert(g.upstream[j].begin(), g.upstream[j].end());
      std::vector<AgentId> j_up = g.upstream[j];
      std::sort(j_up.begin(), j_up.end());
      nbhd.downstream_upstream.emplace_back(j, std::move(j_up));
    }
    closure.erase(i);
    nbhd.cost_upstream = sorted_unique(std::move(closure));
  }

  // cost_downstream by duality: j in cost_downstream_i iff i in cost_upstream_j.
  for (int j = 0; j < g.n_agents; ++j) {
    for (AgentId i : result[j].cost_upstream) result[i].cost_downstream.push_back(j);
  }
  for (auto& nbhd : result) std::sort(nbhd.cost_downstream.begin(), nbhd.cost_downstream.end());
  return result;
}

std::vector<CostNeighborhood> local_coupling_sets(const InfluenceGraph& g) {
  g.validate();
  std::vector<CostNeighborhood> result(g.n_agents);
  for (int i = 0; i < g.n_agents; ++i) {
    CostNeighborhood& nbhd = result[i];
    nbhd.self_id = i;
    nbhd.upstream = g.upstream[i];
    nbhd.downstream = g.downstream[i];
    std::sort(nbhd.upstream.begin(), nbhd.upstream.end());
    std::sort(nbhd.downstream.begin(), nbhd.downstream.end());
    std::set<AgentId> closure(nbhd.upstream.begin(), nbhd.upstream.end());
    closure.insert(nbhd.downstream.begin(), nbhd.downstream.end());
    closure.erase(i);
    nbhd.cost_upstream = sorted_unique(std::move(closure));
    // no downstream local-cost sum: downstream_upstream stays empty
  }
  for (int j = 0; j < g.n_agents; ++j) {
    for (AgentId i : result[j].cost_upstream) result[i].cost_downstream.push_back(j);
  }
  for (auto& nbhd : result) std::sort(nbhd.cost_downstream.begin(), nbhd.cost_downstream.end());
  return result;
}

Coloring greedy_color(const InfluenceGraph& g, EdgeRule rule) {
  g.validate();
  std::vector<std::vector<AgentId>> edges(g.n_agents);
  if (rule == EdgeRule::direct) {
    for (int i = 0; i < g.n_agents; ++i) {
      std::set<AgentId> nbrs(g.upstream[i].begin(), g.upstream[i].end());
      nbrs.insert(g.downstream[i].begin(), g.downstream[i].end());
      edges[i] = sorted_unique(std::move(nbrs));
    }
  } else {
    const auto sets = cost_coupling_sets(g);
    for (int i = 0; i < g.n_agents; ++i) {
      std::set<AgentId> nbrs(sets[i].cost_upstream.begin(), sets[i].cost_upstream.end());
      nbrs.insert(sets[i].cost_downstream.begin(), sets[i].cost_downstream.end());
      edges[i] = sorted_unique(std::move(nbrs));
    }
  }

  Coloring coloring;
  coloring.level_of.assign(g.n_agents, 0);
  for (int i = 0; i < g.n_agents; ++i) {
    std::set<int> used;
    for (AgentId j : edges[i]) {
      if (j < i) used.insert(coloring.level_of[j]);
    }
    int color = 1;
    while (used.count(color) != 0) ++color;
    coloring.level_of[i] = color;
    coloring.num_colors = std::max(coloring.num_colors, color);
  }
  return coloring;
}

}  // namespace shdempc
