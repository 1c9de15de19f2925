#include "shdempc/netsim.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace shdempc {

namespace {

std::uint64_t payload_reals(const SolutionMessage& msg) {
  std::uint64_t reals = 0;
  if (msg.trajectory.has_value()) {
    for (const Vec& x : msg.trajectory->states) reals += x.size();
    for (const Vec& u : msg.trajectory->inputs) reals += u.size();
  }
  if (msg.stationary.has_value()) {
    reals += msg.stationary->x_s.size() + msg.stationary->u_s.size();
  }
  return reals;
}

}  // namespace

MessageBus::MessageBus(int n_agents)
    : n_agents_(n_agents),
      pending_(n_agents),
      visible_(n_agents),
      send_sequence_(n_agents, 0) {
  if (n_agents < 1) throw std::invalid_argument("MessageBus: need at least one agent");
}

void MessageBus::broadcast(AgentId sender, const SolutionMessage& payload,
                           const std::vector<AgentId>& recipients) {
  if (sender < 0 || sender >= n_agents_)
    throw std::invalid_argument("MessageBus: unknown sender " + std::to_string(sender));
  const std::uint64_t bytes = 8 * payload_reals(payload);

  std::lock_guard<std::mutex> lock(mutex_);
  const std::uint64_t seq = send_sequence_[sender]++;
  for (AgentId r : recipients) {
    if (r < 0 || r >= n_agents_)
      throw std::invalid_argument("MessageBus: unknown recipient " + std::to_string(r));
    if (r == sender)
      throw std::invalid_argument("MessageBus: agent " + std::to_string(sender) +
                                  " may not send to itself");
    pending_[r].push_back(Delivery{sender, seq, payload});
    ++stats_.messages_sent;
    stats_.bytes_estimate += bytes;
  }
}

std::size_t MessageBus::barrier() {
  std::lock_guard<std::mutex> lock(mutex_);
  std::size_t delivered = 0;
  for (int r = 0; r < n_agents_; ++r) {
    // Deterministic inbox order regardless of broadcast interleaving.
    std::sort(pending_[r].begin(), pending_[r].end(), [](const Delivery& a, const Delivery& b) {
      return a.sender != b.sender ? a.sender < b.sender : a.sequence < b.sequence;
    });
    visible_[r] = std::move(pending_[r]);
    pending_[r].clear();
    delivered += visible_[r].size();
  }
  ++stats_.rounds;
  return delivered;
}

const std::vector<MessageBus::Delivery>& MessageBus::inbox(AgentId recipient) const {
  if (recipient < 0 || recipient >= n_agents_)
    throw std::invalid_argument("MessageBus: unknown recipient " + std::to_string(recipient));
  return visible_[recipient];
}

}  // namespace shdempc
