#pragma once

#include <cstdint>
#include <mutex>
#include <vector>

#include "shdempc/objective.hpp"

namespace shdempc {

/// Trajectory and/or stationary pair in flight between agents. Level-loop
/// exchanges carry one of the two; full protocol rounds carry both.
struct SolutionMessage {
  std::optional<Trajectory> trajectory;
  std::optional<StationaryPoint> stationary;
};

struct BusStats {
  std::uint64_t messages_sent = 0;
  std::uint64_t rounds = 0;
  std::uint64_t bytes_estimate = 0;  // 8 bytes per payload real
};

/// Synchronous round-based in-process message bus. Messages enqueued by
/// broadcast() become readable only after the next barrier(); inboxes are
/// ordered by sender id so downstream computation is schedule-independent.
/// broadcast() and barrier() may be called from multiple threads; inbox
/// reads are safe between barriers.
class MessageBus {
 public:
  explicit MessageBus(int n_agents);

  void broadcast(AgentId sender, const SolutionMessage& payload,
                 const std::vector<AgentId>& recipients);

  /// Closes the round: all pending messages become readable. Returns the
  /// number of messages delivered.
  std::size_t barrier();

  struct Delivery {
    AgentId sender = 0;
    std::uint64_t sequence = 0;  // per-sender FIFO order
    SolutionMessage payload;
  };

  /// Messages delivered to this agent at the last barrier, sorted by
  /// (sender id, sequence).
  const std::vector<Delivery>& inbox(AgentId recipient) const;

  const BusStats& stats() const { return stats_; }

 private:
  int n_agents_;
  std::mutex mutex_;
  std::vector<std::vector<Delivery>> pending_;
  std::vector<std::vector<Delivery>> visible_;
  std::vector<std::uint64_t> send_sequence_;
  BusStats stats_;
};

}  // namespace shdempc
