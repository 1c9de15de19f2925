#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "shdempc/coordinator.hpp"

namespace shdempc {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Everything a run needs, plus output and sink switches. The `system`
/// block is what the coordinator consumes; `seeds` drives the multi-run
/// experiments while `system.seed` is used by single runs.
struct RunConfig {
  std::string name = "plate10";
  SystemConfig system;
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  std::vector<int> scaling_agents = {10, 20, 40, 80};
  std::string output_dir = "out";
  bool sink_csv = true;
  bool sink_plots = false;
  int verbosity = 1;

  void validate() const;
};

/// The paper-default configuration: ten plates, N_q = 2, N_p = 5, H = 5,
/// dt = 1 s, |u| <= 0.25 N, unit plate parameters, L = 0.25 m.
RunConfig default_config();

/// Strict JSON parse: unknown keys are rejected with a message naming the
/// key, values are validated against their constraints. An empty file (or
/// empty object) yields the full default configuration.
RunConfig parse_config(const std::string& path);
RunConfig parse_config_text(const std::string& text);

/// Fully-resolved echo of a configuration, sufficient to reproduce the run.
std::string config_to_json(const RunConfig& config);

}  // namespace shdempc
