#include "shdempc/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace shdempc {

using nlohmann::json;

namespace {

void reject_unknown_keys(const json& node, const std::set<std::string>& known,
                         const std::string& where) {
  for (const auto& [key, value] : node.items()) {
    if (known.count(key) == 0)
      throw ConfigError("config: unknown key \"" + (where.empty() ? key : where + "." + key) +
                        "\"");
  }
}

template <typename T>
void read_into(const json& node, const char* key, T& out) {
  if (node.contains(key)) {
    try {
      out = node.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError(std::string("config: key \"") + key + "\" has the wrong type");
    }
  }
}

Variant parse_variant(const std::string& text) {
  if (text == "hierarchy") return Variant::hierarchy;
  if (text == "parallel") return Variant::parallel;
  throw ConfigError("config: variant must be \"hierarchy\" or \"parallel\", got \"" + text + "\"");
}

CouplingMode parse_coupling(const std::string& text) {
  if (text == "local") return CouplingMode::local;
  if (text == "cooperative") return CouplingMode::cooperative;
  throw ConfigError("config: coupling must be \"local\" or \"cooperative\", got \"" + text + "\"");
}

HierarchyInit parse_hierarchy_init(const std::string& text) {
  if (text == "all_one") return HierarchyInit::all_one;
  if (text == "universal") return HierarchyInit::universal;
  if (text == "explicit") return HierarchyInit::explicit_levels;
  throw ConfigError("config: hierarchy_init must be \"all_one\", \"universal\" or \"explicit\"");
}

SamplingMode parse_sampling(const std::string& text) {
  if (text == "per_level") return SamplingMode::per_level;
  if (text == "per_iteration") return SamplingMode::per_iteration;
  throw ConfigError("config: sampling_mode must be \"per_level\" or \"per_iteration\"");
}

const char* variant_name(Variant v) { return v == Variant::hierarchy ? "hierarchy" : "parallel"; }
const char* coupling_name(CouplingMode c) {
  return c == CouplingMode::local ? "local" : "cooperative";
}
const char* hierarchy_init_name(HierarchyInit h) {
  switch (h) {
    case HierarchyInit::all_one: return "all_one";
    case HierarchyInit::universal: return "universal";
    default: return "explicit";
  }
}
const char* sampling_name(SamplingMode s) {
  return s == SamplingMode::per_level ? "per_level" : "per_iteration";
}

}  // namespace

void RunConfig::validate() const {
  if (name.empty()) throw ConfigError("config: name must not be empty");
  if (seeds.empty()) throw ConfigError("config: seeds must not be empty");
  if (scaling_agents.empty()) throw ConfigError("config: scaling_agents must not be empty");
  for (int n : scaling_agents) {
    if (n < 1) throw ConfigError("config: scaling_agents entries must be >= 1");
  }
  if (output_dir.empty()) throw ConfigError("config: output_dir must not be empty");
  if (verbosity < 0 || verbosity > 2) throw ConfigError("config: verbosity must be 0, 1 or 2");
  try {
    system.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

RunConfig default_config() { return RunConfig{}; }

RunConfig parse_config_text(const std::string& text) {
  RunConfig config = default_config();
  std::string trimmed = text;
  trimmed.erase(0, trimmed.find_first_not_of(" \t\r\n"));
  if (trimmed.empty()) {
    config.validate();
    return config;
  }

  json root;
  try {
    root = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  if (!root.is_object()) throw ConfigError("config: top-level JSON must be an object");

  reject_unknown_keys(root,
                      {"name", "n_agents", "variant", "n_levels", "n_iterations", "horizon", "dt",
                       "time_steps", "u_bound", "plate", "coupling", "seed", "seeds",
                       "hierarchy_init", "hierarchy_levels", "sampling_mode", "settle_tol",
                       "parallel_solve", "scaling_agents", "solver", "output_dir", "sinks",
                       "verbosity"},
                      "");

  read_into(root, "name", config.name);
  read_into(root, "n_agents", config.system.n_agents);
  if (root.contains("variant")) config.system.variant = parse_variant(root.at("variant"));
  read_into(root, "n_levels", config.system.num_levels);
  read_into(root, "n_iterations", config.system.iterations);
  read_into(root, "horizon", config.system.horizon);
  read_into(root, "dt", config.system.dt);
  read_into(root, "time_steps", config.system.time_steps);
  read_into(root, "u_bound", config.system.u_bound);
  if (root.contains("coupling")) config.system.coupling = parse_coupling(root.at("coupling"));
  if (root.contains("seed")) {
    long long seed = 0;
    read_into(root, "seed", seed);
    if (seed < 0) throw ConfigError("config: seed must be non-negative");
    config.system.seed = static_cast<std::uint64_t>(seed);
  }
  if (root.contains("seeds")) {
    std::vector<long long> seeds;
    read_into(root, "seeds", seeds);
    config.seeds.clear();
    for (long long seed : seeds) {
      if (seed < 0) throw ConfigError("config: seeds must be non-negative");
      config.seeds.push_back(static_cast<std::uint64_t>(seed));
    }
  }
  if (root.contains("hierarchy_init"))
    config.system.hierarchy_init = parse_hierarchy_init(root.at("hierarchy_init"));
  read_into(root, "hierarchy_levels", config.system.explicit_levels);
  if (root.contains("sampling_mode"))
    config.system.sampling_mode = parse_sampling(root.at("sampling_mode"));
  read_into(root, "settle_tol", config.system.settle_tol);
  read_into(root, "parallel_solve", config.system.parallel_solve);
  read_into(root, "scaling_agents", config.scaling_agents);
  read_into(root, "output_dir", config.output_dir);
  read_into(root, "verbosity", config.verbosity);

  if (root.contains("plate")) {
    const json& plate = root.at("plate");
    reject_unknown_keys(plate, {"mass", "spring", "damper", "side"}, "plate");
    read_into(plate, "mass", config.system.plate.mass);
    read_into(plate, "spring", config.system.plate.spring);
    read_into(plate, "damper", config.system.plate.damper);
    read_into(plate, "side", config.system.plate.side);
  }
  if (root.contains("solver")) {
    const json& solver = root.at("solver");
    reject_unknown_keys(solver,
                        {"max_outer", "max_inner", "step_init", "step_shrink", "armijo_c",
                         "tol_grad", "tol_eq", "penalty_init", "penalty_growth", "mu_smooth",
                         "min_accept_step", "min_accept_gain", "probe_min_gain"},
                        "solver");
    read_into(solver, "max_outer", config.system.solver.max_outer);
    read_into(solver, "max_inner", config.system.solver.max_inner);
    read_into(solver, "step_init", config.system.solver.step_init);
    read_into(solver, "step_shrink", config.system.solver.step_shrink);
    read_into(solver, "armijo_c", config.system.solver.armijo_c);
    read_into(solver, "tol_grad", config.system.solver.tol_grad);
    read_into(solver, "tol_eq", config.system.solver.tol_eq);
    read_into(solver, "penalty_init", config.system.solver.penalty_init);
    read_into(solver, "penalty_growth", config.system.solver.penalty_growth);
    read_into(solver, "mu_smooth", config.system.solver.mu_smooth);
    read_into(solver, "min_accept_step", config.system.solver.min_accept_step);
    read_into(solver, "min_accept_gain", config.system.solver.min_accept_gain);
    read_into(solver, "probe_min_gain", config.system.solver.probe_min_gain);
  }
  if (root.contains("sinks")) {
    const json& sinks = root.at("sinks");
    reject_unknown_keys(sinks, {"csv", "plots"}, "sinks");
    read_into(sinks, "csv", config.sink_csv);
    read_into(sinks, "plots", config.sink_plots);
  }

  config.validate();
  return config;
}

RunConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open \"" + path + "\"");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str());
}

std::string config_to_json(const RunConfig& config) {
  json root;
  root["name"] = config.name;
  root["n_agents"] = config.system.n_agents;
  root["variant"] = variant_name(config.system.variant);
  root["n_levels"] = config.system.num_levels;
  root["n_iterations"] = config.system.iterations;
  root["horizon"] = config.system.horizon;
  root["dt"] = config.system.dt;
  root["time_steps"] = config.system.time_steps;
  root["u_bound"] = config.system.u_bound;
  root["coupling"] = coupling_name(config.system.coupling);
  root["plate"] = {{"mass", config.system.plate.mass},
                   {"spring", config.system.plate.spring},
                   {"damper", config.system.plate.damper},
                   {"side", config.system.plate.side}};
  root["seed"] = config.system.seed;
  root["seeds"] = config.seeds;
  root["hierarchy_init"] = hierarchy_init_name(config.system.hierarchy_init);
  if (config.system.hierarchy_init == HierarchyInit::explicit_levels)
    root["hierarchy_levels"] = config.system.explicit_levels;
  root["sampling_mode"] = sampling_name(config.system.sampling_mode);
  root["settle_tol"] = config.system.settle_tol;
  root["parallel_solve"] = config.system.parallel_solve;
  root["scaling_agents"] = config.scaling_agents;
  root["solver"] = {{"max_outer", config.system.solver.max_outer},
                    {"max_inner", config.system.solver.max_inner},
                    {"step_init", config.system.solver.step_init},
                    {"step_shrink", config.system.solver.step_shrink},
                    {"armijo_c", config.system.solver.armijo_c},
                    {"tol_grad", config.system.solver.tol_grad},
                    {"tol_eq", config.system.solver.tol_eq},
                    {"penalty_init", config.system.solver.penalty_init},
                    {"penalty_growth", config.system.solver.penalty_growth},
                    {"mu_smooth", config.system.solver.mu_smooth},
                    {"min_accept_step", config.system.solver.min_accept_step},
                    {"min_accept_gain", config.system.solver.min_accept_gain},
                    {"probe_min_gain", config.system.solver.probe_min_gain}};
  root["output_dir"] = config.output_dir;
  root["sinks"] = {{"csv", config.sink_csv}, {"plots", config.sink_plots}};
  root["verbosity"] = config.verbosity;
  return root.dump(2) + "\n";
}

}  // namespace shdempc
