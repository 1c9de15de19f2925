#include "shdempc/csv_io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace shdempc {

namespace fs = std::filesystem;

std::string format_double(double value) {
  char buffer[40];
  std::snprintf(buffer, sizeof buffer, "%.17g", value);
  return buffer;
}

namespace {

const char* phase_name(Phase phase) {
  return phase == Phase::stationary ? "stationary" : "trajectory";
}

Phase parse_phase(const std::string& text) {
  if (text == "stationary") return Phase::stationary;
  if (text == "trajectory") return Phase::trajectory;
  throw IoError("csv: unknown phase \"" + text + "\"");
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);  // fixed newlines on every platform
  if (!out) throw IoError("cannot write \"" + path + "\"");
  return out;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream stream(line);
  std::string field;
  while (std::getline(stream, field, ',')) fields.push_back(field);
  return fields;
}

std::vector<std::vector<std::string>> read_rows(const std::string& path,
                                                const std::string& expected_header) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read \"" + path + "\"");
  std::string line;
  if (!std::getline(in, line)) throw IoError("\"" + path + "\" is empty");
  if (line != expected_header)
    throw IoError("\"" + path + "\": unexpected header \"" + line + "\"");
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (!line.empty()) rows.push_back(split_csv_line(line));
  }
  return rows;
}

// Plot generation is a separate post-processing step so the core stays free
// of plotting dependencies; the emitted scripts read the CSVs beside them.
struct PlotScript {
  const char* file;
  const char* body;
};

const PlotScript kPlotScripts[] = {
    {"plot_global_cost.py", R"py(#!/usr/bin/env python3
"""Global cost over the sample index (one line per run directory given)."""
import csv, os, sys
import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

dirs = sys.argv[1:] or [os.path.dirname(os.path.abspath(__file__))]
for d in dirs:
    with open(os.path.join(d, "global.csv")) as f:
        rows = list(csv.DictReader(f))
    plt.plot([int(r["sample"]) for r in rows], [float(r["V"]) for r in rows],
             label=os.path.basename(os.path.normpath(d)))
plt.xlabel("sample")
plt.ylabel("global cost V")
plt.legend()
plt.tight_layout()
plt.savefig(os.path.join(dirs[0], "global_cost.png"), dpi=150)
)py"},
    {"plot_hierarchy_changes.py", R"py(#!/usr/bin/env python3
"""Cumulative hierarchy level changes over the sample index."""
import csv, os, sys
import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

dirs = sys.argv[1:] or [os.path.dirname(os.path.abspath(__file__))]
for d in dirs:
    with open(os.path.join(d, "global.csv")) as f:
        rows = list(csv.DictReader(f))
    plt.step([int(r["sample"]) for r in rows],
             [int(r["cumulative_mutations"]) for r in rows], where="post",
             label=os.path.basename(os.path.normpath(d)))
plt.xlabel("sample")
plt.ylabel("cumulative hierarchy changes")
plt.legend()
plt.tight_layout()
plt.savefig(os.path.join(dirs[0], "hierarchy_changes.png"), dpi=150)
)py"},
    {"plot_mean_target.py", R"py(#!/usr/bin/env python3
"""Mean stationary target position over the sample index."""
import csv, os, sys
import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

dirs = sys.argv[1:] or [os.path.dirname(os.path.abspath(__file__))]
for d in dirs:
    with open(os.path.join(d, "global.csv")) as f:
        rows = list(csv.DictReader(f))
    plt.plot([int(r["sample"]) for r in rows], [float(r["mean_target"]) for r in rows],
             label=os.path.basename(os.path.normpath(d)))
plt.xlabel("sample")
plt.ylabel("mean stationary target (m)")
plt.legend()
plt.tight_layout()
plt.savefig(os.path.join(dirs[0], "mean_target.png"), dpi=150)
)py"},
    {"plot_final_positions.py", R"py(#!/usr/bin/env python3
"""Final plate positions, colored by hierarchy level."""
import csv, os, sys
import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

d = sys.argv[1] if len(sys.argv) > 1 else os.path.dirname(os.path.abspath(__file__))
with open(os.path.join(d, "final.csv")) as f:
    rows = list(csv.DictReader(f))
agents = [int(r["agent"]) for r in rows]
positions = [float(r["position"]) for r in rows]
levels = [int(r["level"]) for r in rows]
plt.scatter(agents, positions, c=levels, cmap="coolwarm", s=80)
plt.colorbar(label="hierarchy level")
plt.xlabel("agent")
plt.ylabel("position (m)")
plt.tight_layout()
plt.savefig(os.path.join(d, "final_positions.png"), dpi=150)
)py"},
};

}  // namespace

std::vector<std::string> emit_metrics(const RunMetrics& metrics, const RunConfig& config,
                                      const std::string& directory) {
  std::error_code ec;
  fs::create_directories(directory, ec);
  if (ec) throw IoError("cannot create \"" + directory + "\": " + ec.message());

  std::vector<std::string> written;
  if (config.sink_csv) {
    {
      const std::string path = (fs::path(directory) / "trace.csv").string();
      std::ofstream out = open_out(path);
      out << "time_step,phase,iteration,agent,level,conflict,V_hat,V_breve\n";
      for (const TraceRow& row : metrics.trace) {
        out << row.time_step << ',' << phase_name(row.phase) << ',' << row.iteration << ','
            << row.agent << ',' << row.level << ',' << (row.conflict ? 1 : 0) << ','
            << format_double(row.v_hat) << ',' << format_double(row.v_breve) << '\n';
      }
      written.push_back(path);
    }
    {
      const std::string path = (fs::path(directory) / "global.csv").string();
      std::ofstream out = open_out(path);
      out << "sample,V,cumulative_mutations,mean_target\n";
      for (const GlobalSample& sample : metrics.samples) {
        out << sample.sample << ',' << format_double(sample.global_cost) << ','
            << sample.cumulative_mutations << ',' << format_double(sample.mean_target) << '\n';
      }
      written.push_back(path);
    }
    {
      const std::string path = (fs::path(directory) / "final.csv").string();
      std::ofstream out = open_out(path);
      out << "agent,position,level\n";
      for (const FinalRow& row : metrics.finals) {
        out << row.agent << ',' << format_double(row.position) << ',' << row.level << '\n';
      }
      written.push_back(path);
    }
  }

  {
    const std::string path = (fs::path(directory) / "config.json").string();
    std::ofstream out = open_out(path);
    out << config_to_json(config);
    written.push_back(path);
  }

  if (config.sink_plots) {
    for (const PlotScript& script : kPlotScripts) {
      const std::string path = (fs::path(directory) / script.file).string();
      std::ofstream out = open_out(path);
      out << script.body;
      written.push_back(path);
    }
  }
  return written;
}

std::vector<TraceRow> read_trace_csv(const std::string& path) {
  std::vector<TraceRow> rows;
  for (const auto& fields : read_rows(path, "time_step,phase,iteration,agent,level,conflict,V_hat,V_breve")) {
    if (fields.size() != 8) throw IoError("\"" + path + "\": malformed row");
    TraceRow row;
    row.time_step = std::stoi(fields[0]);
    row.phase = parse_phase(fields[1]);
    row.iteration = std::stoi(fields[2]);
    row.agent = std::stoi(fields[3]);
    row.level = std::stoi(fields[4]);
    row.conflict = fields[5] == "1";
    row.v_hat = std::stod(fields[6]);
    row.v_breve = std::stod(fields[7]);
    rows.push_back(row);
  }
  return rows;
}

std::vector<GlobalSample> read_global_csv(const std::string& path) {
  std::vector<GlobalSample> rows;
  for (const auto& fields : read_rows(path, "sample,V,cumulative_mutations,mean_target")) {
    if (fields.size() != 4) throw IoError("\"" + path + "\": malformed row");
    GlobalSample sample;
    sample.sample = std::stol(fields[0]);
    sample.global_cost = std::stod(fields[1]);
    sample.cumulative_mutations = std::stoull(fields[2]);
    sample.mean_target = std::stod(fields[3]);
    rows.push_back(sample);
  }
  return rows;
}

std::vector<FinalRow> read_final_csv(const std::string& path) {
  std::vector<FinalRow> rows;
  for (const auto& fields : read_rows(path, "agent,position,level")) {
    if (fields.size() != 3) throw IoError("\"" + path + "\": malformed row");
    FinalRow row;
    row.agent = std::stoi(fields[0]);
    row.position = std::stod(fields[1]);
    row.level = std::stoi(fields[2]);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace shdempc
