#pragma once

#include <string>
#include <vector>

#include "shdempc/config.hpp"
#include "shdempc/metrics.hpp"

namespace shdempc {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// 17 significant digits: parsing the text recovers the double exactly.
std::string format_double(double value);

/// Writes the metric files for one run into the directory (created if
/// absent) and returns the paths written:
///   trace.csv   time_step,phase,iteration,agent,level,conflict,V_hat,V_breve
///   global.csv  sample,V,cumulative_mutations,mean_target
///   final.csv   agent,position,level
///   config.json fully-resolved configuration echo
/// plus one plot script per figure analogue when the plot sink is enabled.
std::vector<std::string> emit_metrics(const RunMetrics& metrics, const RunConfig& config,
                                      const std::string& directory);

// Read-back used by the audit command and the round-trip tests.
std::vector<TraceRow> read_trace_csv(const std::string& path);
std::vector<GlobalSample> read_global_csv(const std::string& path);
std::vector<FinalRow> read_final_csv(const std::string& path);

}  // namespace shdempc
