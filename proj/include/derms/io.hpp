#pragma once

#include <map>
#include <string>
#include <vector>

#include "derms/oracle.hpp"
#include "derms/services.hpp"
#include "derms/sim.hpp"

namespace derms {

/// Thrown for malformed configuration input; the CLI maps exception types to
/// its error categories.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Network description file (JSON; SI units). Field names documented in the
/// README under "File formats".
NetworkModel network_from_json_file(const std::string& path);

/// Scenario file (JSON). May reference a built-in by name instead:
/// resolve_scenario() accepts either a catalog name or a path.
Scenario scenario_from_json_file(const std::string& path);
Scenario resolve_scenario(const std::string& name_or_path, RunMode mode, std::uint64_t seed);

/// `--set key=value` override; throws ConfigError on unknown keys. Keys are
/// documented in the README ("Overrides").
void apply_override(Scenario& sc, const std::string& key, const std::string& value);

/// Profile CSV: header line, then timestamp_s,value rows at a fixed spacing.
Profile profile_from_csv_file(const std::string& path);

/// Oracle instance file (JSON) for the `oracle` subcommand.
CentralInstance central_instance_from_json_file(const std::string& path);

struct ServiceReport {
  std::string id;
  ViolationMetrics metrics;
  double final_beta = 0.0;
};

struct RunReport {
  int schema_version = 1;
  std::string scenario_id;
  std::string mode;
  std::uint64_t seed = 0;
  bool completed = false;
  std::string diagnostic;
  long ticks = 0;
  double runtime_s = 0.0;
  std::vector<ServiceReport> services;
  std::map<std::string, double> final_alpha;  // per device
  std::string trajectory_csv;
  std::string summary_json;
};

RunReport make_report(const Scenario& sc, const Trajectory& tr, double runtime_s);

void write_trajectory_csv(const Trajectory& tr, double base_power_w, const std::string& path);
void write_report_json(const RunReport& report, const std::string& path);
RunReport report_from_json_file(const std::string& path);

/// Side-by-side delta table of two runs of the same scenario; human-readable
/// text plus a machine-readable JSON string. Throws ConfigError when the
/// reports describe different scenarios.
struct Comparison {
  std::string text;
  std::string json;
};
Comparison compare_reports(const RunReport& a, const RunReport& b);

}  // namespace derms
