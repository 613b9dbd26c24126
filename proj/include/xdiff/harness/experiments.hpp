#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "xdiff/harness/config.hpp"

namespace xdiff::harness {

struct RunOptions {
  std::filesystem::path out_dir = ".";
  std::optional<double> delta;
  std::optional<double> epsilon;
  bool dump_fields = false;
  bool quiet = false;
};

struct RunReport {
  int exit_status = 0;
  std::vector<std::filesystem::path> csv_paths;
  std::map<std::string, double> summary;
  std::string summary_line;
};

/// Applies --delta / --epsilon overrides to a parsed config.
ScenarioConfig apply_overrides(ScenarioConfig cfg, const RunOptions& opts);

RunReport simulate(const ScenarioConfig& cfg, const RunOptions& opts);
RunReport pair(const ScenarioConfig& cfg, const RunOptions& opts);
RunReport converge(const ScenarioConfig& cfg, const RunOptions& opts);
RunReport weakcheck(const ScenarioConfig& cfg, const RunOptions& opts);
RunReport run_experiment(const ScenarioConfig& cfg, ExperimentKind kind, const RunOptions& opts);

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Built-in invariant suite over the shipped scenarios. Prints one line per check unless quiet.
std::vector<CheckResult> verify(std::ostream& log, bool quiet);

}  // namespace xdiff::harness
