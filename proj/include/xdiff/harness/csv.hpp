#pragma once

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <string>
#include <vector>

#include "xdiff/pairlab.hpp"

namespace xdiff::harness {

/// Comma-separated writer with a fixed header; every row must match the header width.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, std::vector<std::string> header);
  void row(std::initializer_list<double> values);
  void row(const std::vector<double>& values);
  std::size_t width() const { return header_.size(); }

 private:
  std::ofstream out_;
  std::vector<std::string> header_;
  std::filesystem::path path_;
};

inline const std::vector<std::string> kDiagnosticsColumns{"t",     "mass_total", "mass_u",        "mass_v",
                                                          "min_u", "min_v",      "max_u",         "max_v",
                                                          "inv_u_entropy",       "v_dissipation"};
inline const std::vector<std::string> kPairColumns{"t", "E_w", "E_v", "D_u", "D_v", "E_total", "gronwall_ratio"};

void write_diagnostics_csv(const std::filesystem::path& path, const std::vector<DiagnosticsRecord<double>>& rows);
void write_pair_csv(const std::filesystem::path& path, const GronwallReport<double>& report);
/// One file per snapshot: columns x, u, v.
std::vector<std::filesystem::path> write_field_dumps(const std::filesystem::path& dir, const std::string& prefix,
                                                     const Trajectory<double>& traj, const Grid<double>& grid);

/// Minimal reader used by tests and verify: header plus numeric rows.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};
CsvTable read_csv(const std::filesystem::path& path);

}  // namespace xdiff::harness
