#include "xdiff/harness/csv.hpp"

#include <cstdio>
#include <sstream>

namespace xdiff::harness {

namespace {

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

CsvWriter::CsvWriter(const std::filesystem::path& path, std::vector<std::string> header)
    : out_(path), header_(std::move(header)), path_(path) {
  if (!out_) throw std::runtime_error("cannot write " + path.string());
  for (std::size_t k = 0; k < header_.size(); ++k) out_ << (k ? "," : "") << header_[k];
  out_ << '\n';
}

void CsvWriter::row(std::initializer_list<double> values) { row(std::vector<double>(values)); }

void CsvWriter::row(const std::vector<double>& values) {
  if (values.size() != header_.size()) {
    throw ContractViolation(path_.string() + ": row has " + std::to_string(values.size()) + " fields, header has " +
                            std::to_string(header_.size()));
  }
  for (std::size_t k = 0; k < values.size(); ++k) out_ << (k ? "," : "") << fmt(values[k]);
  out_ << '\n';
}

void write_diagnostics_csv(const std::filesystem::path& path, const std::vector<DiagnosticsRecord<double>>& rows) {
  CsvWriter w(path, kDiagnosticsColumns);
  for (const auto& r : rows) {
    w.row({r.t, r.mass_total, r.mass_u, r.mass_v, r.min_u, r.min_v, r.max_u, r.max_v, r.inv_u_entropy,
           r.v_dissipation});
  }
}

void write_pair_csv(const std::filesystem::path& path, const GronwallReport<double>& report) {
  CsvWriter w(path, kPairColumns);
  for (std::size_t k = 0; k < report.series.size(); ++k) {
    const auto& e = report.series[k];
    w.row({e.t, e.E_w, e.E_v, e.D_u, e.D_v, e.E_w + e.E_v, report.ratio_series[k]});
  }
}

std::vector<std::filesystem::path> write_field_dumps(const std::filesystem::path& dir, const std::string& prefix,
                                                     const Trajectory<double>& traj, const Grid<double>& grid) {
  std::vector<std::filesystem::path> paths;
  for (std::size_t k = 0; k < traj.states.size(); ++k) {
    char name[64];
    std::snprintf(name, sizeof name, "%s_%05zu.csv", prefix.c_str(), k);
    const auto path = dir / name;
    CsvWriter w(path, {"x", "u", "v"});
    const auto& s = traj.states[k];
    for (Eigen::Index i = 0; i < grid.size(); ++i) w.row({grid.center(i), s.u[i], s.v[i]});
    paths.push_back(path);
  }
  return paths;
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) return table;
  {
    std::istringstream hs(line);
    for (std::string cell; std::getline(hs, cell, ',');) table.header.push_back(cell);
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::istringstream rs(line);
    for (std::string cell; std::getline(rs, cell, ',');) row.push_back(std::stod(cell));
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace xdiff::harness
