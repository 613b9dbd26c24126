#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>

#include "xdiff/pairlab.hpp"

namespace xdiff::harness {

struct ConstantData {
  double value = 0;
  bool operator==(const ConstantData&) const = default;
};

/// base + amp * exp(-((x - center) / width)^2)
struct BumpData {
  double center = 0.5;
  double width = 0.1;
  double base = 0;
  double amp = 1;
  bool operator==(const BumpData&) const = default;
};

/// base + amp * cos(modes * pi * x)
struct CosineData {
  double base = 1;
  double amp = 0;
  int modes = 1;
  bool operator==(const CosineData&) const = default;
};

/// Whitespace-separated cell values, one per cell. Relative paths resolve against the config file.
struct FileData {
  std::string path;
  bool operator==(const FileData&) const = default;
};

using InitialSpec = std::variant<ConstantData, BumpData, CosineData, FileData>;

enum class ExperimentKind { simulate, pair, converge, weakcheck };
enum class PerturbationShape { bump, cosine, random };
enum class SourceKind { none, mms };

struct ScenarioConfig {
  std::size_t n_cells = 128;
  double t_end = 1.0;
  int output_count = 100;
  InitialSpec u0 = ConstantData{0.0};
  InitialSpec v0 = ConstantData{1.0};
  ModelParams<double> params{};
  StepControl<double> control{};
  ExperimentKind kind = ExperimentKind::simulate;
  double delta = 1e-3;
  PerturbationShape pert_shape = PerturbationShape::bump;
  /// Which initial field receives the perturbation in pair runs.
  bool perturb_v = false;
  SourceKind source = SourceKind::none;
  std::uint64_t seed = 0;
  /// Directory used to resolve relative `file` initial data. Not serialized.
  std::filesystem::path base_dir{};

  bool operator==(const ScenarioConfig& o) const {
    return n_cells == o.n_cells && t_end == o.t_end && output_count == o.output_count && u0 == o.u0 &&
           v0 == o.v0 && params == o.params && control == o.control && kind == o.kind && delta == o.delta &&
           pert_shape == o.pert_shape && perturb_v == o.perturb_v && source == o.source && seed == o.seed;
  }
};

/// Line-oriented `key = value` text; `#` starts a comment. Throws ConfigError naming line and key.
ScenarioConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {});
ScenarioConfig load_config(const std::filesystem::path& path);
/// Inverse of parse_config for every valid config.
std::string serialize_config(const ScenarioConfig& cfg);

/// Cell values of an initial-data spec on a grid.
Field<double> evaluate(const InitialSpec& spec, const Grid<double>& grid, const std::filesystem::path& base_dir);
FieldInit<double> initializer(const InitialSpec& spec, const std::filesystem::path& base_dir);
/// Unit-amplitude perturbation shape; `random` is a seeded smooth cosine series.
FieldInit<double> perturbation(PerturbationShape shape, std::uint64_t seed);

/// Quantities logged for the initial data: h sum 1/(u0 + eps) and h sum ln u0 (may be -inf).
struct InitialDataSummary {
  double inv_u_integral = 0;
  double log_u_integral = 0;
  double min_u = 0;
  double min_v = 0;
};
InitialDataSummary summarize_initial_data(const ScenarioConfig& cfg);

std::string to_string(ExperimentKind kind);
std::string to_string(PerturbationShape shape);

}  // namespace xdiff::harness
