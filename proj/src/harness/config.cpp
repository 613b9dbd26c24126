#include "xdiff/harness/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <vector>

namespace xdiff::harness {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_words(const std::string& s) {
  std::istringstream is(s);
  std::vector<std::string> out;
  for (std::string w; is >> w;) out.push_back(w);
  return out;
}

std::string fmt_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

class LineError {
 public:
  LineError(int line, std::string key) : line_(line), key_(std::move(key)) {}
  [[noreturn]] void fail(const std::string& msg) const {
    throw ConfigError("line " + std::to_string(line_) + ": " + key_ + ": " + msg);
  }

 private:
  int line_;
  std::string key_;
};

double parse_double(const std::string& word, const LineError& where) {
  double x = 0;
  const auto* first = word.data();
  const auto* last = word.data() + word.size();
  auto [ptr, ec] = std::from_chars(first, last, x);
  if (ec != std::errc() || ptr != last || !std::isfinite(x)) where.fail("expected a finite number, got '" + word + "'");
  return x;
}

long long parse_integer(const std::string& word, const LineError& where) {
  long long x = 0;
  auto [ptr, ec] = std::from_chars(word.data(), word.data() + word.size(), x);
  if (ec != std::errc() || ptr != word.data() + word.size()) where.fail("expected an integer, got '" + word + "'");
  return x;
}

double single_double(const std::string& value, const LineError& where) {
  const auto words = split_words(value);
  if (words.size() != 1) where.fail("expected exactly one value");
  return parse_double(words[0], where);
}

long long single_integer(const std::string& value, const LineError& where) {
  const auto words = split_words(value);
  if (words.size() != 1) where.fail("expected exactly one value");
  return parse_integer(words[0], where);
}

void require_range(bool ok, const LineError& where, const std::string& range) {
  if (!ok) where.fail("value out of range, expected " + range);
}

InitialSpec parse_initial(const std::string& value, const LineError& where) {
  const auto words = split_words(value);
  if (words.empty()) where.fail("missing initial-data kind");
  const std::string& kind = words[0];
  auto arity = [&](std::size_t n, const char* usage) {
    if (words.size() != n + 1) where.fail(std::string("usage: ") + usage);
  };
  if (kind == "constant") {
    arity(1, "constant VALUE");
    return ConstantData{parse_double(words[1], where)};
  }
  if (kind == "bump") {
    arity(4, "bump CENTER WIDTH BASE AMP");
    BumpData b{parse_double(words[1], where), parse_double(words[2], where), parse_double(words[3], where),
               parse_double(words[4], where)};
    require_range(b.width > 0, where, "bump width > 0");
    return b;
  }
  if (kind == "cosine") {
    arity(3, "cosine BASE AMP MODES");
    const long long modes = parse_integer(words[3], where);
    require_range(modes >= 0 && modes <= 100000, where, "cosine modes in [0, 100000]");
    return CosineData{parse_double(words[1], where), parse_double(words[2], where), static_cast<int>(modes)};
  }
  if (kind == "file") {
    arity(1, "file PATH");
    return FileData{words[1]};
  }
  where.fail("unknown initial-data kind '" + kind + "' (constant | bump | cosine | file)");
}

std::string serialize_initial(const InitialSpec& spec) {
  struct Visitor {
    std::string operator()(const ConstantData& c) const { return "constant " + fmt_double(c.value); }
    std::string operator()(const BumpData& b) const {
      return "bump " + fmt_double(b.center) + " " + fmt_double(b.width) + " " + fmt_double(b.base) + " " +
             fmt_double(b.amp);
    }
    std::string operator()(const CosineData& c) const {
      return "cosine " + fmt_double(c.base) + " " + fmt_double(c.amp) + " " + std::to_string(c.modes);
    }
    std::string operator()(const FileData& f) const { return "file " + f.path; }
  };
  return std::visit(Visitor{}, spec);
}

template <typename Enum>
Enum parse_enum(const std::string& value, const std::map<std::string, Enum>& names, const LineError& where) {
  const std::string v = trim(value);
  const auto it = names.find(v);
  if (it == names.end()) {
    std::string options;
    for (const auto& [k, _] : names) options += (options.empty() ? "" : " | ") + k;
    where.fail("unknown value '" + v + "', expected " + options);
  }
  return it->second;
}

const std::map<std::string, ExperimentKind> kKinds{{"simulate", ExperimentKind::simulate},
                                                   {"pair", ExperimentKind::pair},
                                                   {"converge", ExperimentKind::converge},
                                                   {"weakcheck", ExperimentKind::weakcheck}};
const std::map<std::string, PerturbationShape> kShapes{
    {"bump", PerturbationShape::bump}, {"cosine", PerturbationShape::cosine}, {"random", PerturbationShape::random}};
const std::map<std::string, FluxMean> kMeans{{"arithmetic", FluxMean::arithmetic}, {"harmonic", FluxMean::harmonic}};
const std::map<std::string, TaxisScheme> kTaxis{{"centered", TaxisScheme::centered},
                                                {"upwind", TaxisScheme::upwind}};
const std::map<std::string, SourceKind> kSources{{"none", SourceKind::none}, {"mms", SourceKind::mms}};
const std::map<std::string, bool> kPertField{{"u", false}, {"v", true}};

template <typename Enum>
std::string enum_name(Enum e, const std::map<std::string, Enum>& names) {
  for (const auto& [k, v] : names) {
    if (v == e) return k;
  }
  return "?";
}

}  // namespace

std::string to_string(ExperimentKind kind) { return enum_name(kind, kKinds); }
std::string to_string(PerturbationShape shape) { return enum_name(shape, kShapes); }

Field<double> evaluate(const InitialSpec& spec, const Grid<double>& grid, const std::filesystem::path& base_dir) {
  const Eigen::Index n = grid.size();
  Field<double> f(n);
  if (const auto* c = std::get_if<ConstantData>(&spec)) {
    f.setConstant(c->value);
  } else if (const auto* b = std::get_if<BumpData>(&spec)) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double z = (grid.center(i) - b->center) / b->width;
      f[i] = b->base + b->amp * std::exp(-z * z);
    }
  } else if (const auto* cs = std::get_if<CosineData>(&spec)) {
    for (Eigen::Index i = 0; i < n; ++i) {
      f[i] = cs->base + cs->amp * std::cos(cs->modes * std::numbers::pi * grid.center(i));
    }
  } else {
    const auto& file = std::get<FileData>(spec);
    std::filesystem::path path(file.path);
    if (path.is_relative() && !base_dir.empty()) path = base_dir / path;
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open initial-data file " + path.string());
    std::vector<double> values;
    for (double x; in >> x;) values.push_back(x);
    if (!in.eof()) throw ConfigError("initial-data file " + path.string() + " contains a non-numeric token");
    if (values.size() != grid.n_cells()) {
      throw ConfigError("initial-data file " + path.string() + " has " + std::to_string(values.size()) +
                        " values, grid has " + std::to_string(grid.n_cells()) + " cells");
    }
    for (Eigen::Index i = 0; i < n; ++i) f[i] = values[static_cast<std::size_t>(i)];
  }
  return f;
}

FieldInit<double> initializer(const InitialSpec& spec, const std::filesystem::path& base_dir) {
  return [spec, base_dir](const Grid<double>& grid) { return evaluate(spec, grid, base_dir); };
}

FieldInit<double> perturbation(PerturbationShape shape, std::uint64_t seed) {
  switch (shape) {
    case PerturbationShape::bump:
      return initializer(BumpData{0.3, 0.05, 0.0, 1.0}, {});
    case PerturbationShape::cosine:
      return initializer(CosineData{0.0, 1.0, 2}, {});
    case PerturbationShape::random:
      break;
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coeff(-1.0, 1.0);
  std::vector<double> a(4);
  for (auto& x : a) x = coeff(rng);
  return [a](const Grid<double>& grid) {
    Field<double> f(grid.size());
    for (Eigen::Index i = 0; i < grid.size(); ++i) {
      double s = 0;
      for (std::size_t k = 0; k < a.size(); ++k) {
        s += a[k] * std::cos(static_cast<double>(k + 1) * std::numbers::pi * grid.center(i)) / static_cast<double>(k + 1);
      }
      f[i] = s;
    }
    const double peak = f.cwiseAbs().maxCoeff();
    if (peak > 0) f /= peak;
    return f;
  };
}

InitialDataSummary summarize_initial_data(const ScenarioConfig& cfg) {
  const Grid<double> grid(cfg.n_cells);
  const Field<double> u = evaluate(cfg.u0, grid, cfg.base_dir);
  const Field<double> v = evaluate(cfg.v0, grid, cfg.base_dir);
  InitialDataSummary s;
  s.min_u = u.minCoeff();
  s.min_v = v.minCoeff();
  s.inv_u_integral = inv_u_entropy(u, grid, cfg.params.epsilon_reg);
  s.log_u_integral = integrate(u.array().log().matrix(), grid);
  return s;
}

ScenarioConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
  ScenarioConfig cfg;
  cfg.base_dir = base_dir;
  std::map<std::string, int> seen;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = raw;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value', got '" + line + "'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const LineError where(line_no, key.empty() ? "<empty key>" : key);
    if (seen.count(key)) where.fail("duplicate key (first set on line " + std::to_string(seen[key]) + ")");
    seen[key] = line_no;
    if (value.empty()) where.fail("missing value");

    if (key == "n_cells") {
      const auto n = single_integer(value, where);
      require_range(n >= 2 && n <= 10'000'000, where, "an integer in [2, 1e7]");
      cfg.n_cells = static_cast<std::size_t>(n);
    } else if (key == "t_end") {
      cfg.t_end = single_double(value, where);
      require_range(cfg.t_end >= 0 && cfg.t_end <= 1e6, where, "t_end in [0, 1e6]");
    } else if (key == "output_count") {
      const auto n = single_integer(value, where);
      require_range(n >= 1 && n <= 10'000'000, where, "an integer in [1, 1e7]");
      cfg.output_count = static_cast<int>(n);
    } else if (key == "dt_init") {
      cfg.control.dt_init = single_double(value, where);
      require_range(cfg.control.dt_init > 0, where, "dt_init > 0");
    } else if (key == "dt_min") {
      cfg.control.dt_min = single_double(value, where);
      require_range(cfg.control.dt_min > 0, where, "dt_min > 0");
    } else if (key == "dt_max") {
      cfg.control.dt_max = single_double(value, where);
      require_range(cfg.control.dt_max > 0, where, "dt_max > 0");
    } else if (key == "newton_tol") {
      cfg.control.newton_tol = single_double(value, where);
      require_range(cfg.control.newton_tol > 0 && cfg.control.newton_tol <= 1e-2, where, "newton_tol in (0, 1e-2]");
    } else if (key == "newton_max_iter") {
      const auto n = single_integer(value, where);
      require_range(n >= 1 && n <= 1000, where, "an integer in [1, 1000]");
      cfg.control.newton_max_iter = static_cast<int>(n);
    } else if (key == "epsilon_reg") {
      cfg.params.epsilon_reg = single_double(value, where);
      require_range(cfg.params.epsilon_reg >= 0 && cfg.params.epsilon_reg <= 1e-2, where, "epsilon_reg in [0, 1e-2]");
    } else if (key == "flux_mean") {
      cfg.params.flux_mean = parse_enum(value, kMeans, where);
    } else if (key == "taxis_scheme") {
      cfg.params.taxis_scheme = parse_enum(value, kTaxis, where);
    } else if (key == "u0") {
      cfg.u0 = parse_initial(value, where);
    } else if (key == "v0") {
      cfg.v0 = parse_initial(value, where);
    } else if (key == "kind") {
      cfg.kind = parse_enum(value, kKinds, where);
    } else if (key == "delta") {
      cfg.delta = single_double(value, where);
      require_range(cfg.delta >= 0 && cfg.delta <= 1, where, "delta in [0, 1]");
    } else if (key == "pert_shape") {
      cfg.pert_shape = parse_enum(value, kShapes, where);
    } else if (key == "pert_field") {
      cfg.perturb_v = parse_enum(value, kPertField, where);
    } else if (key == "source") {
      cfg.source = parse_enum(value, kSources, where);
    } else if (key == "seed") {
      const auto s = single_integer(value, where);
      require_range(s >= 0, where, "a nonnegative integer");
      cfg.seed = static_cast<std::uint64_t>(s);
    } else {
      where.fail("unknown key");
    }
  }

  auto line_of = [&](const std::string& key) { return seen.count(key) ? seen[key] : 0; };
  for (const char* key : {"u0", "v0"}) {
    if (!seen.count(key)) throw ConfigError(std::string("missing required key ") + key);
  }
  if (!seen.count("dt_init")) {
    cfg.control.dt_init = std::max(cfg.control.dt_min, std::min(cfg.control.dt_init, cfg.control.dt_max));
  }
  try {
    cfg.control.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("step control: ") + e.what());
  }

  const Grid<double> grid(cfg.n_cells);
  const LineError u_where(line_of("u0"), "u0");
  const LineError v_where(line_of("v0"), "v0");
  Field<double> u, v;
  try {
    u = evaluate(cfg.u0, grid, cfg.base_dir);
  } catch (const ConfigError& e) {
    u_where.fail(e.what());
  }
  try {
    v = evaluate(cfg.v0, grid, cfg.base_dir);
  } catch (const ConfigError& e) {
    v_where.fail(e.what());
  }
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (!(v[i] > 0) || !std::isfinite(v[i])) {
      v_where.fail("initial nutrient must be strictly positive on the closed domain (v0 > 0), got " +
                   fmt_double(v[i]) + " at x = " + fmt_double(grid.center(i)));
    }
  }
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    if (!(u[i] >= 0) || !std::isfinite(u[i])) {
      u_where.fail("initial population must be nonnegative (u0 >= 0), got " + fmt_double(u[i]) + " at x = " +
                   fmt_double(grid.center(i)));
    }
  }
  const double inv = inv_u_entropy(u, grid, cfg.params.epsilon_reg);
  if (!std::isfinite(inv)) {
    u_where.fail("discrete integral of 1/(u0 + epsilon_reg) is not finite; raise epsilon_reg or keep u0 > 0");
  }
  return cfg;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.parent_path());
}

std::string serialize_config(const ScenarioConfig& cfg) {
  std::ostringstream os;
  os << "n_cells = " << cfg.n_cells << "\n"
     << "t_end = " << fmt_double(cfg.t_end) << "\n"
     << "output_count = " << cfg.output_count << "\n"
     << "dt_init = " << fmt_double(cfg.control.dt_init) << "\n"
     << "dt_min = " << fmt_double(cfg.control.dt_min) << "\n"
     << "dt_max = " << fmt_double(cfg.control.dt_max) << "\n"
     << "newton_tol = " << fmt_double(cfg.control.newton_tol) << "\n"
     << "newton_max_iter = " << cfg.control.newton_max_iter << "\n"
     << "epsilon_reg = " << fmt_double(cfg.params.epsilon_reg) << "\n"
     << "flux_mean = " << enum_name(cfg.params.flux_mean, kMeans) << "\n"
     << "taxis_scheme = " << enum_name(cfg.params.taxis_scheme, kTaxis) << "\n"
     << "u0 = " << serialize_initial(cfg.u0) << "\n"
     << "v0 = " << serialize_initial(cfg.v0) << "\n"
     << "kind = " << enum_name(cfg.kind, kKinds) << "\n"
     << "delta = " << fmt_double(cfg.delta) << "\n"
     << "pert_shape = " << enum_name(cfg.pert_shape, kShapes) << "\n"
     << "pert_field = " << (cfg.perturb_v ? "v" : "u") << "\n"
     << "source = " << enum_name(cfg.source, kSources) << "\n"
     << "seed = " << cfg.seed << "\n";
  return os.str();
}

}  // namespace xdiff::harness
