#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include <unistd.h>

#include <gtest/gtest.h>

#include "test_support.hpp"
#include "xdiff/harness/cli.hpp"
#include "xdiff/harness/csv.hpp"
#include "xdiff/harness/experiments.hpp"
#include "xdiff/harness/parallel.hpp"
#include "xdiff/harness/scenarios.hpp"

using namespace xdiff;
using namespace xdiff::harness;
namespace fs = std::filesystem;

namespace {

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = fs::temp_directory_path() /
            ("xdiff_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string config_error(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

int cli(std::vector<std::string> args) {
  args.insert(args.begin(), "xdiff");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

const std::string kMinimal = "n_cells = 128\nt_end = 1.0\nu0 = constant 0.2\nv0 = constant 0.8\nkind = simulate\n";

}  // namespace

TEST(ParseConfig, MinimalExample) {
  const auto cfg = parse_config(kMinimal);
  EXPECT_EQ(cfg.n_cells, 128u);
  EXPECT_EQ(cfg.t_end, 1.0);
  EXPECT_EQ(std::get<ConstantData>(cfg.u0).value, 0.2);
  EXPECT_EQ(std::get<ConstantData>(cfg.v0).value, 0.8);
  EXPECT_EQ(cfg.kind, ExperimentKind::simulate);
}

TEST(ParseConfig, CommentsAndWhitespace) {
  const auto cfg = parse_config("# header\n\n  n_cells=16   # trailing\nu0 = bump 0.5 0.1 0 1\nv0 = cosine 1 0.5 2\n");
  EXPECT_EQ(cfg.n_cells, 16u);
  EXPECT_EQ(std::get<BumpData>(cfg.u0), (BumpData{0.5, 0.1, 0.0, 1.0}));
  EXPECT_EQ(std::get<CosineData>(cfg.v0), (CosineData{1.0, 0.5, 2}));
}

TEST(ParseConfig, NearlyVanishingBumpIsValid) {
  const auto cfg = parse_config("u0 = bump 0.5 0.1 1e-6 1.0\nv0 = constant 1\n");
  const auto init = summarize_initial_data(cfg);
  EXPECT_TRUE(std::isfinite(init.inv_u_integral));
  EXPECT_GT(init.inv_u_integral, 1.0);
  EXPECT_TRUE(std::isfinite(init.log_u_integral));
}

TEST(ParseConfig, DistinctErrors) {
  const std::string v_zero = config_error("u0 = constant 0.2\nv0 = constant 0.0\n");
  EXPECT_NE(v_zero.find("line 2: v0"), std::string::npos) << v_zero;
  EXPECT_NE(v_zero.find("v0 > 0"), std::string::npos) << v_zero;

  const std::vector<std::string> bad{
      "u0 = constant 0.2\nv0 = constant 1\nbogus = 3\n",
      "u0 = constant 0.2\nv0 = constant 1\nn_cells = 1\n",
      "u0 = constant 0.2\nv0 = constant 1\nn_cells = many\n",
      "u0 = constant -0.1\nv0 = constant 1\n",
      "u0 = constant 0.2\nv0 = constant 1\nu0 = constant 0.3\n",
      "u0 = constant 0.2\n",
      "u0 = triangle 1\nv0 = constant 1\n",
      "u0 = constant 0.2\nv0 = constant 1\nflux_mean = geometric\n",
      "u0 = constant 0.2\nv0 = constant 1\ndt_init = 1\n",
      "u0 = constant 0.2\nv0 = constant 1\nthis line has no equals sign\n",
      "u0 = constant 0\nv0 = constant 1\nepsilon_reg = 0\n",
  };
  std::set<std::string> messages{v_zero};
  for (const auto& text : bad) {
    const std::string msg = config_error(text);
    EXPECT_FALSE(msg.empty()) << text;
    EXPECT_TRUE(messages.insert(msg).second) << "duplicate message: " << msg;
  }
  EXPECT_NE(config_error(bad[0]).find("line 3: bogus: unknown key"), std::string::npos);
}

TEST(ParseConfig, FileInitialData) {
  TempDir dir;
  {
    std::ofstream out(dir.path() / "u0.txt");
    out << "0.1 0.2 0.3 0.4\n";
  }
  {
    std::ofstream out(dir.path() / "case.cfg");
    out << "n_cells = 4\nu0 = file u0.txt\nv0 = constant 1\n";
  }
  const auto cfg = load_config(dir.path() / "case.cfg");
  const Field<double> u = evaluate(cfg.u0, Grid<double>(4), cfg.base_dir);
  EXPECT_EQ(u[2], 0.3);
  EXPECT_THROW(parse_config("n_cells = 5\nu0 = file u0.txt\nv0 = constant 1\n", dir.path()), ConfigError);
  EXPECT_THROW(load_config(dir.path() / "missing.cfg"), ConfigError);
}

TEST(ConfigProperties, SerializeRoundTrip) {
  std::mt19937_64 rng(91);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto positive_spec = [&](bool strict) -> InitialSpec {
    switch (rng() % 3) {
      case 0:
        return ConstantData{(strict ? 0.1 : 0.0) + unit(rng)};
      case 1:
        return BumpData{unit(rng), 0.01 + unit(rng), (strict ? 0.1 : 0.0) + unit(rng), unit(rng)};
      default: {
        const double amp = unit(rng);
        return CosineData{amp + (strict ? 0.1 : 0.0) + unit(rng), (rng() % 2 ? amp : -amp),
                          static_cast<int>(rng() % 6)};
      }
    }
  };
  for (int trial = 0; trial < 300; ++trial) {
    ScenarioConfig cfg;
    cfg.n_cells = 2 + rng() % 500;
    cfg.t_end = 10 * unit(rng);
    cfg.output_count = 1 + static_cast<int>(rng() % 200);
    cfg.u0 = positive_spec(false);
    cfg.v0 = positive_spec(true);
    cfg.params.epsilon_reg = 1e-2 * unit(rng) + 1e-12;
    cfg.params.flux_mean = rng() % 2 ? FluxMean::harmonic : FluxMean::arithmetic;
    cfg.params.taxis_scheme = rng() % 2 ? TaxisScheme::upwind : TaxisScheme::centered;
    cfg.control.dt_min = 1e-9 * (1 + unit(rng));
    cfg.control.dt_max = 1e-3 + unit(rng) * 1e-1;
    cfg.control.dt_init = cfg.control.dt_min + unit(rng) * (cfg.control.dt_max - cfg.control.dt_min);
    cfg.control.newton_tol = 1e-12 + 1e-8 * unit(rng);
    cfg.control.newton_max_iter = 1 + static_cast<int>(rng() % 100);
    cfg.kind = static_cast<ExperimentKind>(rng() % 4);
    cfg.delta = unit(rng);
    cfg.pert_shape = static_cast<PerturbationShape>(rng() % 3);
    cfg.perturb_v = rng() % 2;
    cfg.source = static_cast<SourceKind>(rng() % 2);
    cfg.seed = rng() >> 2;
    const std::string text = serialize_config(cfg);
    const auto back = parse_config(text);
    EXPECT_EQ(back, cfg) << text;
    EXPECT_EQ(serialize_config(back), text);
  }
}

TEST(Scenarios, ShippedFilesMatchBuiltins) {
  const fs::path dir = fs::path(XDIFF_SOURCE_DIR) / "scenarios";
  for (const auto& name : scenario_names()) {
    const fs::path file = dir / (name + ".cfg");
    ASSERT_TRUE(fs::exists(file)) << file;
    EXPECT_EQ(read_file(file), scenario_text(name));
    EXPECT_EQ(load_config(file), builtin_scenario(name));
  }
  EXPECT_THROW(builtin_scenario("nope"), ConfigError);
}

TEST(Perturbation, ShapesAreUnitAmplitude) {
  const Grid<double> g(200);
  for (auto shape : {PerturbationShape::bump, PerturbationShape::cosine, PerturbationShape::random}) {
    const Field<double> f = perturbation(shape, 7)(g);
    EXPECT_NEAR(f.cwiseAbs().maxCoeff(), 1.0, 2e-2) << to_string(shape);
  }
  EXPECT_EQ(perturbation(PerturbationShape::random, 3)(g), perturbation(PerturbationShape::random, 3)(g));
  EXPECT_NE(perturbation(PerturbationShape::random, 3)(g), perturbation(PerturbationShape::random, 4)(g));
}

TEST(Csv, WriterAndReader) {
  TempDir dir;
  const fs::path path = dir.path() / "t.csv";
  {
    CsvWriter w(path, {"t", "x"});
    w.row({0.0, 1.5});
    w.row(std::vector<double>{0.1, -2.0});
    EXPECT_THROW(w.row({1.0}), ContractViolation);
  }
  const auto table = read_csv(path);
  EXPECT_EQ(table.header, (std::vector<std::string>{"t", "x"}));
  ASSERT_EQ(table.rows.size(), 2u);
  EXPECT_EQ(table.rows[1][1], -2.0);
}

TEST(Experiments, SimulateWritesWellFormedCsv) {
  TempDir dir;
  RunOptions opts;
  opts.out_dir = dir.path();
  opts.quiet = true;
  opts.dump_fields = true;
  auto cfg = builtin_scenario("bump-taxis");
  cfg.n_cells = 32;
  cfg.t_end = 0.1;
  cfg.output_count = 10;
  const auto rep = simulate(cfg, opts);
  EXPECT_EQ(rep.exit_status, 0);
  ASSERT_EQ(rep.csv_paths.size(), 12u);
  for (const auto& p : rep.csv_paths) EXPECT_GT(fs::file_size(p), 0u);
  const auto table = read_csv(rep.csv_paths[0]);
  EXPECT_EQ(table.header, kDiagnosticsColumns);
  ASSERT_EQ(table.rows.size(), 11u);
  for (std::size_t k = 1; k < table.rows.size(); ++k) {
    EXPECT_EQ(table.rows[k].size(), kDiagnosticsColumns.size());
    EXPECT_GT(table.rows[k][0], table.rows[k - 1][0]);
  }
  EXPECT_LE(rep.summary.at("mass_drift"), 1e-11);
}

TEST(Experiments, IdenticalConfigGivesIdenticalBytes) {
  TempDir a, b;
  RunOptions opts;
  opts.quiet = true;
  auto cfg = builtin_scenario("twin");
  cfg.n_cells = 32;
  cfg.t_end = 0.2;
  cfg.output_count = 10;
  cfg.pert_shape = PerturbationShape::random;
  cfg.seed = 17;
  opts.out_dir = a.path();
  const auto ra = pair(cfg, opts);
  opts.out_dir = b.path();
  const auto rb = pair(cfg, opts);
  ASSERT_EQ(ra.csv_paths.size(), rb.csv_paths.size());
  for (std::size_t k = 0; k < ra.csv_paths.size(); ++k) {
    EXPECT_EQ(read_file(ra.csv_paths[k]), read_file(rb.csv_paths[k]));
  }
  const auto table = read_csv(ra.csv_paths[0]);
  EXPECT_EQ(table.header, kPairColumns);
  for (std::size_t k = 1; k < table.rows.size(); ++k) EXPECT_GT(table.rows[k][0], table.rows[k - 1][0]);
}

TEST(Experiments, OverridesApply) {
  RunOptions opts;
  opts.delta = 0.25;
  opts.epsilon = 1e-4;
  const auto cfg = apply_overrides(builtin_scenario("twin"), opts);
  EXPECT_EQ(cfg.delta, 0.25);
  EXPECT_EQ(cfg.params.epsilon_reg, 1e-4);
}

TEST(Parallel, RunsEveryIndexAndRethrows) {
  std::vector<int> hit(100, 0);
  parallel_for(hit.size(), [&](std::size_t k) { hit[k] += 1; });
  for (int h : hit) EXPECT_EQ(h, 1);
  EXPECT_THROW(parallel_for(8, [](std::size_t k) {
                 if (k == 5) throw ConfigError("boom");
               }),
               ConfigError);
  ::setenv("XDIFF_THREADS", "3", 1);
  EXPECT_EQ(worker_count(), 3u);
  ::setenv("XDIFF_THREADS", "junk", 1);
  EXPECT_GE(worker_count(), 1u);
  ::unsetenv("XDIFF_THREADS");
}

TEST(Cli, ExitCodes) {
  TempDir dir;
  const std::string out = dir.path().string();
  EXPECT_EQ(cli({"simulate", "--config", std::string(XDIFF_SOURCE_DIR) + "/scenarios/logistic.cfg", "--out", out,
                 "--quiet"}),
            0);
  EXPECT_TRUE(fs::exists(dir.path() / "diagnostics.csv"));

  const fs::path bad = dir.path() / "bad.cfg";
  std::ofstream(bad) << "u0 = constant 0.2\nv0 = constant 0.0\n";
  EXPECT_EQ(cli({"simulate", "--config", bad.string(), "--out", out, "--quiet"}), 1);
  EXPECT_EQ(cli({"simulate", "--out", out}), 1);
  EXPECT_EQ(cli({"frobnicate"}), 1);

  const fs::path stiff = dir.path() / "stiff.cfg";
  std::ofstream(stiff) << "n_cells = 32\nt_end = 0.1\noutput_count = 1\ndt_init = 1e-2\ndt_min = 5e-3\n"
                          "dt_max = 1e-2\nnewton_tol = 1e-15\nnewton_max_iter = 1\n"
                          "u0 = bump 0.5 0.05 0.1 2\nv0 = cosine 1 0.5 3\n";
  EXPECT_EQ(cli({"simulate", "--config", stiff.string(), "--out", out, "--quiet"}), 2);

  EXPECT_EQ(cli({"pair", "--scenario", "twin", "--delta", "1e-3", "--out", out, "--quiet"}), 0);
  EXPECT_TRUE(fs::exists(dir.path() / "pair.csv"));
}

TEST(Verify, AllChecksPass) {
  std::ostringstream log;
  const auto results = verify(log, true);
  EXPECT_GE(results.size(), 10u);
  for (const auto& r : results) EXPECT_TRUE(r.passed) << r.name << ": " << r.detail;
}
