#include "xdiff/harness/cli.hpp"

#include <iostream>

#include <CLI11.hpp>

#include "xdiff/harness/experiments.hpp"
#include "xdiff/harness/scenarios.hpp"

namespace xdiff::harness {

namespace {

constexpr int kConfigError = 1;
constexpr int kSolverFailure = 2;
constexpr int kInvariantViolation = 3;

struct CommandArgs {
  std::string config;
  std::string scenario;
  std::string out = ".";
  double delta = 0;
  double epsilon = 0;
  bool dump_fields = false;
  bool quiet = false;
};

void add_common(CLI::App* cmd, CommandArgs& args) {
  cmd->add_option("--config", args.config, "scenario config file (key = value lines)");
  cmd->add_option("--scenario", args.scenario, "use a shipped scenario instead of --config")
      ->check(CLI::IsMember(scenario_names()));
  cmd->add_option("--out", args.out, "output directory for CSV files");
  cmd->add_option("--delta", args.delta, "perturbation size for pair runs");
  cmd->add_option("--epsilon", args.epsilon, "regularizer in the 1/(u + eps) monitor");
  cmd->add_flag("--dump-fields", args.dump_fields, "write one x,u,v CSV per snapshot");
  cmd->add_flag("--quiet", args.quiet, "suppress the summary line");
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"xdiff: doubly degenerate cross-diffusion simulator and verification harness"};
  app.require_subcommand(1);

  CommandArgs args;
  struct Sub {
    const char* name;
    ExperimentKind kind;
    const char* help;
  };
  const Sub subs[] = {
      {"simulate", ExperimentKind::simulate, "run one scenario and write diagnostics.csv"},
      {"pair", ExperimentKind::pair, "twin runs with a perturbed initial u; writes pair.csv"},
      {"converge", ExperimentKind::converge, "refinement study at n, 2n, 4n"},
      {"weakcheck", ExperimentKind::weakcheck, "weak-form residuals over hat test functions"},
  };
  std::vector<std::pair<CLI::App*, ExperimentKind>> commands;
  for (const auto& s : subs) {
    auto* cmd = app.add_subcommand(s.name, s.help);
    add_common(cmd, args);
    commands.emplace_back(cmd, s.kind);
  }
  auto* verify_cmd = app.add_subcommand("verify", "run the built-in invariant suite");
  verify_cmd->add_flag("--quiet", args.quiet, "print only failures and the final line");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }

  if (verify_cmd->parsed()) {
    const auto results = verify(std::cout, args.quiet);
    int failed = 0;
    for (const auto& r : results) {
      if (!r.passed) {
        ++failed;
        if (args.quiet) std::cout << "FAIL " << r.name << "  " << r.detail << '\n';
      }
    }
    std::cout << "verify: " << results.size() - static_cast<std::size_t>(failed) << "/" << results.size()
              << " checks passed\n";
    return failed == 0 ? 0 : kInvariantViolation;
  }

  for (const auto& [cmd, kind] : commands) {
    if (!cmd->parsed()) continue;
    try {
      if (args.config.empty() == args.scenario.empty()) {
        throw ConfigError("give exactly one of --config or --scenario");
      }
      const ScenarioConfig cfg = args.config.empty() ? builtin_scenario(args.scenario) : load_config(args.config);
      RunOptions opts;
      opts.out_dir = args.out;
      if (cmd->count("--delta")) opts.delta = args.delta;
      if (cmd->count("--epsilon")) opts.epsilon = args.epsilon;
      opts.dump_fields = args.dump_fields;
      opts.quiet = args.quiet;
      if (!args.quiet) {
        const auto init = summarize_initial_data(apply_overrides(cfg, opts));
        std::cout << "initial data: int 1/(u0+eps)=" << init.inv_u_integral << " int ln u0=" << init.log_u_integral
                  << '\n';
      }
      const RunReport rep = run_experiment(cfg, kind, opts);
      if (!args.quiet) std::cout << rep.summary_line << '\n';
      return rep.exit_status;
    } catch (const ConfigError& e) {
      std::cerr << "config error: " << e.what() << '\n';
      return kConfigError;
    } catch (const ContractViolation& e) {
      std::cerr << "config error: " << e.what() << '\n';
      return kConfigError;
    } catch (const StepTooSmall& e) {
      std::cerr << "solver failure: " << e.what() << '\n';
      return kSolverFailure;
    } catch (const SolverError& e) {
      std::cerr << "solver failure: " << e.what() << '\n';
      return kSolverFailure;
    } catch (const StateError& e) {
      std::cerr << "solver failure: " << e.what() << '\n';
      return kSolverFailure;
    }
  }
  return kConfigError;
}

}  // namespace xdiff::harness
