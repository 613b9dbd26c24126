#include "xdiff/harness/experiments.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <ostream>
#include <random>
#include <sstream>

#include "xdiff/harness/csv.hpp"
#include "xdiff/harness/parallel.hpp"
#include "xdiff/harness/scenarios.hpp"
#include "xdiff/mms.hpp"

namespace xdiff::harness {

namespace fs = std::filesystem;

namespace {

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

State<double> initial_state(const ScenarioConfig& cfg, const Grid<double>& grid) {
  return {evaluate(cfg.u0, grid, cfg.base_dir), evaluate(cfg.v0, grid, cfg.base_dir), 0.0};
}

Source<double> source_for(const ScenarioConfig& cfg, const Grid<double>& grid) {
  if (cfg.source == SourceKind::mms) return mms::CosineSolution<double>{}.source(grid);
  return {};
}

Trajectory<double> simulate_trajectory(const ScenarioConfig& cfg, const Grid<double>& grid,
                                       const State<double>& s0) {
  return run(s0, cfg.t_end, uniform_output_times(cfg.t_end, cfg.output_count), grid, cfg.params, cfg.control,
             source_for(cfg, grid));
}

fs::path prepare_out(const RunOptions& opts) {
  fs::create_directories(opts.out_dir);
  return opts.out_dir;
}

std::string join_summary(const std::string& head, const std::map<std::string, double>& summary) {
  std::string line = head;
  for (const auto& [k, v] : summary) line += " " + k + "=" + fmt(v);
  return line;
}

}  // namespace

ScenarioConfig apply_overrides(ScenarioConfig cfg, const RunOptions& opts) {
  if (opts.delta) {
    if (!(*opts.delta >= 0 && *opts.delta <= 1)) throw ConfigError("--delta must lie in [0, 1]");
    cfg.delta = *opts.delta;
  }
  if (opts.epsilon) {
    cfg.params.epsilon_reg = *opts.epsilon;
    cfg.params.validate();
  }
  return cfg;
}

RunReport simulate(const ScenarioConfig& cfg, const RunOptions& opts) {
  const fs::path out = prepare_out(opts);
  const Grid<double> grid(cfg.n_cells);
  const auto traj = simulate_trajectory(cfg, grid, initial_state(cfg, grid));

  RunReport rep;
  const auto diag_path = out / "diagnostics.csv";
  write_diagnostics_csv(diag_path, record_all(traj, grid, cfg.params));
  rep.csv_paths.push_back(diag_path);
  if (opts.dump_fields) {
    for (auto& p : write_field_dumps(out, "fields", traj, grid)) rep.csv_paths.push_back(p);
  }

  const auto& last = traj.states.back();
  rep.summary["final_mass"] = integrate(last.u, grid) + integrate(last.v, grid);
  rep.summary["mass_drift"] = max_mass_drift(traj, grid);
  rep.summary["min_u"] = traj.u_min_seen;
  rep.summary["min_v"] = traj.v_min_seen;
  rep.summary["steps"] = static_cast<double>(traj.steps_taken);
  rep.summary["rejections"] = static_cast<double>(traj.rejections);
  if (traj.states.size() >= 2) {
    rep.summary["entropy_rate_violation"] = entropy_inequality_check(traj, grid, cfg.params);
    rep.summary["entropy_margin_eps1e-6"] = entropy_bound_margin(traj, grid, 1e-6);
    rep.summary["entropy_margin_eps1e-8"] = entropy_bound_margin(traj, grid, 1e-8);
  }
  if (cfg.source == SourceKind::mms) {
    rep.summary["mms_l2_error"] = mms::l2_error(last, mms::CosineSolution<double>{}, grid);
  } else {
    rep.summary["v_lower_bound_ratio"] = v_lower_bound_ratio(traj);
  }
  rep.summary_line = join_summary("simulate n=" + std::to_string(cfg.n_cells), rep.summary);
  return rep;
}

RunReport pair(const ScenarioConfig& cfg, const RunOptions& opts) {
  const fs::path out = prepare_out(opts);
  const Grid<double> grid(cfg.n_cells);
  const State<double> base = initial_state(cfg, grid);
  State<double> pert = base;
  const Field<double> shape = perturbation(cfg.pert_shape, cfg.seed)(grid);
  if (cfg.perturb_v) {
    pert.v += cfg.delta * shape;
    if (!(pert.v.minCoeff() > 0)) throw ConfigError("perturbed v0 must stay positive");
  } else {
    pert.u += cfg.delta * shape;
    if (!(pert.u.minCoeff() >= 0)) throw ConfigError("perturbed u0 must stay nonnegative");
  }

  // the twins share no state and may advance concurrently
  std::vector<Trajectory<double>> runs(2);
  const std::vector<const State<double>*> starts{&base, &pert};
  parallel_for(2, [&](std::size_t k) { runs[k] = simulate_trajectory(cfg, grid, *starts[k]); });

  auto report = gronwall_analysis(runs[0], runs[1], grid);
  report.perturbation_size = cfg.delta;

  RunReport rep;
  const auto pair_path = out / "pair.csv";
  write_pair_csv(pair_path, report);
  rep.csv_paths.push_back(pair_path);
  const auto diag_a = out / "diagnostics_a.csv";
  const auto diag_b = out / "diagnostics_b.csv";
  write_diagnostics_csv(diag_a, record_all(runs[0], grid, cfg.params));
  write_diagnostics_csv(diag_b, record_all(runs[1], grid, cfg.params));
  rep.csv_paths.push_back(diag_a);
  rep.csv_paths.push_back(diag_b);
  if (opts.dump_fields) {
    for (auto& p : write_field_dumps(out, "fields_a", runs[0], grid)) rep.csv_paths.push_back(p);
    for (auto& p : write_field_dumps(out, "fields_b", runs[1], grid)) rep.csv_paths.push_back(p);
  }

  rep.summary["delta"] = cfg.delta;
  rep.summary["C_fit"] = report.C_fit;
  rep.summary["max_ratio"] = report.max_ratio;
  rep.summary["sup_E"] = report.sup_E;
  rep.summary["sup_E_over_E0"] = report.sup_E_over_E0;
  rep.summary["c_obs"] = report.c_obs;
  rep.summary["energy_identity_residual"] = energy_identity_residual(runs[0], runs[1], grid, cfg.params);
  std::string head = "pair n=" + std::to_string(cfg.n_cells);
  if (!report.fit_defined) head += " (E identically zero: C_fit undefined)";
  rep.summary_line = join_summary(head, rep.summary);
  return rep;
}

RunReport converge(const ScenarioConfig& cfg, const RunOptions& opts) {
  const fs::path out = prepare_out(opts);
  RunReport rep;
  if (cfg.source == SourceKind::mms) {
    // spatial sweep n, 2n, 4n with dt proportional to h^2
    const mms::CosineSolution<double> sol;
    std::vector<double> errors(3), dts(3);
    parallel_for(3, [&](std::size_t k) {
      const Grid<double> grid(cfg.n_cells << k);
      dts[k] = cfg.control.dt_max / static_cast<double>(1u << (2 * k));
      const auto c = fixed_step_control(cfg.control, dts[k]);
      const auto traj = run(sol.sample(grid, 0.0), cfg.t_end, {}, grid, cfg.params, c, sol.source(grid));
      errors[k] = mms::l2_error(traj.states.back(), sol, grid);
    });
    const auto path = out / "mms_convergence.csv";
    CsvWriter w(path, {"n", "dt", "l2_error", "order"});
    for (std::size_t k = 0; k < 3; ++k) {
      const double order = k == 0 ? 0.0 : std::log2(errors[k - 1] / errors[k]);
      w.row({static_cast<double>(cfg.n_cells << k), dts[k], errors[k], order});
    }
    rep.csv_paths.push_back(path);
    rep.summary["error_finest"] = errors[2];
    rep.summary["order_spatial"] = std::log2(errors[1] / errors[2]);
    rep.summary_line = join_summary("converge mms n=" + std::to_string(cfg.n_cells), rep.summary);
    return rep;
  }

  RefinementConfig<double> rc;
  rc.u0 = initializer(cfg.u0, cfg.base_dir);
  rc.v0 = initializer(cfg.v0, cfg.base_dir);
  rc.n_coarse = cfg.n_cells;
  rc.horizon = cfg.t_end;
  rc.dt_per_h = cfg.control.dt_max * static_cast<double>(cfg.n_cells);
  rc.params = cfg.params;
  rc.control = cfg.control;
  const auto table = uniqueness_refinement_study(rc);
  const auto path = out / "refinement.csv";
  CsvWriter w(path, {"n", "dist_uv", "dist_wv"});
  for (const auto& r : table.rows) w.row({static_cast<double>(r.n), r.dist_uv, r.dist_wv});
  rep.csv_paths.push_back(path);
  rep.summary["contraction_uv"] = table.contraction_uv;
  rep.summary["contraction_wv"] = table.contraction_wv;
  rep.summary_line = join_summary("converge n=" + std::to_string(cfg.n_cells), rep.summary);
  return rep;
}

RunReport weakcheck(const ScenarioConfig& cfg, const RunOptions& opts) {
  const fs::path out = prepare_out(opts);
  const Grid<double> grid(cfg.n_cells);
  const auto traj = simulate_trajectory(cfg, grid, initial_state(cfg, grid));
  RunReport rep;
  const auto path = out / "weak_residual.csv";
  CsvWriter w(path, {"level", "test_basis_size", "residual_u", "residual_v"});
  int top = 0;
  while ((std::size_t{2} << top) <= cfg.n_cells && top < 5) ++top;
  for (int level = 1; level <= top; ++level) {
    const auto r = weak_residual(traj, grid, cfg.params, level);
    w.row({static_cast<double>(level), static_cast<double>(r.test_basis_size), r.residual_u, r.residual_v});
    rep.summary["residual_u_level" + std::to_string(level)] = r.residual_u;
    rep.summary["residual_v_level" + std::to_string(level)] = r.residual_v;
  }
  rep.csv_paths.push_back(path);
  rep.summary_line = join_summary("weakcheck n=" + std::to_string(cfg.n_cells), rep.summary);
  return rep;
}

RunReport run_experiment(const ScenarioConfig& cfg_in, ExperimentKind kind, const RunOptions& opts) {
  const ScenarioConfig cfg = apply_overrides(cfg_in, opts);
  switch (kind) {
    case ExperimentKind::simulate:
      return simulate(cfg, opts);
    case ExperimentKind::pair:
      return pair(cfg, opts);
    case ExperimentKind::converge:
      return converge(cfg, opts);
    case ExperimentKind::weakcheck:
      return weakcheck(cfg, opts);
  }
  throw ContractViolation("unknown experiment kind");
}

// ---------------------------------------------------------------------------
// verify

namespace {

State<double> random_state(std::mt19937_64& rng, const Grid<double>& grid) {
  std::uniform_real_distribution<double> du(0.0, 1.0), dv(0.1, 1.5);
  State<double> s{Field<double>(grid.size()), Field<double>(grid.size()), 0.0};
  for (Eigen::Index i = 0; i < grid.size(); ++i) {
    s.u[i] = du(rng);
    s.v[i] = dv(rng);
  }
  return s;
}

class Checker {
 public:
  Checker(std::ostream& log, bool quiet) : log_(log), quiet_(quiet) {}

  void check(const std::string& name, bool ok, const std::string& detail) {
    results_.push_back({name, ok, detail});
    if (!quiet_) log_ << (ok ? "PASS " : "FAIL ") << name << "  " << detail << '\n';
  }

  template <typename Fn>
  void guarded(const std::string& name, Fn&& fn) {
    try {
      fn();
    } catch (const std::exception& e) {
      check(name, false, std::string("exception: ") + e.what());
    }
  }

  std::vector<CheckResult> results() const { return results_; }

 private:
  std::ostream& log_;
  bool quiet_;
  std::vector<CheckResult> results_;
};

double logistic_error(double dt) {
  auto cfg = builtin_scenario("logistic");
  cfg.control = fixed_step_control(cfg.control, dt);
  const Grid<double> grid(cfg.n_cells);
  const auto traj = simulate_trajectory(cfg, grid, initial_state(cfg, grid));
  double err = 0;
  for (const auto& s : traj.states) {
    const double exact = 1.0 / (1.0 + 4.0 * std::exp(-s.t));
    err = std::max(err, (s.u.array() - exact).abs().maxCoeff());
  }
  return err;
}

}  // namespace

std::vector<CheckResult> verify(std::ostream& log, bool quiet) {
  Checker ck(log, quiet);
  std::mt19937_64 rng(0);

  // Logistic closed form.
  ck.guarded("logistic_oracle", [&] {
    const double e1 = logistic_error(1e-3);
    const double e2 = logistic_error(5e-4);
    const double order = std::log2(e1 / e2);
    ck.check("logistic_oracle", e1 <= 1e-4 && std::abs(order - 1.0) <= 0.15,
             "max_err=" + fmt(e1) + " order=" + fmt(order));
  });

  // Conservation, positivity, v lower bound and entropy on the shipped source-free scenarios.
  for (const std::string name : {"logistic", "bump-taxis", "degenerate-dip", "twin"}) {
    ck.guarded("scenario_" + name, [&] {
      const auto cfg = builtin_scenario(name);
      const Grid<double> grid(cfg.n_cells);
      const auto traj = simulate_trajectory(cfg, grid, initial_state(cfg, grid));
      const double drift = max_mass_drift(traj, grid);
      const double wdrift = w_endpoint_drift(traj, grid);
      ck.check("conservation_" + name, drift <= 1e-11 && wdrift <= 1e-11,
               "mass_drift=" + fmt(drift) + " w_endpoint_drift=" + fmt(wdrift));
      const double ratio = v_lower_bound_ratio(traj);
      ck.check("positivity_" + name, traj.u_min_seen >= 0 && traj.v_min_seen > 0 && ratio >= 0.999,
               "min_u=" + fmt(traj.u_min_seen) + " min_v=" + fmt(traj.v_min_seen) + " v_bound_ratio=" + fmt(ratio));
      if (name == "bump-taxis" || name == "degenerate-dip") {
        const double m6 = entropy_bound_margin(traj, grid, 1e-6);
        const double m8 = entropy_bound_margin(traj, grid, 1e-8);
        ck.check("entropy_bound_" + name, m6 <= 0 && m8 <= 0,
                 "margin(eps=1e-6)=" + fmt(m6) + " margin(eps=1e-8)=" + fmt(m8));
      }
    });
  }

  ck.guarded("grid_invariants", [&] {
    const Grid<double> grid(37);
    const auto a = random_state(rng, grid);
    const double lin = integrate(Field<double>(2.0 * a.u - 3.0 * a.v), grid);
    const double sep = 2.0 * integrate(a.u, grid) - 3.0 * integrate(a.v, grid);
    FaceField<double> flux = FaceField<double>::Random(grid.size() + 1);
    flux[0] = flux[grid.size()] = 0;
    const double lhs = grid.h() * a.u.dot(face_divergence(flux, grid));
    const double rhs = -grid.h() * flux.dot(face_gradient(a.u, grid));
    const bool zero_grad = face_gradient(Field<double>::Constant(grid.size(), 0.7), grid).isZero(0.0);
    ck.check("grid_invariants", std::abs(lin - sep) <= 1e-14 && std::abs(lhs - rhs) <= 1e-13 && zero_grad,
             "linearity=" + fmt(std::abs(lin - sep)) + " sbp=" + fmt(std::abs(lhs - rhs)));
  });

  ck.guarded("model_conservation", [&] {
    double worst = 0;
    for (int trial = 0; trial < 20; ++trial) {
      const Grid<double> grid(8 + trial);
      const auto s = random_state(rng, grid);
      for (auto mean : {FluxMean::arithmetic, FluxMean::harmonic}) {
        for (auto taxis : {TaxisScheme::centered, TaxisScheme::upwind}) {
          const ModelParams<double> p{1e-8, mean, taxis};
          const auto r = rhs(s.u, s.v, grid, p);
          worst = std::max(worst, std::abs(integrate(r.du_dt, grid) + integrate(r.dv_dt, grid)));
        }
      }
    }
    ck.check("model_conservation", worst <= 1e-13, "max |int du_dt + dv_dt|=" + fmt(worst));
  });

  ck.guarded("jacobian_finite_difference", [&] {
    const Grid<double> grid(6);
    const ModelParams<double> p{};
    const auto prev = random_state(rng, grid);
    auto guess = random_state(rng, grid);
    const double dt = 0.05;
    const auto jac = assemble_jacobian(guess, prev, dt, grid, p).to_dense();
    const Field<double> x0 = interleave<double>(guess.u, guess.v);
    double worst = 0;
    for (Eigen::Index j = 0; j < x0.size(); ++j) {
      const double step = 1e-6;
      Field<double> xp = x0, xm = x0;
      xp[j] += step;
      xm[j] -= step;
      auto [up, vp] = deinterleave<double>(xp);
      auto [um, vm] = deinterleave<double>(xm);
      const Field<double> col = (step_residual(State<double>{up, vp, 0}, prev, dt, grid, p) -
                                 step_residual(State<double>{um, vm, 0}, prev, dt, grid, p)) /
                                (2 * step);
      worst = std::max(worst, (col - jac.col(j)).cwiseAbs().maxCoeff() / std::max(1.0, jac.col(j).cwiseAbs().maxCoeff()));
    }
    ck.check("jacobian_finite_difference", worst <= 1e-6, "max rel diff=" + fmt(worst));
  });

  ck.guarded("transform_identities", [&] {
    const Grid<double> grid(64);
    const auto s = random_state(rng, grid);
    const auto w = antiderivative(s, grid);
    const double grad = w_gradient_identity_check(s, grid);
    const double total = integrate(Field<double>(s.u + s.v), grid);
    ck.check("transform_identities", w.values[0] == 0.0 && w.values[grid.size()] == total && grad <= 1e-14,
             "gradient_identity=" + fmt(grad));
  });

  ck.guarded("pair_energy_symmetry", [&] {
    const Grid<double> grid(16);
    const auto a = random_state(rng, grid);
    const auto b = random_state(rng, grid);
    const auto ab = pair_energy(a, b, grid);
    const auto ba = pair_energy(b, a, grid);
    const auto aa = pair_energy(a, a, grid);
    const bool sym = ab.E_w == ba.E_w && ab.E_v == ba.E_v && ab.D_u == ba.D_u && ab.D_v == ba.D_v;
    const bool zero = aa.E_w == 0 && aa.E_v == 0 && aa.D_u == 0 && aa.D_v == 0;
    ck.check("pair_energy_symmetry", sym && zero, sym ? "symmetric, self-energy zero" : "asymmetric");
  });

  ck.guarded("weak_residual_stationary", [&] {
    const Grid<double> grid(32);
    Trajectory<double> traj;
    for (int k = 0; k <= 10; ++k) {
      traj.states.push_back({Field<double>::Zero(32), Field<double>::Ones(32), 0.1 * k});
    }
    const auto r = weak_residual(traj, grid, ModelParams<double>{}, 3);
    ck.check("weak_residual_stationary", r.residual_u <= 1e-14 && r.residual_v <= 1e-14,
             "residual_u=" + fmt(r.residual_u) + " residual_v=" + fmt(r.residual_v));
  });

  ck.guarded("config_round_trip", [&] {
    bool ok = true;
    for (const auto& name : scenario_names()) {
      const auto cfg = builtin_scenario(name);
      ok = ok && parse_config(serialize_config(cfg)) == cfg;
    }
    ck.check("config_round_trip", ok, "shipped scenarios");
  });

  return ck.results();
}

}  // namespace xdiff::harness
