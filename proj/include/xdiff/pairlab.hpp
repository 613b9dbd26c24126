#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "xdiff/diagnostics.hpp"

namespace xdiff {

/// Energy and dissipation functionals comparing two states on one grid.
template <typename Scalar = double>
struct PairEnergy {
  Scalar t = 0;
  Scalar E_w = 0;  ///< 1/2 int (w_A - w_B)^2
  Scalar E_v = 0;  ///< 1/2 int (v_A - v_B)^2
  Scalar D_u = 0;  ///< int (u_A + u_B) (w_Ax - w_Bx)^2
  Scalar D_v = 0;  ///< int (v_Ax - v_Bx)^2
};

template <typename Scalar>
void require_same_time(Scalar ta, Scalar tb, const char* what) {
  const Scalar tol = Scalar(1e-12) * std::max(Scalar(1), std::abs(ta));
  if (std::abs(ta - tb) > tol) throw ContractViolation(std::string(what) + ": states at different times");
}

template <typename Scalar>
PairEnergy<Scalar> pair_energy(const State<Scalar>& a, const State<Scalar>& b, const Grid<Scalar>& grid) {
  detail::require_cells(a.u, grid, "pair_energy");
  detail::require_cells(b.u, grid, "pair_energy");
  detail::require_cells(a.v, grid, "pair_energy");
  detail::require_cells(b.v, grid, "pair_energy");
  require_same_time(a.t, b.t, "pair_energy");

  const FaceField<Scalar> dw = antiderivative(a, grid).values - antiderivative(b, grid).values;
  const Field<Scalar> dv = a.v - b.v;
  // w_x = u + v cellwise
  const Field<Scalar> dwx = (a.u + a.v) - (b.u + b.v);
  const FaceField<Scalar> dvx = face_gradient(dv, grid);

  PairEnergy<Scalar> e;
  e.t = a.t;
  e.E_w = Scalar(0.5) * integrate_faces(dw.cwiseAbs2(), grid);
  e.E_v = Scalar(0.5) * integrate(dv.cwiseAbs2(), grid);
  e.D_u = integrate(((a.u + b.u).array() * dwx.array().square()).matrix(), grid);
  e.D_v = grid.h() * dvx.squaredNorm();
  return e;
}

namespace detail {

template <typename Scalar>
void require_synchronized(const Trajectory<Scalar>& a, const Trajectory<Scalar>& b) {
  if (a.states.size() != b.states.size() || a.states.empty()) {
    throw ConfigError("twin trajectories have different snapshot counts");
  }
  for (std::size_t k = 0; k < a.states.size(); ++k) {
    const Scalar ta = a.states[k].t, tb = b.states[k].t;
    if (std::abs(ta - tb) > Scalar(1e-12) * std::max(Scalar(1), std::abs(ta))) {
      throw ConfigError("twin trajectories have asynchronous snapshots");
    }
  }
}

/// w-equation flux f + g on faces: 1/2 vbar (u^2)_x - (u^2 v)bar v_x + v_x.
template <typename Scalar>
FaceField<Scalar> w_flux(const State<Scalar>& s, const Grid<Scalar>& grid) {
  const FaceField<Scalar> vx = face_gradient(s.v, grid);
  const FaceField<Scalar> u2x = face_gradient(s.u.cwiseAbs2(), grid);
  const FaceField<Scalar> vbar = face_average(s.v, grid);
  const FaceField<Scalar> u2v = face_average(s.u.cwiseAbs2().cwiseProduct(s.v), grid);
  FaceField<Scalar> f = Scalar(0.5) * vbar.cwiseProduct(u2x) - u2v.cwiseProduct(vx) + vx;
  f[0] = f[f.size() - 1] = Scalar(0);
  return f;
}

}  // namespace detail

/// Checks d/dt 1/2 int (w_A - w_B)^2 = int (f_A - f_B + g_A - g_B)(w_A - w_B) in integrated form:
/// the left side at t_k minus its value at t_0 against the trapezoid time integral of the right side.
/// Returns max_k |LHS - RHS| / max(1, |LHS|).
template <typename Scalar>
Scalar energy_identity_residual(const Trajectory<Scalar>& a, const Trajectory<Scalar>& b,
                                const Grid<Scalar>& grid, const ModelParams<Scalar>& /*p*/) {
  detail::require_synchronized(a, b);
  std::vector<Scalar> t, rate;
  std::vector<Scalar> half_l2;
  for (std::size_t k = 0; k < a.states.size(); ++k) {
    const FaceField<Scalar> dw =
        antiderivative(a.states[k], grid).values - antiderivative(b.states[k], grid).values;
    const FaceField<Scalar> df = detail::w_flux(a.states[k], grid) - detail::w_flux(b.states[k], grid);
    t.push_back(a.states[k].t);
    half_l2.push_back(Scalar(0.5) * integrate_faces(dw.cwiseAbs2(), grid));
    rate.push_back(grid.h() * df.dot(dw));
  }
  const auto rhs = cumulative_trapezoid(t, rate);
  Scalar worst = 0;
  for (std::size_t k = 0; k < t.size(); ++k) {
    const Scalar lhs = half_l2[k] - half_l2[0];
    worst = std::max(worst, std::abs(lhs - rhs[k]) / std::max(Scalar(1), std::abs(lhs)));
  }
  return worst;
}

/// Builds a cell field from a grid; used for initial data and perturbation shapes.
template <typename Scalar = double>
using FieldInit = std::function<Field<Scalar>(const Grid<Scalar>&)>;

template <typename Scalar = double>
struct GronwallConfig {
  FieldInit<Scalar> u0;
  FieldInit<Scalar> v0;
  FieldInit<Scalar> perturbation;
  Scalar delta = Scalar(1e-3);
  bool perturb_v = false;
  Scalar horizon = Scalar(1);
  std::size_t n_cells = 256;
  int output_count = 100;
  ModelParams<Scalar> params{};
  StepControl<Scalar> control{};
};

template <typename Scalar = double>
struct GronwallReport {
  /// Least-squares slope of E(t) + weighted dissipation - E(0) against int_0^t E.
  Scalar C_fit = std::numeric_limits<Scalar>::quiet_NaN();
  /// sup_t of the same quotient; the smallest constant certified at the snapshots.
  Scalar max_ratio = 0;
  Scalar horizon = 0;
  std::size_t grid_n = 0;
  Scalar perturbation_size = 0;
  /// False when E vanishes identically (delta = 0); C_fit is then NaN.
  bool fit_defined = false;
  Scalar E0 = 0;
  Scalar sup_E = 0;
  /// sup_t E / E(0); NaN when E(0) = 0.
  Scalar sup_E_over_E0 = std::numeric_limits<Scalar>::quiet_NaN();
  /// Observed minimum of both v fields, standing in for the lower bound c(T).
  Scalar c_obs = 0;
  std::vector<PairEnergy<Scalar>> series;
  std::vector<Scalar> ratio_series;
};

inline constexpr double kDissipationWeightU = 1.0 / 32.0;  // multiplies c(T)
inline constexpr double kDissipationWeightV = 1.0 / 8.0;

/// Post-processes synchronized twin trajectories into a GronwallReport.
template <typename Scalar>
GronwallReport<Scalar> gronwall_analysis(const Trajectory<Scalar>& a, const Trajectory<Scalar>& b,
                                         const Grid<Scalar>& grid) {
  detail::require_synchronized(a, b);
  GronwallReport<Scalar> rep;
  rep.grid_n = grid.n_cells();
  rep.horizon = a.states.back().t - a.states.front().t;
  rep.c_obs = std::min(a.v_min_seen, b.v_min_seen);

  std::vector<Scalar> t, energy, du, dv;
  for (std::size_t k = 0; k < a.states.size(); ++k) {
    auto e = pair_energy(a.states[k], b.states[k], grid);
    t.push_back(e.t);
    energy.push_back(e.E_w + e.E_v);
    du.push_back(e.D_u);
    dv.push_back(e.D_v);
    rep.series.push_back(e);
  }
  const auto int_e = cumulative_trapezoid(t, energy);
  const auto int_du = cumulative_trapezoid(t, du);
  const auto int_dv = cumulative_trapezoid(t, dv);

  rep.E0 = energy.front();
  rep.sup_E = *std::max_element(energy.begin(), energy.end());
  if (rep.E0 > 0) rep.sup_E_over_E0 = rep.sup_E / rep.E0;

  Scalar sxy = 0, sxx = 0;
  rep.ratio_series.assign(t.size(), Scalar(0));
  rep.max_ratio = 0;
  bool any = false;
  for (std::size_t k = 1; k < t.size(); ++k) {
    const Scalar lhs = energy[k] + Scalar(kDissipationWeightU) * rep.c_obs * int_du[k] +
                       Scalar(kDissipationWeightV) * int_dv[k] - rep.E0;
    const Scalar x = int_e[k];
    if (x > 0) {
      rep.ratio_series[k] = lhs / x;
      rep.max_ratio = any ? std::max(rep.max_ratio, lhs / x) : lhs / x;
      any = true;
      sxy += lhs * x;
      sxx += x * x;
    }
  }
  if (sxx > 0) {
    rep.C_fit = sxy / sxx;
    rep.fit_defined = true;
  }
  return rep;
}

/// Twin runs from (u0, v0) and the perturbed data; see GronwallReport.
template <typename Scalar>
GronwallReport<Scalar> gronwall_experiment(const GronwallConfig<Scalar>& cfg) {
  const Grid<Scalar> grid(cfg.n_cells);
  State<Scalar> base{cfg.u0(grid), cfg.v0(grid), Scalar(0)};
  State<Scalar> pert = base;
  const Field<Scalar> shape = cfg.perturbation(grid);
  if (cfg.perturb_v) {
    pert.v += cfg.delta * shape;
    if (!(pert.v.minCoeff() > 0)) throw ConfigError("perturbed v0 must stay positive");
  } else {
    pert.u += cfg.delta * shape;
    if (!(pert.u.minCoeff() >= 0)) throw ConfigError("perturbed u0 must stay nonnegative");
  }
  const auto outputs = uniform_output_times(cfg.horizon, cfg.output_count);
  const auto ta = run(base, cfg.horizon, outputs, grid, cfg.params, cfg.control);
  const auto tb = run(pert, cfg.horizon, outputs, grid, cfg.params, cfg.control);
  auto rep = gronwall_analysis(ta, tb, grid);
  rep.perturbation_size = cfg.delta;
  return rep;
}

/// Cell averages of a fine field onto a grid coarser by an integer factor.
template <typename Scalar>
Field<Scalar> restrict_average(const Field<Scalar>& fine, Eigen::Index factor) {
  if (factor < 1 || fine.size() % factor != 0) throw ContractViolation("restrict_average: bad factor");
  const Eigen::Index n = fine.size() / factor;
  Field<Scalar> coarse(n);
  for (Eigen::Index i = 0; i < n; ++i) coarse[i] = fine.segment(i * factor, factor).mean();
  return coarse;
}

template <typename Scalar = double>
struct RefinementConfig {
  FieldInit<Scalar> u0;
  FieldInit<Scalar> v0;
  std::size_t n_coarse = 64;
  Scalar horizon = Scalar(0.5);
  /// dt = dt_per_h * h at each level (fixed step); nonpositive keeps `control` as given.
  Scalar dt_per_h = Scalar(0.5);
  ModelParams<Scalar> params{};
  StepControl<Scalar> control{};
};

template <typename Scalar = double>
struct RefinementRow {
  std::size_t n = 0;
  /// Distance to the previous (coarser) level, measured on the coarsest grid; 0 for the first row.
  Scalar dist_uv = 0;
  Scalar dist_wv = 0;
};

template <typename Scalar = double>
struct RefinementTable {
  std::vector<RefinementRow<Scalar>> rows;
  /// dist(2n, n) / dist(4n, 2n); NaN when the denominator vanishes.
  Scalar contraction_uv = std::numeric_limits<Scalar>::quiet_NaN();
  Scalar contraction_wv = std::numeric_limits<Scalar>::quiet_NaN();
};

/// Fixed-step control with dt = dt_fixed.
template <typename Scalar>
StepControl<Scalar> fixed_step_control(StepControl<Scalar> c, Scalar dt_fixed) {
  c.dt_init = c.dt_max = dt_fixed;
  c.dt_min = std::min(c.dt_min, dt_fixed * Scalar(1e-6));
  return c;
}

/// Runs n, 2n, 4n to the horizon and reports successive distances after averaging onto n cells.
template <typename Scalar>
RefinementTable<Scalar> uniqueness_refinement_study(const RefinementConfig<Scalar>& cfg) {
  const Grid<Scalar> coarse(cfg.n_coarse);
  std::vector<State<Scalar>> finals;
  RefinementTable<Scalar> table;
  for (Eigen::Index factor : {1, 2, 4}) {
    const Grid<Scalar> grid(cfg.n_coarse * static_cast<std::size_t>(factor));
    const State<Scalar> s0{cfg.u0(grid), cfg.v0(grid), Scalar(0)};
    const StepControl<Scalar> c =
        cfg.dt_per_h > 0 ? fixed_step_control(cfg.control, cfg.dt_per_h * grid.h()) : cfg.control;
    const auto traj = run(s0, cfg.horizon, {}, grid, cfg.params, c);
    const auto& s = traj.states.back();
    finals.push_back({restrict_average(s.u, factor), restrict_average(s.v, factor), s.t});
    table.rows.push_back({grid.n_cells(), Scalar(0), Scalar(0)});
  }
  for (std::size_t k = 1; k < finals.size(); ++k) {
    const auto& a = finals[k];
    const auto& b = finals[k - 1];
    const Field<Scalar> du = a.u - b.u, dv = a.v - b.v;
    const FaceField<Scalar> dw = antiderivative(a, coarse).values - antiderivative(b, coarse).values;
    const Scalar v2 = integrate(dv.cwiseAbs2(), coarse);
    table.rows[k].dist_uv = std::sqrt(integrate(du.cwiseAbs2(), coarse) + v2);
    table.rows[k].dist_wv = std::sqrt(integrate_faces(dw.cwiseAbs2(), coarse) + v2);
  }
  if (table.rows[2].dist_uv > 0) table.contraction_uv = table.rows[1].dist_uv / table.rows[2].dist_uv;
  if (table.rows[2].dist_wv > 0) table.contraction_wv = table.rows[1].dist_wv / table.rows[2].dist_wv;
  return table;
}

}  // namespace xdiff
