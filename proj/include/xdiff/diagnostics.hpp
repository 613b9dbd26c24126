#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "xdiff/transform.hpp"

namespace xdiff {

template <typename Scalar = double>
struct DiagnosticsRecord {
  Scalar t = 0;
  Scalar mass_total = 0;
  Scalar mass_u = 0;
  Scalar mass_v = 0;
  Scalar min_u = 0;
  Scalar min_v = 0;
  Scalar max_u = 0;
  Scalar max_v = 0;
  /// h * sum 1/(u_i + eps)
  Scalar inv_u_entropy = 0;
  /// h * sum over interior faces of vbar (v_x)^2
  Scalar v_dissipation = 0;
};

template <typename Scalar = double>
struct WeakResidualReport {
  Scalar residual_u = 0;
  Scalar residual_v = 0;
  long test_basis_size = 0;
  int refinement_level = 0;
};

template <typename Scalar>
Scalar inv_u_entropy(const Field<Scalar>& u, const Grid<Scalar>& grid, Scalar epsilon) {
  return integrate((u.array() + epsilon).inverse().matrix(), grid);
}

template <typename Scalar>
Scalar v_dissipation(const Field<Scalar>& v, const Grid<Scalar>& grid) {
  const FaceField<Scalar> vx = face_gradient(v, grid);
  const FaceField<Scalar> vbar = face_average(v, grid);
  const Eigen::Index n = grid.size();
  return grid.h() * (vbar.segment(1, n - 1).array() * vx.segment(1, n - 1).array().square()).sum();
}

template <typename Scalar>
DiagnosticsRecord<Scalar> record(const State<Scalar>& s, const Grid<Scalar>& grid, const ModelParams<Scalar>& p) {
  detail::require_cells(s.u, grid, "record");
  detail::require_cells(s.v, grid, "record");
  DiagnosticsRecord<Scalar> r;
  r.t = s.t;
  r.mass_u = integrate(s.u, grid);
  r.mass_v = integrate(s.v, grid);
  r.mass_total = r.mass_u + r.mass_v;
  r.min_u = s.u.minCoeff();
  r.max_u = s.u.maxCoeff();
  r.min_v = s.v.minCoeff();
  r.max_v = s.v.maxCoeff();
  r.inv_u_entropy = inv_u_entropy(s.u, grid, p.epsilon_reg);
  r.v_dissipation = v_dissipation(s.v, grid);
  return r;
}

template <typename Scalar>
std::vector<DiagnosticsRecord<Scalar>> record_all(const Trajectory<Scalar>& traj, const Grid<Scalar>& grid,
                                                  const ModelParams<Scalar>& p) {
  std::vector<DiagnosticsRecord<Scalar>> out;
  out.reserve(traj.states.size());
  for (const auto& s : traj.states) out.push_back(record(s, grid, p));
  return out;
}

/// Trapezoid running integral of samples y over times t; result[0] = 0.
template <typename Scalar>
std::vector<Scalar> cumulative_trapezoid(const std::vector<Scalar>& t, const std::vector<Scalar>& y) {
  std::vector<Scalar> out(t.size(), Scalar(0));
  for (std::size_t k = 1; k < t.size(); ++k) {
    out[k] = out[k - 1] + Scalar(0.5) * (t[k] - t[k - 1]) * (y[k] + y[k - 1]);
  }
  return out;
}

/// Default slack on the entropy inequality: continuous constant 1 plus 20% discretization margin.
template <typename Scalar>
inline constexpr Scalar kEntropySlack = Scalar(1.2);

/// max over snapshot intervals of dS/dt - slack * D, with S = inv_u_entropy and D = v_dissipation
/// (D averaged over the interval). Nonpositive when the differential inequality holds.
template <typename Scalar>
Scalar entropy_inequality_check(const Trajectory<Scalar>& traj, const Grid<Scalar>& grid,
                                const ModelParams<Scalar>& p, Scalar slack = kEntropySlack<Scalar>) {
  if (traj.states.size() < 2) throw ConfigError("entropy check needs at least two snapshots");
  const auto recs = record_all(traj, grid, p);
  Scalar worst = -std::numeric_limits<Scalar>::infinity();
  for (std::size_t k = 1; k < recs.size(); ++k) {
    const Scalar dt = recs[k].t - recs[k - 1].t;
    const Scalar rate = (recs[k].inv_u_entropy - recs[k - 1].inv_u_entropy) / dt;
    const Scalar diss = Scalar(0.5) * (recs[k].v_dissipation + recs[k - 1].v_dissipation);
    worst = std::max(worst, rate - slack * diss);
  }
  return worst;
}

/// Integrated form: max over snapshots t_k > 0 of S(t_k) - S(0) - slack * int_0^{t_k} D.
/// Nonpositive when the bound holds at every snapshot.
template <typename Scalar>
Scalar entropy_bound_margin(const Trajectory<Scalar>& traj, const Grid<Scalar>& grid, Scalar epsilon,
                            Scalar slack = kEntropySlack<Scalar>) {
  if (traj.states.size() < 2) throw ConfigError("entropy bound needs at least two snapshots");
  std::vector<Scalar> t, s, d;
  for (const auto& st : traj.states) {
    t.push_back(st.t);
    s.push_back(inv_u_entropy(st.u, grid, epsilon));
    d.push_back(v_dissipation(st.v, grid));
  }
  const auto cum = cumulative_trapezoid(t, d);
  Scalar margin = -std::numeric_limits<Scalar>::infinity();
  for (std::size_t k = 1; k < t.size(); ++k) margin = std::max(margin, s[k] - s[0] - slack * cum[k]);
  return margin;
}

template <typename Scalar>
Scalar max_mass_drift(const Trajectory<Scalar>& traj, const Grid<Scalar>& grid) {
  if (traj.states.empty()) return Scalar(0);
  const auto& s0 = traj.states.front();
  const Scalar m0 = integrate(s0.u, grid) + integrate(s0.v, grid);
  Scalar drift = 0;
  for (const auto& s : traj.states) {
    drift = std::max(drift, std::abs(integrate(s.u, grid) + integrate(s.v, grid) - m0));
  }
  return drift;
}

/// Comparison bound for v: min v(t) >= min v0 * exp(-U t) with U the largest u seen.
/// Returns observed_min_v / bound; the bound holds when the ratio is >= 1 - tol.
template <typename Scalar>
Scalar v_lower_bound_ratio(const Trajectory<Scalar>& traj) {
  if (traj.states.empty()) throw ContractViolation("v_lower_bound_ratio: empty trajectory");
  const auto& s0 = traj.states.front();
  const Scalar horizon = traj.states.back().t - s0.t;
  const Scalar bound = s0.v.minCoeff() * std::exp(-traj.u_max_seen * horizon);
  return traj.v_min_seen / bound;
}

namespace detail {

/// Piecewise-linear hat on the uniform node set j / nodes, j = 0..nodes.
template <typename Scalar>
Scalar hat(Scalar x, int j, int nodes) {
  const Scalar big_h = Scalar(1) / static_cast<Scalar>(nodes);
  const Scalar r = std::abs(x - static_cast<Scalar>(j) * big_h) / big_h;
  return r < Scalar(1) ? Scalar(1) - r : Scalar(0);
}

/// Defect of one weak identity over the hat basis.
/// mass[k](j) = int u phi_j at snapshot k, drive[k](j) = spatial right-hand side tested against phi_j.
template <typename Scalar>
Scalar weak_defect(const std::vector<Scalar>& t, const std::vector<Field<Scalar>>& mass,
                   const std::vector<Field<Scalar>>& drive, const Field<Scalar>& space_norm2) {
  const std::size_t k_last = t.size() - 1;
  Scalar worst = Scalar(0);
  for (std::size_t m = 0; m < k_last; ++m) {
    // time hat tau_m: 1 at t_m, 0 at the other snapshots, vanishes at T
    const Scalar dt_right = t[m + 1] - t[m];
    Field<Scalar> lhs, rhs;
    Scalar time_norm2 = dt_right / Scalar(3);
    if (m == 0) {
      lhs = Scalar(0.5) * (mass[1] - mass[0]);
      rhs = dt_right / Scalar(6) * (Scalar(2) * drive[0] + drive[1]);
    } else {
      const Scalar dt_left = t[m] - t[m - 1];
      time_norm2 += dt_left / Scalar(3);
      lhs = Scalar(0.5) * (mass[m + 1] - mass[m - 1]);
      rhs = dt_left / Scalar(6) * (drive[m - 1] + Scalar(2) * drive[m]) +
            dt_right / Scalar(6) * (Scalar(2) * drive[m] + drive[m + 1]);
    }
    const Field<Scalar> scaled = (lhs - rhs).cwiseAbs().cwiseQuotient((space_norm2 * time_norm2).cwiseSqrt());
    worst = std::max(worst, scaled.maxCoeff());
  }
  return worst;
}

}  // namespace detail

/// Defects of the weak formulations of both equations, tested against tensor products of
/// spatial hats on 2^level uniform intervals and temporal hats on the snapshot times
/// (nonzero at t = 0, zero at the final time). Snapshot fields are interpolated linearly in
/// time, so every time integral is exact. Each defect is divided by the space-time L2 norm
/// of its test function; the report holds the maximum over the basis.
template <typename Scalar>
WeakResidualReport<Scalar> weak_residual(const Trajectory<Scalar>& traj, const Grid<Scalar>& grid,
                                         const ModelParams<Scalar>& p, int level) {
  if (traj.states.size() < 2) throw ConfigError("weak residual needs at least two snapshots");
  if (level < 0 || level > 30 || (std::size_t{1} << level) > grid.n_cells()) {
    throw ConfigError("weak residual level " + std::to_string(level) + " too fine for " +
                      std::to_string(grid.n_cells()) + " cells");
  }
  const int nodes = 1 << level;
  const Eigen::Index n = grid.size();
  const Scalar h = grid.h();
  const Scalar big_h = Scalar(1) / static_cast<Scalar>(nodes);

  // phi_j at cell centers, and its discrete derivative on faces
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> phi(n, nodes + 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int j = 0; j <= nodes; ++j) phi(i, j) = detail::hat(grid.center(i), j, nodes);
  }
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> dphi =
      Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>::Zero(n + 1, nodes + 1);
  dphi.middleRows(1, n - 1) = (phi.bottomRows(n - 1) - phi.topRows(n - 1)) / h;

  Field<Scalar> space_norm2 = Field<Scalar>::Constant(nodes + 1, Scalar(2) * big_h / Scalar(3));
  space_norm2[0] = space_norm2[nodes] = big_h / Scalar(3);

  std::vector<Scalar> t;
  std::vector<Field<Scalar>> mass_u, mass_v, drive_u, drive_v;
  for (const auto& s : traj.states) {
    t.push_back(s.t);
    const Field<Scalar> reaction = s.u.cwiseProduct(s.v);
    const FaceField<Scalar> fu = detail::flux_u_unchecked(s.u, s.v, grid, p);
    const FaceField<Scalar> fv = face_gradient(s.v, grid);
    mass_u.push_back(h * phi.transpose() * s.u);
    mass_v.push_back(h * phi.transpose() * s.v);
    drive_u.push_back(h * (phi.transpose() * reaction - dphi.transpose() * fu));
    drive_v.push_back(-h * (phi.transpose() * reaction + dphi.transpose() * fv));
  }
  for (std::size_t k = 1; k < t.size(); ++k) {
    if (!(t[k] > t[k - 1])) throw ConfigError("weak residual needs strictly increasing snapshot times");
  }

  WeakResidualReport<Scalar> report;
  report.residual_u = detail::weak_defect(t, mass_u, drive_u, space_norm2);
  report.residual_v = detail::weak_defect(t, mass_v, drive_v, space_norm2);
  report.test_basis_size = static_cast<long>(nodes + 1) * static_cast<long>(t.size() - 1);
  report.refinement_level = level;
  return report;
}

}  // namespace xdiff
