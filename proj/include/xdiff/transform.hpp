#pragma once

#include <algorithm>
#include <cmath>

#include "xdiff/timestepper.hpp"

namespace xdiff {

/// Left-anchored antiderivative of u + v, sampled on faces.
template <typename Scalar = double>
struct WField {
  FaceField<Scalar> values;
  Scalar total_mass = Scalar(0);
};

/// w_j = h * sum_{i<j} (u_i + v_i). w_0 = 0 and w_n = integrate(u + v) hold exactly.
template <typename Scalar>
WField<Scalar> antiderivative(const State<Scalar>& s, const Grid<Scalar>& grid) {
  detail::require_cells(s.u, grid, "antiderivative");
  detail::require_cells(s.v, grid, "antiderivative");
  const Eigen::Index n = grid.size();
  const Field<Scalar> density = s.u + s.v;
  WField<Scalar> w;
  w.values.resize(n + 1);
  w.values[0] = Scalar(0);
  // same summation order as integrate(), so w_n equals integrate(u + v) bit for bit
  Scalar acc = Scalar(0);
  for (Eigen::Index i = 0; i < n; ++i) {
    acc += density[i];
    w.values[i + 1] = grid.h() * acc;
  }
  w.total_mass = w.values[n];
  return w;
}

/// Cell-centered derivative of w: (w_{j+1} - w_j) / h.
template <typename Scalar>
Field<Scalar> w_derivative(const WField<Scalar>& w, const Grid<Scalar>& grid) {
  detail::require_faces(w.values, grid, "w_derivative");
  const Eigen::Index n = grid.size();
  return (w.values.tail(n) - w.values.head(n)) / grid.h();
}

/// max over snapshots of |w(1)(t) - w(1)(t0)|, i.e. the drift of total mass.
template <typename Scalar>
Scalar w_endpoint_drift(const Trajectory<Scalar>& traj, const Grid<Scalar>& grid) {
  if (traj.states.empty()) throw ContractViolation("w_endpoint_drift: empty trajectory");
  const Scalar w1_0 = antiderivative(traj.states.front(), grid).total_mass;
  Scalar drift = Scalar(0);
  for (const auto& s : traj.states) {
    drift = std::max(drift, std::abs(antiderivative(s, grid).total_mass - w1_0));
  }
  return drift;
}

/// sup_i |(w_{i+1} - w_i)/h - (u_i + v_i)|. Vanishes up to rounding by construction.
template <typename Scalar>
Scalar w_gradient_identity_check(const State<Scalar>& s, const Grid<Scalar>& grid) {
  const auto w = antiderivative(s, grid);
  return (w_derivative(w, grid) - (s.u + s.v)).template lpNorm<Eigen::Infinity>();
}

}  // namespace xdiff
