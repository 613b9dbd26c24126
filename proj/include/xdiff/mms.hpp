#pragma once

#include <cmath>
#include <numbers>

#include "xdiff/timestepper.hpp"

namespace xdiff::mms {

/// Pointwise jet of one unknown: value, first and second space derivative, time derivative.
template <typename Scalar>
struct Jet {
  Scalar value, dx, dxx, dt;
};

/// Source terms that make a smooth pair (u, v) an exact solution of
///   u_t = (u v u_x - u^2 v v_x)_x + u v,   v_t = v_xx - u v.
template <typename Scalar>
std::pair<Scalar, Scalar> source_from_jets(const Jet<Scalar>& u, const Jet<Scalar>& v) {
  const Scalar flux_dx = (v.value * u.dx + u.value * v.dx) * u.dx + u.value * v.value * u.dxx -
                         (Scalar(2) * u.value * u.dx * v.value * v.dx + u.value * u.value * v.dx * v.dx +
                          u.value * u.value * v.value * v.dxx);
  const Scalar reaction = u.value * v.value;
  return {u.dt - flux_dx - reaction, v.dt - v.dxx + reaction};
}

/// u* = u_base + amp cos(pi x) e^{-t},  v* = v_base + amp cos(pi x) e^{-t}.
/// Both satisfy the homogeneous Neumann conditions, so the no-flux scheme applies unchanged.
template <typename Scalar = double>
struct CosineSolution {
  Scalar u_base = Scalar(0.5);
  Scalar v_base = Scalar(1);
  Scalar amp = Scalar(0.25);

  Jet<Scalar> jet(Scalar base, Scalar x, Scalar t) const {
    const Scalar pi = std::numbers::pi_v<Scalar>;
    const Scalar e = amp * std::exp(-t);
    const Scalar c = std::cos(pi * x), s = std::sin(pi * x);
    return {base + e * c, -pi * e * s, -pi * pi * e * c, -e * c};
  }
  Jet<Scalar> u(Scalar x, Scalar t) const { return jet(u_base, x, t); }
  Jet<Scalar> v(Scalar x, Scalar t) const { return jet(v_base, x, t); }

  State<Scalar> sample(const Grid<Scalar>& grid, Scalar t) const {
    State<Scalar> s{Field<Scalar>(grid.size()), Field<Scalar>(grid.size()), t};
    for (Eigen::Index i = 0; i < grid.size(); ++i) {
      s.u[i] = u(grid.center(i), t).value;
      s.v[i] = v(grid.center(i), t).value;
    }
    return s;
  }

  /// Source evaluated pointwise at cell centers.
  Source<Scalar> source(const Grid<Scalar>& grid) const {
    return [sol = *this, grid](Scalar t) {
      std::pair<Field<Scalar>, Field<Scalar>> out{Field<Scalar>(grid.size()), Field<Scalar>(grid.size())};
      for (Eigen::Index i = 0; i < grid.size(); ++i) {
        const Scalar x = grid.center(i);
        const auto [su, sv] = source_from_jets(sol.u(x, t), sol.v(x, t));
        out.first[i] = su;
        out.second[i] = sv;
      }
      return out;
    };
  }
};

/// Discrete L2 distance of (u, v) from the exact solution sampled at cell centers.
template <typename Scalar>
Scalar l2_error(const State<Scalar>& s, const CosineSolution<Scalar>& sol, const Grid<Scalar>& grid) {
  const State<Scalar> exact = sol.sample(grid, s.t);
  return std::sqrt(integrate((s.u - exact.u).cwiseAbs2(), grid) + integrate((s.v - exact.v).cwiseAbs2(), grid));
}

}  // namespace xdiff::mms
