#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include "xdiff/grid.hpp"

namespace xdiff {

enum class FluxMean { arithmetic, harmonic };
enum class TaxisScheme { centered, upwind };

template <typename Scalar = double>
struct ModelParams {
  /// Regularizer in the 1/(u + eps) entropy monitor. Not applied to the fluxes.
  Scalar epsilon_reg = Scalar(1e-8);
  FluxMean flux_mean = FluxMean::arithmetic;
  TaxisScheme taxis_scheme = TaxisScheme::centered;

  bool operator==(const ModelParams&) const = default;

  void validate() const {
    if (!(epsilon_reg >= Scalar(0) && epsilon_reg <= Scalar(1e-2))) {
      throw ConfigError("epsilon_reg must lie in [0, 1e-2]");
    }
  }
};

template <typename Scalar>
struct Rhs {
  Field<Scalar> du_dt;
  Field<Scalar> dv_dt;
};

namespace detail {

/// Face mean of two nonnegative mobilities and its partial derivatives.
template <typename Scalar>
struct FaceMean {
  Scalar value;
  Scalar d_left;
  Scalar d_right;
};

template <typename Scalar>
FaceMean<Scalar> face_mean(Scalar a, Scalar b, FluxMean mean) {
  if (mean == FluxMean::arithmetic) return {Scalar(0.5) * (a + b), Scalar(0.5), Scalar(0.5)};
  if (a == b) return {a, Scalar(0.5), Scalar(0.5)};
  const Scalar s = a + b;
  if (s <= Scalar(0)) return {Scalar(0), Scalar(0), Scalar(0)};
  return {Scalar(2) * a * b / s, Scalar(2) * b * b / (s * s), Scalar(2) * a * a / (s * s)};
}

/// Mobility of the taxis term u^2 v at a face; upwinding follows the sign of v_{i+1} - v_i.
template <typename Scalar>
FaceMean<Scalar> taxis_mean(Scalar b_left, Scalar b_right, Scalar dv, const ModelParams<Scalar>& p) {
  if (p.taxis_scheme == TaxisScheme::upwind) {
    if (dv > Scalar(0)) return {b_left, Scalar(1), Scalar(0)};
    return {b_right, Scalar(0), Scalar(1)};
  }
  return face_mean(b_left, b_right, p.flux_mean);
}

/// The u-flux M (u_{i+1}-u_i)/h - N (v_{i+1}-v_i)/h without admissibility checks.
/// Newton iterates may leave the admissible set transiently, so this variant never throws.
template <typename Scalar>
FaceField<Scalar> flux_u_unchecked(const Field<Scalar>& u, const Field<Scalar>& v, const Grid<Scalar>& grid,
                                   const ModelParams<Scalar>& p) {
  const Eigen::Index n = grid.size();
  const Scalar inv_h = Scalar(1) / grid.h();
  FaceField<Scalar> f = FaceField<Scalar>::Zero(n + 1);
  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    const Scalar du = u[i + 1] - u[i];
    const Scalar dv = v[i + 1] - v[i];
    const auto m = face_mean(u[i] * v[i], u[i + 1] * v[i + 1], p.flux_mean);
    const auto t = taxis_mean(u[i] * u[i] * v[i], u[i + 1] * u[i + 1] * v[i + 1], dv, p);
    f[i + 1] = m.value * du * inv_h - t.value * dv * inv_h;
  }
  return f;
}

template <typename Scalar>
void require_admissible(const Field<Scalar>& u, const Field<Scalar>& v) {
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    if (!std::isfinite(static_cast<double>(u[i])) || !(u[i] >= Scalar(0))) {
      throw StateError("u must be finite and nonnegative", static_cast<std::size_t>(i));
    }
  }
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (!std::isfinite(static_cast<double>(v[i])) || !(v[i] > Scalar(0))) {
      throw StateError("v must be finite and positive", static_cast<std::size_t>(i));
    }
  }
}

template <typename Scalar>
Rhs<Scalar> rhs_unchecked(const Field<Scalar>& u, const Field<Scalar>& v, const Grid<Scalar>& grid,
                          const ModelParams<Scalar>& p) {
  const Field<Scalar> reaction = u.cwiseProduct(v);
  return {face_divergence(flux_u_unchecked(u, v, grid, p), grid) + reaction,
          face_divergence(face_gradient(v, grid), grid) - reaction};
}

}  // namespace detail

/// Cross-diffusion flux u v u_x - u^2 v v_x on faces; zero on the boundary.
template <typename Scalar>
FaceField<Scalar> flux_u(const Field<Scalar>& u, const Field<Scalar>& v, const Grid<Scalar>& grid,
                         const ModelParams<Scalar>& p) {
  detail::require_cells(u, grid, "flux_u");
  detail::require_cells(v, grid, "flux_u");
  detail::require_admissible(u, v);
  return detail::flux_u_unchecked(u, v, grid, p);
}

template <typename Scalar>
FaceField<Scalar> flux_v(const Field<Scalar>& v, const Grid<Scalar>& grid) {
  return face_gradient(v, grid);
}

/// Semi-discrete right-hand side: flux divergence plus the paired reaction +uv / -uv.
template <typename Scalar>
Rhs<Scalar> rhs(const Field<Scalar>& u, const Field<Scalar>& v, const Grid<Scalar>& grid,
                const ModelParams<Scalar>& p) {
  const Field<Scalar> reaction = u.cwiseProduct(v);
  return {face_divergence(flux_u(u, v, grid, p), grid) + reaction,
          face_divergence(flux_v(v, grid), grid) - reaction};
}

}  // namespace xdiff
