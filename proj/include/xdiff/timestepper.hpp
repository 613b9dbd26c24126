#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/LU>

#include "xdiff/model.hpp"

namespace xdiff {

template <typename Scalar = double>
struct State {
  Field<Scalar> u;
  Field<Scalar> v;
  Scalar t = Scalar(0);

  void validate(const Grid<Scalar>& grid) const {
    detail::require_cells(u, grid, "State");
    detail::require_cells(v, grid, "State");
    detail::require_admissible(u, v);
    if (!(t >= Scalar(0))) throw ContractViolation("State time must be nonnegative");
  }
};

template <typename Scalar = double>
struct StepControl {
  Scalar dt_init = Scalar(1e-3);
  Scalar dt_min = Scalar(1e-10);
  Scalar dt_max = Scalar(1e-2);
  /// Sup-norm bound on the dt-scaled residual u' - u - dt (rhs(u') + source).
  Scalar newton_tol = Scalar(1e-10);
  int newton_max_iter = 30;
  /// Growth damping: accepted easy steps grow dt by 2 * safety, clamped to [1, 2].
  Scalar safety = Scalar(0.9);

  bool operator==(const StepControl&) const = default;

  void validate() const {
    if (!(dt_min > 0 && dt_init > 0 && dt_max > 0)) throw ConfigError("time steps must be positive");
    if (!(dt_min <= dt_init && dt_init <= dt_max)) throw ConfigError("need dt_min <= dt_init <= dt_max");
    if (!(newton_tol > 0)) throw ConfigError("newton_tol must be positive");
    if (newton_max_iter < 1) throw ConfigError("newton_max_iter must be positive");
    if (!(safety > 0 && safety <= 1)) throw ConfigError("safety must lie in (0, 1]");
  }
};

template <typename Scalar = double>
struct Trajectory {
  std::vector<State<Scalar>> states;
  long steps_taken = 0;
  long rejections = 0;
  /// Extremes over every accepted state, not only the snapshots.
  Scalar u_min_seen = std::numeric_limits<Scalar>::infinity();
  Scalar u_max_seen = -std::numeric_limits<Scalar>::infinity();
  Scalar v_min_seen = std::numeric_limits<Scalar>::infinity();

  void observe(const State<Scalar>& s) {
    u_min_seen = std::min(u_min_seen, s.u.minCoeff());
    u_max_seen = std::max(u_max_seen, s.u.maxCoeff());
    v_min_seen = std::min(v_min_seen, s.v.minCoeff());
  }
};

/// Additive source (s_u, s_v) evaluated at the new time level. Empty means no source.
template <typename Scalar = double>
using Source = std::function<std::pair<Field<Scalar>, Field<Scalar>>(Scalar t)>;

/// Unknowns interleaved per cell: [u_0, v_0, u_1, v_1, ...].
template <typename Scalar>
Field<Scalar> interleave(const Field<Scalar>& u, const Field<Scalar>& v) {
  Field<Scalar> x(2 * u.size());
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    x[2 * i] = u[i];
    x[2 * i + 1] = v[i];
  }
  return x;
}

template <typename Scalar>
std::pair<Field<Scalar>, Field<Scalar>> deinterleave(const Field<Scalar>& x) {
  const Eigen::Index n = x.size() / 2;
  Field<Scalar> u(n), v(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    u[i] = x[2 * i];
    v[i] = x[2 * i + 1];
  }
  return {std::move(u), std::move(v)};
}

/// Tridiagonal matrix of 2x2 blocks. Row i couples cell i to cells i-1 (lower[i]), i (diag[i]), i+1 (upper[i]).
template <typename Scalar = double>
class BlockTridiagonal {
 public:
  using Block = Eigen::Matrix<Scalar, 2, 2>;
  using Vec2 = Eigen::Matrix<Scalar, 2, 1>;

  explicit BlockTridiagonal(Eigen::Index n)
      : lower(static_cast<std::size_t>(n), Block::Zero()),
        diag(static_cast<std::size_t>(n), Block::Zero()),
        upper(static_cast<std::size_t>(n), Block::Zero()) {}

  Eigen::Index blocks() const { return static_cast<Eigen::Index>(diag.size()); }

  Field<Scalar> apply(const Field<Scalar>& x) const {
    const Eigen::Index n = blocks();
    Field<Scalar> y = Field<Scalar>::Zero(2 * n);
    for (Eigen::Index i = 0; i < n; ++i) {
      Vec2 yi = diag[idx(i)] * x.template segment<2>(2 * i);
      if (i > 0) yi += lower[idx(i)] * x.template segment<2>(2 * (i - 1));
      if (i + 1 < n) yi += upper[idx(i)] * x.template segment<2>(2 * (i + 1));
      y.template segment<2>(2 * i) = yi;
    }
    return y;
  }

  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> to_dense() const {
    const Eigen::Index n = blocks();
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> a =
        Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>::Zero(2 * n, 2 * n);
    for (Eigen::Index i = 0; i < n; ++i) {
      a.template block<2, 2>(2 * i, 2 * i) = diag[idx(i)];
      if (i > 0) a.template block<2, 2>(2 * i, 2 * (i - 1)) = lower[idx(i)];
      if (i + 1 < n) a.template block<2, 2>(2 * i, 2 * (i + 1)) = upper[idx(i)];
    }
    return a;
  }

  /// Block Thomas elimination. Throws NewtonDivergence on a singular pivot.
  Field<Scalar> solve(const Field<Scalar>& b) const {
    const Eigen::Index n = blocks();
    if (b.size() != 2 * n) throw ContractViolation("BlockTridiagonal::solve: size mismatch");
    std::vector<Block> c_prime(idx(n));
    std::vector<Vec2> d_prime(idx(n));
    for (Eigen::Index i = 0; i < n; ++i) {
      Block pivot = diag[idx(i)];
      Vec2 rhs = b.template segment<2>(2 * i);
      if (i > 0) {
        pivot -= lower[idx(i)] * c_prime[idx(i - 1)];
        rhs -= lower[idx(i)] * d_prime[idx(i - 1)];
      }
      const Scalar det = pivot.determinant();
      const Scalar scale = pivot.cwiseAbs().maxCoeff();
      if (!std::isfinite(static_cast<double>(det)) || scale == Scalar(0) ||
          std::abs(det) <= std::numeric_limits<Scalar>::epsilon() * scale * scale) {
        throw NewtonDivergence("singular pivot in block " + std::to_string(i));
      }
      const Block inv = pivot.inverse();
      c_prime[idx(i)] = inv * upper[idx(i)];
      d_prime[idx(i)] = inv * rhs;
    }
    Field<Scalar> x(2 * n);
    Vec2 next = d_prime[idx(n - 1)];
    x.template segment<2>(2 * (n - 1)) = next;
    for (Eigen::Index i = n - 2; i >= 0; --i) {
      next = d_prime[idx(i)] - c_prime[idx(i)] * next;
      x.template segment<2>(2 * i) = next;
    }
    return x;
  }

  std::vector<Block> lower;
  std::vector<Block> diag;
  std::vector<Block> upper;

 private:
  static std::size_t idx(Eigen::Index i) { return static_cast<std::size_t>(i); }
};

/// Backward-Euler residual u' - u - dt (rhs(u') + source), interleaved per cell.
template <typename Scalar>
Field<Scalar> step_residual(const State<Scalar>& guess, const State<Scalar>& prev, Scalar dt,
                            const Grid<Scalar>& grid, const ModelParams<Scalar>& p,
                            const std::pair<Field<Scalar>, Field<Scalar>>* source = nullptr) {
  auto r = detail::rhs_unchecked(guess.u, guess.v, grid, p);
  if (source != nullptr) {
    r.du_dt += source->first;
    r.dv_dt += source->second;
  }
  return interleave<Scalar>(guess.u - prev.u - dt * r.du_dt, guess.v - prev.v - dt * r.dv_dt);
}

/// Exact Jacobian of step_residual with respect to the new state.
template <typename Scalar>
BlockTridiagonal<Scalar> assemble_jacobian(const State<Scalar>& guess, const State<Scalar>& prev, Scalar dt,
                                           const Grid<Scalar>& grid, const ModelParams<Scalar>& p) {
  detail::require_cells(guess.u, grid, "assemble_jacobian");
  detail::require_cells(guess.v, grid, "assemble_jacobian");
  detail::require_cells(prev.u, grid, "assemble_jacobian");
  using Block = typename BlockTridiagonal<Scalar>::Block;
  const Eigen::Index n = grid.size();
  const Scalar inv_h = Scalar(1) / grid.h();
  const Field<Scalar>& u = guess.u;
  const Field<Scalar>& v = guess.v;

  // Jacobian of F = rhs; G = I - dt F is formed at the end.
  BlockTridiagonal<Scalar> jac(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    jac.diag[k] << v[i], u[i], -v[i], -u[i];
  }
  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    const auto l = static_cast<std::size_t>(i);
    const auto r = l + 1;
    const Scalar du = (u[i + 1] - u[i]) * inv_h;
    const Scalar dv = (v[i + 1] - v[i]) * inv_h;
    const auto m = detail::face_mean(u[i] * v[i], u[i + 1] * v[i + 1], p.flux_mean);
    const auto t = detail::taxis_mean(u[i] * u[i] * v[i], u[i + 1] * u[i + 1] * v[i + 1], v[i + 1] - v[i], p);

    // d(flux_u at face i+1/2) / d(u_i, v_i) and d / d(u_{i+1}, v_{i+1})
    const Scalar fu_ul = m.d_left * v[i] * du - m.value * inv_h - t.d_left * Scalar(2) * u[i] * v[i] * dv;
    const Scalar fu_vl = m.d_left * u[i] * du - t.d_left * u[i] * u[i] * dv + t.value * inv_h;
    const Scalar fu_ur = m.d_right * v[i + 1] * du + m.value * inv_h -
                         t.d_right * Scalar(2) * u[i + 1] * v[i + 1] * dv;
    const Scalar fu_vr = m.d_right * u[i + 1] * du - t.d_right * u[i + 1] * u[i + 1] * dv - t.value * inv_h;

    Block left, right;
    left << fu_ul, fu_vl, Scalar(0), -inv_h;
    right << fu_ur, fu_vr, Scalar(0), inv_h;
    left *= inv_h;
    right *= inv_h;

    // cell i gains +flux/h, cell i+1 loses it
    jac.diag[l] += left;
    jac.upper[l] += right;
    jac.diag[r] -= right;
    jac.lower[r] -= left;
  }

  for (Eigen::Index i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    jac.diag[k] = Block::Identity() - dt * jac.diag[k];
    jac.lower[k] *= -dt;
    jac.upper[k] *= -dt;
  }
  return jac;
}

template <typename Scalar = double>
struct StepResult {
  State<Scalar> state;
  int iterations = 0;
  Scalar residual = Scalar(0);
};

/// One backward-Euler step solved by damped Newton.
template <typename Scalar>
StepResult<Scalar> step_with_info(const State<Scalar>& s, Scalar dt, const Grid<Scalar>& grid,
                                  const ModelParams<Scalar>& p, const StepControl<Scalar>& c,
                                  const Source<Scalar>& source = {}) {
  if (!(dt > Scalar(0)) || dt > c.dt_max * (Scalar(1) + Scalar(1e-8))) {
    throw ContractViolation("step: dt outside (0, dt_max]");
  }
  std::pair<Field<Scalar>, Field<Scalar>> src;
  const std::pair<Field<Scalar>, Field<Scalar>>* src_ptr = nullptr;
  if (source) {
    src = source(s.t + dt);
    detail::require_cells(src.first, grid, "step source");
    detail::require_cells(src.second, grid, "step source");
    src_ptr = &src;
  }

  State<Scalar> x{s.u, s.v, s.t + dt};
  Field<Scalar> g = step_residual(x, s, dt, grid, p, src_ptr);
  Scalar norm = g.template lpNorm<Eigen::Infinity>();
  int iter = 0;
  constexpr Scalar min_damping = Scalar(1) / Scalar(1024);
  while (!(norm <= c.newton_tol)) {
    if (iter >= c.newton_max_iter || !std::isfinite(static_cast<double>(norm))) {
      std::ostringstream msg;
      msg << "Newton failed at t=" << static_cast<double>(s.t) << " dt=" << static_cast<double>(dt)
          << " after " << iter << " iterations, residual " << static_cast<double>(norm);
      throw NewtonDivergence(msg.str());
    }
    ++iter;
    const Field<Scalar> delta = assemble_jacobian(x, s, dt, grid, p).solve(-g);
    const Field<Scalar> base = interleave<Scalar>(x.u, x.v);
    Scalar lambda = Scalar(1);
    bool accepted = false;
    while (lambda >= min_damping) {
      auto [u_try, v_try] = deinterleave<Scalar>(base + lambda * delta);
      State<Scalar> trial{std::move(u_try), std::move(v_try), x.t};
      Field<Scalar> g_try = step_residual(trial, s, dt, grid, p, src_ptr);
      const Scalar n_try = g_try.template lpNorm<Eigen::Infinity>();
      if (std::isfinite(static_cast<double>(n_try)) && n_try < norm) {
        x = std::move(trial);
        g = std::move(g_try);
        norm = n_try;
        accepted = true;
        break;
      }
      lambda *= Scalar(0.5);
    }
    if (!accepted) {
      std::ostringstream msg;
      msg << "Newton line search stalled at t=" << static_cast<double>(s.t) << " dt=" << static_cast<double>(dt)
          << " residual " << static_cast<double>(norm);
      throw NewtonDivergence(msg.str());
    }
  }

  for (Eigen::Index i = 0; i < x.u.size(); ++i) {
    if (x.u[i] < Scalar(0)) {
      if (-x.u[i] <= c.newton_tol) {
        x.u[i] = Scalar(0);
      } else {
        throw StepRejected("u went negative (" + std::to_string(static_cast<double>(x.u[i])) + ") at cell " +
                           std::to_string(i));
      }
    }
    if (!(x.v[i] > Scalar(0))) {
      throw StepRejected("v lost positivity at cell " + std::to_string(i));
    }
  }
  return {std::move(x), iter, norm};
}

template <typename Scalar>
State<Scalar> step(const State<Scalar>& s, Scalar dt, const Grid<Scalar>& grid, const ModelParams<Scalar>& p,
                   const StepControl<Scalar>& c, const Source<Scalar>& source = {}) {
  return step_with_info(s, dt, grid, p, c, source).state;
}

namespace detail {

template <typename Scalar>
std::string dump_state(const State<Scalar>& s, Scalar dt) {
  std::ostringstream os;
  os << "t=" << static_cast<double>(s.t) << " dt=" << static_cast<double>(dt)
     << " min_u=" << static_cast<double>(s.u.minCoeff()) << " max_u=" << static_cast<double>(s.u.maxCoeff())
     << " min_v=" << static_cast<double>(s.v.minCoeff()) << " max_v=" << static_cast<double>(s.v.maxCoeff());
  return os.str();
}

}  // namespace detail

/// Integrate to t_end, landing exactly on every requested output time.
/// The trajectory always starts with s0 and, for t_end > 0, ends at t_end.
template <typename Scalar>
Trajectory<Scalar> run(const State<Scalar>& s0, Scalar t_end, const std::vector<Scalar>& output_times,
                       const Grid<Scalar>& grid, const ModelParams<Scalar>& p, const StepControl<Scalar>& c,
                       const Source<Scalar>& source = {}) {
  s0.validate(grid);
  c.validate();
  if (!(t_end >= s0.t)) throw ContractViolation("run: t_end before initial time");

  std::vector<Scalar> targets;
  for (Scalar t : output_times) {
    if (t < s0.t || t > t_end) throw ContractViolation("run: output time outside [t0, t_end]");
    if (t > s0.t) targets.push_back(t);
  }
  if (t_end > s0.t) targets.push_back(t_end);
  std::sort(targets.begin(), targets.end());
  targets.erase(std::unique(targets.begin(), targets.end()), targets.end());

  Trajectory<Scalar> traj;
  traj.states.push_back(s0);
  traj.observe(s0);

  State<Scalar> s = s0;
  Scalar dt = c.dt_init;
  const Scalar growth = std::clamp(Scalar(2) * c.safety, Scalar(1), Scalar(2));
  for (Scalar target : targets) {
    while (s.t < target) {
      const Scalar remaining = target - s.t;
      const bool lands = remaining <= dt * (Scalar(1) + Scalar(1e-8));
      const Scalar dt_step = lands ? remaining : dt;
      try {
        auto result = step_with_info(s, dt_step, grid, p, c, source);
        s = std::move(result.state);
        if (lands) s.t = target;
        ++traj.steps_taken;
        traj.observe(s);
        if (!lands && result.iterations <= 4) dt = std::min(c.dt_max, dt * growth);
      } catch (const SolverError& e) {
        ++traj.rejections;
        dt = std::min(dt, dt_step) * Scalar(0.5);
        if (dt < c.dt_min) {
          throw StepTooSmall(std::string("step size below dt_min: ") + e.what() + "; state " +
                             detail::dump_state(s, dt));
        }
      }
    }
    traj.states.push_back(s);
  }
  return traj;
}

/// n evenly spaced output times ending at t_end (t = 0 is implicit).
template <typename Scalar>
std::vector<Scalar> uniform_output_times(Scalar t_end, int count) {
  std::vector<Scalar> out;
  if (count <= 0) return out;
  out.reserve(static_cast<std::size_t>(count));
  for (int k = 1; k <= count; ++k) out.push_back(t_end * static_cast<Scalar>(k) / static_cast<Scalar>(count));
  return out;
}

}  // namespace xdiff
