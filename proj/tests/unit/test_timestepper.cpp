#include <cmath>
#include <random>

#include <gtest/gtest.h>
#include <Eigen/LU>

#include "test_support.hpp"

using namespace xdiff;
using xdiff::fixtures::bump;
using xdiff::fixtures::cosine;
using xdiff::fixtures::random_state;

namespace {

const std::vector<ModelParams<double>> kAllParams{
    {1e-8, FluxMean::arithmetic, TaxisScheme::centered},
    {1e-8, FluxMean::harmonic, TaxisScheme::centered},
    {1e-8, FluxMean::arithmetic, TaxisScheme::upwind},
    {1e-8, FluxMean::harmonic, TaxisScheme::upwind},
};

StepControl<double> fixed(double dt) {
  StepControl<double> c;
  c.dt_init = c.dt_max = dt;
  c.dt_min = std::min(c.dt_min, dt);
  return c;
}

/// Scalar Newton on u' - u - dt u' (s - u') = 0 with s = u + v.
double uniform_step_oracle(double u, double v, double dt) {
  const double s = u + v;
  double x = u;
  for (int k = 0; k < 100; ++k) {
    const double g = x - u - dt * x * (s - x);
    const double dg = 1 - dt * s + 2 * dt * x;
    const double next = x - g / dg;
    if (next == x) break;
    x = next;
  }
  return x;
}

double mass(const State<double>& s, const Grid<double>& g) { return integrate(s.u, g) + integrate(s.v, g); }

/// One accepted step: halves dt on rejection, as run() does. Rough random data can push u negative.
State<double> accepted_step(const State<double>& s, double dt, const Grid<double>& g, const ModelParams<double>& p,
                            const StepControl<double>& c) {
  for (;;) {
    try {
      return step(s, dt, g, p, c);
    } catch (const SolverError&) {
      dt *= 0.5;
      if (dt < 1e-12) throw;
    }
  }
}

}  // namespace

TEST(Step, StationaryHeatState) {
  const Grid<double> g(16);
  const State<double> s{Field<double>::Zero(16), Field<double>::Ones(16), 0.0};
  const auto next = step(s, 0.1, g, ModelParams<double>{}, fixed(0.1));
  EXPECT_TRUE(next.u.isZero(0.0));
  EXPECT_TRUE(next.v.isOnes(0.0));
  EXPECT_DOUBLE_EQ(next.t, 0.1);
}

TEST(Step, UniformStateMatchesScalarOracle) {
  const Grid<double> g(10);
  for (const auto& [a, b, dt] : std::vector<std::tuple<double, double, double>>{
           {0.2, 0.8, 0.01}, {1.0, 0.5, 0.1}, {0.0, 1.0, 0.05}, {2.5, 0.1, 0.2}}) {
    const State<double> s{Field<double>::Constant(10, a), Field<double>::Constant(10, b), 0.0};
    StepControl<double> c = fixed(dt);
    c.newton_tol = 1e-14;
    const auto next = step(s, dt, g, ModelParams<double>{}, c);
    const double u_star = uniform_step_oracle(a, b, dt);
    for (int i = 0; i < 10; ++i) {
      EXPECT_NEAR(next.u[i], u_star, 1e-13);
      EXPECT_NEAR(next.v[i], a + b - u_star, 1e-13);
    }
  }
}

TEST(Step, ConservesMassOnRandomStates) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 40; ++trial) {
    const Grid<double> g(4 + trial % 20);
    const auto s = random_state(rng, g, 0.0, 1.0, 0.2, 1.5);
    for (const auto& p : kAllParams) {
      const auto next = accepted_step(s, 1e-3, g, p, fixed(1e-3));
      EXPECT_LE(std::abs(mass(next, g) - mass(s, g)), 1e-12 * std::max(1.0, mass(s, g)));
      EXPECT_GE(next.u.minCoeff(), 0.0);
      EXPECT_GT(next.v.minCoeff(), 0.0);
    }
  }
}

TEST(Step, RejectsDtOutsideRange) {
  const Grid<double> g(4);
  const State<double> s{Field<double>::Zero(4), Field<double>::Ones(4), 0.0};
  EXPECT_THROW(step(s, 0.0, g, ModelParams<double>{}, fixed(0.1)), ContractViolation);
  EXPECT_THROW(step(s, 0.2, g, ModelParams<double>{}, fixed(0.1)), ContractViolation);
}

TEST(Step, NewtonDivergenceWhenIterationsExhausted) {
  const Grid<double> g(32);
  const State<double> s{bump(g, 0.5, 0.05, 0.1, 2.0), cosine(g, 1.0, 0.5, 3), 0.0};
  StepControl<double> c = fixed(1e-2);
  c.newton_max_iter = 1;
  c.newton_tol = 1e-14;
  EXPECT_THROW(step(s, 1e-2, g, ModelParams<double>{}, c), NewtonDivergence);
}

TEST(Run, ZeroHorizonReturnsInitialState) {
  const Grid<double> g(8);
  const State<double> s{Field<double>::Constant(8, 0.3), Field<double>::Ones(8), 0.0};
  const auto traj = run(s, 0.0, {}, g, ModelParams<double>{}, StepControl<double>{});
  ASSERT_EQ(traj.states.size(), 1u);
  EXPECT_EQ(traj.states[0].u, s.u);
  EXPECT_EQ(traj.steps_taken, 0);
}

TEST(Run, LogisticReduction) {
  const Grid<double> g(2);
  const State<double> s{Field<double>::Constant(2, 0.2), Field<double>::Constant(2, 0.8), 0.0};
  const double t_end = std::log(4.0);
  const auto traj = run(s, t_end, {}, g, ModelParams<double>{}, fixed(1e-5));
  const auto& last = traj.states.back();
  EXPECT_EQ(last.t, t_end);
  for (int i = 0; i < 2; ++i) EXPECT_NEAR(last.u[i], 1.0 / (1.0 + 4.0 * std::exp(-t_end)), 1e-6);
  EXPECT_NEAR(last.u[0], 0.5, 1e-6);
}

TEST(Run, LandsExactlyOnOutputTimes) {
  const Grid<double> g(32);
  const State<double> s{bump(g, 0.5, 0.1, 0.2, 0.8), cosine(g, 1.0, 0.5, 1), 0.0};
  const std::vector<double> outputs{0.0, 0.0137, 0.05, 0.1, 0.25};
  StepControl<double> c;
  c.dt_init = 3e-3;
  const auto traj = run(s, 0.3, outputs, g, ModelParams<double>{}, c);
  const std::vector<double> expected{0.0, 0.0137, 0.05, 0.1, 0.25, 0.3};
  ASSERT_EQ(traj.states.size(), expected.size());
  for (std::size_t k = 0; k < expected.size(); ++k) EXPECT_EQ(traj.states[k].t, expected[k]);
  EXPECT_THROW(run(s, 0.3, {0.5}, g, ModelParams<double>{}, c), ContractViolation);
}

TEST(Run, StepTooSmallWhenRejectionsExhaustDt) {
  const Grid<double> g(32);
  const State<double> s{bump(g, 0.5, 0.05, 0.1, 2.0), cosine(g, 1.0, 0.5, 3), 0.0};
  StepControl<double> c = fixed(1e-2);
  c.dt_min = 5e-3;
  c.newton_max_iter = 1;
  c.newton_tol = 1e-15;
  try {
    run(s, 0.1, {}, g, ModelParams<double>{}, c);
    FAIL() << "expected StepTooSmall";
  } catch (const StepTooSmall& e) {
    EXPECT_NE(std::string(e.what()).find("min_v="), std::string::npos);
  }
}

TEST(Run, RejectsInvalidInitialState) {
  const Grid<double> g(4);
  State<double> s{Field<double>::Ones(4), Field<double>::Ones(4), 0.0};
  s.v[2] = 0.0;
  EXPECT_THROW(run(s, 0.1, {}, g, ModelParams<double>{}, StepControl<double>{}), StateError);
}

TEST(RunProperties, MonotoneMassSplitAndPositivity) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    const Grid<double> g(16 + 4 * trial);
    State<double> s = random_state(rng, g, 0.0, 1.0, 0.3, 1.2);
    const StepControl<double> c = fixed(2e-3);
    for (int k = 0; k < 20; ++k) {
      const auto next = accepted_step(s, 2e-3, g, kAllParams[trial % 4], c);
      EXPECT_GE(integrate(next.u, g), integrate(s.u, g) - c.newton_tol);
      EXPECT_LE(integrate(next.v, g), integrate(s.v, g) + c.newton_tol);
      EXPECT_GE(next.u.minCoeff(), 0.0);
      EXPECT_GT(next.v.minCoeff(), 0.0);
      s = next;
    }
  }
}

TEST(RunProperties, ComparisonBoundOnNutrient) {
  const Grid<double> g(64);
  const State<double> s{bump(g, 0.5, 0.1, 0.2, 0.8), cosine(g, 1.0, 0.5, 1), 0.0};
  const auto traj = run(s, 0.5, uniform_output_times(0.5, 10), g, ModelParams<double>{}, StepControl<double>{});
  EXPECT_GE(v_lower_bound_ratio(traj), 1.0 - 1e-3);
}

TEST(RunProperties, Deterministic) {
  const Grid<double> g(48);
  const State<double> s{bump(g, 0.3, 0.1, 0.1, 0.9), cosine(g, 1.0, 0.4, 2), 0.0};
  const auto a = run(s, 0.2, uniform_output_times(0.2, 5), g, ModelParams<double>{}, StepControl<double>{});
  const auto b = run(s, 0.2, uniform_output_times(0.2, 5), g, ModelParams<double>{}, StepControl<double>{});
  ASSERT_EQ(a.states.size(), b.states.size());
  for (std::size_t k = 0; k < a.states.size(); ++k) {
    EXPECT_EQ(a.states[k].u, b.states[k].u);
    EXPECT_EQ(a.states[k].v, b.states[k].v);
    EXPECT_EQ(a.states[k].t, b.states[k].t);
  }
  EXPECT_EQ(a.steps_taken, b.steps_taken);
}

TEST(Jacobian, ExtinctPopulationStructure) {
  const Grid<double> g(6);
  const State<double> s{Field<double>::Zero(6), Field<double>::Ones(6), 0.0};
  const double dt = 0.1;
  const auto jac = assemble_jacobian(s, s, dt, g, ModelParams<double>{});
  for (int i = 0; i < 6; ++i) {
    // u rows: identity minus dt times the reaction derivative d(uv)/du = v
    EXPECT_DOUBLE_EQ(jac.diag[i](0, 0), 1.0 - dt);
    EXPECT_EQ(jac.diag[i](0, 1), 0.0);
    if (i > 0) EXPECT_TRUE(jac.lower[i].row(0).isZero(0.0));
    if (i < 5) EXPECT_TRUE(jac.upper[i].row(0).isZero(0.0));
  }
}

TEST(Jacobian, MatchesCentralDifferences) {
  std::mt19937_64 rng(41);
  const Grid<double> g(6);
  for (int trial = 0; trial < 5; ++trial) {
    const auto prev = random_state(rng, g, 0.1, 1.0, 0.3, 1.5);
    const auto guess = random_state(rng, g, 0.1, 1.0, 0.3, 1.5);
    const double dt = 0.05;
    for (const auto& p : kAllParams) {
      const auto dense = assemble_jacobian(guess, prev, dt, g, p).to_dense();
      const Field<double> x0 = interleave<double>(guess.u, guess.v);
      Eigen::MatrixXd fd(12, 12);
      for (int j = 0; j < 12; ++j) {
        const double eps = 1e-6 * (1 + std::abs(x0[j]));
        Field<double> xp = x0, xm = x0;
        xp[j] += eps;
        xm[j] -= eps;
        const auto [up, vp] = deinterleave<double>(xp);
        const auto [um, vm] = deinterleave<double>(xm);
        fd.col(j) = (step_residual<double>({up, vp, 0.0}, prev, dt, g, p) -
                     step_residual<double>({um, vm, 0.0}, prev, dt, g, p)) /
                    (2 * eps);
      }
      const double scale = std::max(1.0, dense.cwiseAbs().maxCoeff());
      EXPECT_LE((dense - fd).cwiseAbs().maxCoeff(), 1e-6 * scale);
    }
  }
}

TEST(Jacobian, SmallDtConvergesInOneIteration) {
  std::mt19937_64 rng(43);
  const Grid<double> g(12);
  const auto s = random_state(rng, g, 0.1, 1.0, 0.3, 1.5);
  StepControl<double> c = fixed(1e-9);
  c.newton_tol = 1e-12;
  const auto res = step_with_info(s, 1e-9, g, ModelParams<double>{}, c);
  EXPECT_LE(res.iterations, 1);
  const auto jac = assemble_jacobian(s, s, 1e-9, g, ModelParams<double>{}).to_dense();
  EXPECT_LE((jac - Eigen::MatrixXd::Identity(24, 24)).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(BlockTridiagonal, ThomasMatchesDenseLu) {
  std::mt19937_64 rng(51);
  std::uniform_real_distribution<double> dist(-1, 1);
  for (int n : {1, 2, 5, 17}) {
    BlockTridiagonal<double> a(n);
    for (int i = 0; i < n; ++i) {
      a.diag[i] = Eigen::Matrix2d::Identity() * 6;
      for (int r = 0; r < 2; ++r) {
        for (int col = 0; col < 2; ++col) {
          a.diag[i](r, col) += dist(rng);
          a.lower[i](r, col) = dist(rng);
          a.upper[i](r, col) = dist(rng);
        }
      }
    }
    Field<double> b(2 * n);
    for (auto& x : b) x = dist(rng);
    const Field<double> x = a.solve(b);
    const Field<double> oracle = a.to_dense().partialPivLu().solve(b);
    EXPECT_LE((x - oracle).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LE((a.apply(x) - b).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(BlockTridiagonal, SingularPivotThrows) {
  BlockTridiagonal<double> a(3);
  a.diag[0] = Eigen::Matrix2d::Identity();
  a.diag[2] = Eigen::Matrix2d::Identity();
  a.diag[1] << 1, 2, 2, 4;
  EXPECT_THROW(a.solve(Field<double>::Ones(6)), NewtonDivergence);
}

TEST(StepControl, Validation) {
  StepControl<double> c;
  EXPECT_NO_THROW(c.validate());
  c.dt_init = 1.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = StepControl<double>{};
  c.safety = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = StepControl<double>{};
  c.newton_max_iter = 0;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Interleave, RoundTrip) {
  Field<double> u(3), v(3);
  u << 1, 2, 3;
  v << 4, 5, 6;
  const Field<double> x = interleave<double>(u, v);
  EXPECT_EQ(x[1], 4.0);
  EXPECT_EQ(x[4], 3.0);
  const auto [u2, v2] = deinterleave<double>(x);
  EXPECT_EQ(u2, u);
  EXPECT_EQ(v2, v);
}
