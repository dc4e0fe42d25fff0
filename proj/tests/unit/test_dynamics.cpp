#include <gtest/gtest.h>

#include <cmath>

#include "generators.hpp"
#include "invreg/dynamics.hpp"
#include "invreg/errors.hpp"
#include "invreg/scenarios.hpp"
#include "models.hpp"

namespace invreg {
namespace {

using testing::Gen;
using testing::max_abs_diff;

const ControllerMode kTheorem1{};
const ControllerMode kKappaZero{ControllerVariant::theorem2_kappa_zero};

const Models& scalar() {
  static const Models m = builtin("scalar-equilibrium").models;
  return m;
}

const Models& hopf() {
  static const Models m = builtin("hopf-circle").models;
  return m;
}

TEST(Alpha, IdentityProduct) {
  const Models m = testing::identity_models(2, 1.0);
  EXPECT_EQ(alpha(m.plant(), Vector{0.3, -7.0}), Matrix::identity(2));
}

TEST(Alpha, HopfColumnTimesRow) {
  EXPECT_EQ(alpha(hopf().plant(), Vector{1.0, 0.0}), Matrix::from_rows({{0, 0}, {1, 0}}));
}

TEST(Alpha, HopfGramOnCircle) {
  for (double t : {0.0, 0.4, 1.3, 2.9, 5.0}) {
    const Matrix a = alpha(hopf().plant(), Vector{std::cos(t), std::sin(t)});
    const Matrix g = a.transpose() * a;
    const double c = std::cos(t), s = std::sin(t);
    EXPECT_LE(max_abs_diff(g, Matrix::from_rows({{c * c, c * s}, {c * s, s * s}})), 1e-15);
  }
}

TEST(BigPsi, KappaZeroIdentity) {
  const Models m = testing::identity_models(2, 5.0);
  EXPECT_EQ(big_psi(m, kKappaZero, Vector{1.0, 2.0}), Matrix::identity(2));
}

TEST(BigPsi, ScalarBenchmark) {
  EXPECT_EQ(big_psi(scalar(), kTheorem1, Vector{1.0}), Matrix::from_rows({{2}}));
  EXPECT_EQ(big_psi(scalar(), kTheorem1, Vector{-3.0}), Matrix::from_rows({{-6}}));
}

TEST(ThetaHat, ZeroStateReturnsIntegralPart) {
  const Vector v{0.7, -1.1};
  EXPECT_EQ(theta_hat(hopf(), kTheorem1, Vector{0.0, 0.0}, Vector{3.0, -2.0}, v), v);
}

TEST(ThetaHat, ScalarBenchmark) {
  EXPECT_EQ(theta_hat(scalar(), kTheorem1, Vector{1.0}, Vector{1.0}, Vector{0.0}), Vector{2.0});
  EXPECT_EQ(theta_hat(scalar(), kTheorem1, Vector{0.5}, Vector{2.0}, Vector{-1.0}),
            Vector{1.0});
}

TEST(ThetaHat, RecomputationIsBitIdentical) {
  Gen gen(31);
  for (int trial = 0; trial < 100; ++trial) {
    const Vector x = gen.vector(2, -2, 2), xi = gen.vector(2, -2, 2), ti = gen.vector(2, -2, 2);
    ASSERT_EQ(theta_hat(hopf(), kTheorem1, x, xi, ti), theta_hat(hopf(), kTheorem1, x, xi, ti));
  }
}

TEST(ControlU, ZeroEstimateGivesStabilizer) {
  const Vector x{1.3, -0.4};
  EXPECT_EQ(control_u(hopf(), x, Vector{0.2, 0.1}, Vector{0.0, 0.0}), hopf().target().u0(x));
}

TEST(ControlU, ScalarBenchmark) {
  EXPECT_EQ(control_u(scalar(), Vector{1.0}, Vector{1.0}, Vector{2.0}), Vector{-4.0});
}

TEST(ControlU, HopfOnCircle) {
  EXPECT_EQ(control_u(hopf(), Vector{1.0, 0.0}, Vector{1.0, 0.0}, Vector{0.6, -0.9}),
            Vector{-0.6});
}

TEST(DBigPsi, ConstantRegressorAndKappa) {
  const Models m = testing::identity_models(2, 3.0);
  EXPECT_EQ(d_big_psi(m, kTheorem1, Vector{1.0, 2.0}, Vector{-4.0, 0.5}), Matrix(2, 2));
}

TEST(DBigPsi, ScalarBenchmark) {
  for (double xi : {-2.0, 0.0, 1.5}) {
    EXPECT_EQ(d_big_psi(scalar(), kTheorem1, Vector{xi}, Vector{3.0}), Matrix::from_rows({{6}}));
  }
}

TEST(DBigPsi, HopfKappaZeroFiniteDifferenceMatchesAnalytic) {
  const Vector v{1.0, 0.0};
  for (const Vector& xi : {Vector{1.0, 0.0}, Vector{0.3, -0.8}, Vector{-1.4, 2.2}}) {
    // Psi(xi) = (Gu [xi_1, xi_2])^T = [[0, xi_1], [0, xi_2]], so DPsi[v] = [[0, v_1], [0, v_2]].
    const Matrix analytic = Matrix::from_rows({{0, v[0]}, {0, v[1]}});
    EXPECT_LE(max_abs_diff(d_big_psi_fd(hopf(), kKappaZero, xi, v), analytic), 1e-6);
    EXPECT_LE(max_abs_diff(d_big_psi(hopf(), kKappaZero, xi, v), analytic), 1e-12);
  }
}

TEST(DBigPsiProperty, AnalyticAgreesWithFiniteDifferences) {
  Gen gen(32);
  for (const auto& name : builtin_names()) {
    const Scenario sc = builtin(name);
    for (int trial = 0; trial < 200; ++trial) {
      Vector xi = gen.vector(sc.models.n(), -2.5, 2.5);
      if (norm(xi) < 0.1) continue;
      const Vector v = gen.vector(sc.models.n(), -1.0, 1.0);
      ASSERT_LE(max_abs_diff(d_big_psi(sc.models, sc.mode, xi, v),
                             d_big_psi_fd(sc.models, sc.mode, xi, v)),
                1e-6)
          << name << " trial " << trial;
    }
  }
}

TEST(ThetaHatIRhs, VanishesAtRest) {
  EXPECT_EQ(theta_hat_i_rhs(scalar(), kTheorem1, Vector{0.0}, Vector{1.0}, Vector{0.0},
                            Vector{0.0}, Vector{0.0}),
            Vector{0.0});
}

TEST(ThetaHatIRhs, ScalarMatchesObserverRate) {
  const Vector x{1.0}, xi{0.0}, nu{0.0}, ti{0.3};
  const Vector th = theta_hat(scalar(), kTheorem1, x, xi, ti);
  const Vector u = control_u(scalar(), x, xi, th);
  const ObserverRate obs = observer_rhs(scalar(), kTheorem1, x, xi, nu, u);
  const Vector r = theta_hat_i_rhs(scalar(), kTheorem1, x, xi, nu, ti, u);
  // Psi(0) = 0 leaves only -H^-1 DPsi[xi'] x = -2 xi'.
  EXPECT_NEAR(r[0], -2.0 * obs.xi[0], 1e-14);
}

TEST(ObserverRhs, IdentityInitializationIsFixedPoint) {
  Gen gen(33);
  const Scenario sc = builtin("hopf-circle-drift");
  for (int trial = 0; trial < 50; ++trial) {
    const Vector x = gen.vector(2, -2, 2), theta = gen.vector(2, -1, 1);
    const Vector u = gen.vector(1, -3, 3);
    const ObserverRate obs = observer_rhs(sc.models, sc.mode, x, x, theta, u);
    Vector drive = sc.models.plant().phi(x) * theta;
    drive = add(drive, u);
    const Vector xdot = add(sc.models.plant().f(x), sc.models.plant().gu * drive);
    ASSERT_LE(max_abs_diff(obs.xi, xdot), 1e-14);
    ASSERT_LE(max_abs_diff(obs.nu, sc.models.drift().s(theta)), 1e-15);
  }
}

TEST(ObserverRhs, ScalarGainAndRates) {
  EXPECT_EQ(observer_gain(scalar(), kTheorem1, Vector{0.4}, Vector{-7.0}), 3.0);
  const ObserverRate obs =
      observer_rhs(scalar(), kTheorem1, Vector{1.0}, Vector{0.0}, Vector{0.0}, Vector{0.0});
  EXPECT_EQ(obs.xi, Vector{4.0});
  EXPECT_EQ(obs.nu, Vector{1.0});
}

TEST(VirtualRhs, ZeroErrorIsStationary) {
  const Vector theta{0.5, -0.5};
  EXPECT_EQ(virtual_rhs(hopf(), kTheorem1, Vector{1, 1}, Vector{0.5, 2}, theta, theta,
                        Vector{0, 0}),
            (Vector{0, 0}));
}

TEST(VirtualRhs, ScalarBenchmark) {
  EXPECT_EQ(virtual_rhs(scalar(), kTheorem1, Vector{1.0}, Vector{1.0}, Vector{2.0},
                        Vector{1.0}, Vector{0.0}),
            Vector{2.0});
}

TEST(ClosedLoopRhs, ScalarSubstitution) {
  SimState s{0.0, {1.0}, {2.0}, {0.0}, {1.0}, {2.0}, 0.0, 0.0, 0.0};
  const DerivedSignals d = derive(scalar(), kTheorem1, s);
  EXPECT_EQ(d.theta_hat, Vector{2.0});
  EXPECT_EQ(d.u, Vector{-4.0});
  EXPECT_EQ(closed_loop_rhs(scalar(), kTheorem1, s).x, Vector{-1.0});
}

TEST(ClosedLoopRhs, MatchedStateFollowsTargetFlow) {
  Gen gen(34);
  for (int trial = 0; trial < 100; ++trial) {
    const Vector x = gen.vector(2, -2, 2), theta = gen.vector(2, -1, 1);
    SimState s;
    s.x = s.xi = x;
    s.theta = s.nu = theta;
    s.theta_hat_i = sub(theta, theta_hat(hopf(), kTheorem1, x, x, Vector{0, 0}));
    const StateRate r = closed_loop_rhs(hopf(), kTheorem1, s);
    ASSERT_LE(max_abs_diff(r.x, f0(hopf(), x)), 1e-12);
    ASSERT_LE(r.eps1, 1e-28);
    ASSERT_LE(r.eps2, 1e-24);
  }
}

TEST(ClosedLoopRhs, ComposesSubOperations) {
  Gen gen(35);
  const Scenario sc = builtin("hopf-circle-drift");
  const Models& m = sc.models;
  for (int trial = 0; trial < 100; ++trial) {
    SimState s;
    s.x = gen.vector(2, -2, 2);
    s.xi = gen.vector(2, -2, 2);
    s.theta = gen.vector(2, -1, 1);
    s.nu = gen.vector(2, -1, 1);
    s.theta_hat_i = gen.vector(2, -1, 1);
    const StateRate r = closed_loop_rhs(m, sc.mode, s);

    const Vector th = theta_hat(m, sc.mode, s.x, s.xi, s.theta_hat_i);
    const Vector u = control_u(m, s.x, s.xi, th);
    const ObserverRate obs = observer_rhs(m, sc.mode, s.x, s.xi, s.nu, u);
    const Vector xdot =
        add(m.plant().f(s.x), m.plant().gu * add(m.plant().phi(s.x) * s.theta, u));
    const Vector e = (alpha(m.plant(), s.x) - alpha(m.plant(), s.xi)) * s.theta;
    const Vector ae = alpha(m.plant(), s.xi) * sub(s.theta, th);
    const double g = dot(m.target().grad_psi(s.x), add(ae, e));

    ASSERT_LE(max_abs_diff(r.x, xdot), 1e-12);
    ASSERT_LE(max_abs_diff(r.theta, m.drift().s(s.theta)), 1e-15);
    ASSERT_LE(max_abs_diff(r.xi, obs.xi), 1e-12);
    ASSERT_LE(max_abs_diff(r.nu, obs.nu), 1e-12);
    ASSERT_LE(max_abs_diff(r.theta_hat_i,
                           theta_hat_i_rhs(m, sc.mode, s.x, s.xi, s.nu, s.theta_hat_i, u)),
              1e-10);
    ASSERT_NEAR(r.eps1, squared_norm(e), 1e-12);
    ASSERT_NEAR(r.eps2, squared_norm(ae), 1e-12);
    ASSERT_NEAR(r.eps0, g * g, 1e-12);
  }
}

TEST(ClosedLoopRhs, ControllerNeverReadsTrueParameter) {
  Gen gen(36);
  for (const auto& name : builtin_names()) {
    const Scenario sc = builtin(name);
    const std::size_t n = sc.models.n(), d = sc.models.d();
    for (int trial = 0; trial < 50; ++trial) {
      SimState a;
      a.x = gen.vector(n, -2, 2);
      a.xi = gen.vector(n, -2, 2);
      a.nu = gen.vector(d, -1, 1);
      a.theta_hat_i = gen.vector(d, -1, 1);
      a.theta = gen.vector(d, -1, 1);
      SimState b = a;
      b.theta = gen.vector(d, -5, 5);
      const StateRate ra = closed_loop_rhs(sc.models, sc.mode, a);
      const StateRate rb = closed_loop_rhs(sc.models, sc.mode, b);
      ASSERT_EQ(ra.theta_hat_i, rb.theta_hat_i) << name;
      ASSERT_EQ(ra.xi, rb.xi) << name;
      ASSERT_EQ(ra.nu, rb.nu) << name;
      ASSERT_EQ(derive(sc.models, sc.mode, a).u, derive(sc.models, sc.mode, b).u) << name;
    }
  }
}

TEST(ClosedLoopRhs, AccumulatorRatesAreNonNegative) {
  Gen gen(37);
  for (const auto& name : builtin_names()) {
    const Scenario sc = builtin(name);
    const std::size_t n = sc.models.n(), d = sc.models.d();
    for (int trial = 0; trial < 100; ++trial) {
      SimState s{0.0, gen.vector(n, -3, 3), gen.vector(d, -1, 1), gen.vector(d, -2, 2),
                 gen.vector(n, -3, 3), gen.vector(d, -2, 2), 0.0, 0.0, 0.0};
      const StateRate r = closed_loop_rhs(sc.models, sc.mode, s);
      ASSERT_GE(r.eps0, 0.0);
      ASSERT_GE(r.eps1, 0.0);
      ASSERT_GE(r.eps2, 0.0);
    }
  }
}

TEST(ClosedLoopRhs, RejectsNonFiniteState) {
  SimState s{0.0, {NAN}, {2.0}, {0.0}, {1.0}, {2.0}, 0.0, 0.0, 0.0};
  EXPECT_THROW(closed_loop_rhs(scalar(), kTheorem1, s), NonFiniteState);
  s.x = {1.0, 2.0};
  EXPECT_THROW(closed_loop_rhs(scalar(), kTheorem1, s), DimensionMismatch);
}

TEST(KappaZeroMode, PsiIsAlphaTransposeAndGainDropsKappa) {
  Gen gen(38);
  const Models& m = hopf();
  for (int trial = 0; trial < 100; ++trial) {
    const Vector x = gen.vector(2, -2, 2), xi = gen.vector(2, -2, 2);
    ASSERT_EQ(big_psi(m, kKappaZero, xi), alpha(m.plant(), xi).transpose());
    double expected = 1.0;
    for (double l : m.plant().phi_row_lipschitz(x, xi)) expected += l * l;
    ASSERT_DOUBLE_EQ(observer_gain(m, kKappaZero, x, xi), expected);
    ASSERT_EQ(controller_kappa(m, kKappaZero, xi), 0.0);
  }
}

TEST(PlantProperty, RegressorRowsRespectLipschitzModuli) {
  Gen gen(39);
  for (const auto& name : builtin_names()) {
    const Models m = builtin(name).models;
    for (int trial = 0; trial < 300; ++trial) {
      const Vector x = gen.vector(m.n(), -3, 3), xi = gen.vector(m.n(), -3, 3);
      const Matrix px = m.plant().phi(x), pxi = m.plant().phi(xi);
      ASSERT_EQ(px.rows(), m.m());
      ASSERT_EQ(px.cols(), m.d());
      const Vector lam = m.plant().phi_row_lipschitz(x, xi);
      for (std::size_t i = 0; i < m.m(); ++i) {
        ASSERT_LE(norm(sub(px.row(i), pxi.row(i))), lam[i] * norm(sub(x, xi)) + 1e-12);
      }
    }
  }
}

TEST(Models, RejectsDegenerateDimensionsAndIndefiniteWeight) {
  ScenarioSpec spec = builtin_spec("hopf-circle");
  spec.drift.h = Matrix::from_rows({{1, 2}, {2, 1}});
  EXPECT_THROW(Models(spec.plant, spec.drift, spec.target), NotPositiveDefinite);
  spec = builtin_spec("hopf-circle");
  spec.plant.m = 0;
  EXPECT_THROW(Models(spec.plant, spec.drift, spec.target), InvalidArgument);
  spec = builtin_spec("hopf-circle");
  spec.plant.d = 0;
  EXPECT_THROW(Models(spec.plant, spec.drift, spec.target), InvalidArgument);
}

TEST(Models, FlatPackingRoundTrips) {
  const SimState s{1.5, {1, 2}, {3, 4}, {5, 6}, {7, 8}, {9, 10}, 11, 12, 13};
  const Vector flat = pack(s);
  EXPECT_EQ(flat.size(), flat_size(2, 2));
  EXPECT_EQ(unpack(1.5, flat, 2, 2), s);
}

}  // namespace
}  // namespace invreg
