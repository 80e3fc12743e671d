#include <gtest/gtest.h>

#include <random>

#include <ebgevrey/timestepper.hpp>

using namespace ebgevrey;

TEST(Timestepper, FitRecoversSyntheticRate) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> noise(0.0, 1e-3);
  std::vector<double> t, e;
  for (int k = 0; k <= 2000; ++k) {
    t.push_back(1e-3 * k);
    e.push_back(2.0 * std::exp(-3.0 * t.back() + noise(rng)));
  }
  const DecayFit f = fit_decay(t, e);
  EXPECT_NEAR(f.rate, 3.0, 5 * f.stderr_rate + 1e-3);
  EXPECT_GT(f.stderr_rate, 0.0);
  EXPECT_NEAR(f.t_begin, 0.5, 1e-12);
  EXPECT_NEAR(f.t_end, 1.5, 1e-12);
}

TEST(Timestepper, FitWindowStopsAtRoundoffFloor) {
  std::vector<double> t, e;
  for (int k = 0; k <= 4000; ++k) {
    t.push_back(1e-2 * k);
    e.push_back(std::max(std::exp(-2.0 * t.back()), 1e-14));
  }
  const DecayFit f = fit_decay(t, e);
  EXPECT_NEAR(f.rate, 2.0, 1e-9);
  EXPECT_LT(f.t_end, 14.0);
}

TEST(Timestepper, FitRejectsFlatRecords) {
  std::vector<double> t, e;
  for (int k = 0; k <= 100; ++k) t.push_back(k), e.push_back(1.0 - 1e-3 * k);
  EXPECT_THROW(fit_decay(t, e), Error);
}

TEST(Timestepper, SingleModeRotatesByCayleyAngle) {
  // midpoint applied to u'' + w^2 u = 0 rotates the (w u, v) plane by 2 atan(w dt / 2)
  const BeamConfig u = undamped_config();
  const auto mats = assemble(build_mesh(u, 4), u);
  const ModalBasis b = lowest_modes(mats, 1);
  const double w = std::sqrt(b.omega2[0]), dt = 0.01;
  StateVector s = StateVector::zero(mats.size());
  s.u = b.vectors.col(0);
  const MidpointStepper st(mats, dt);
  const double theta = 2.0 * std::atan(0.5 * w * dt);
  for (int k = 1; k <= 300; ++k) {
    s = st.step(s);
    if (k % 100 == 0) {
      EXPECT_LT((s.u - std::cos(k * theta) * b.vectors.col(0)).norm(), 1e-12 * k * b.vectors.col(0).norm());
      EXPECT_LT((s.v + w * std::sin(k * theta) * b.vectors.col(0)).norm(), 1e-12 * k * w * b.vectors.col(0).norm());
    }
  }
}

TEST(Timestepper, UndampedEnergyConserved) {
  const BeamConfig u = undamped_config();
  const auto mats = assemble(build_mesh(u, 4), u);
  const Trajectory t = simulate(mats, initial_state(mats, 3), 1.0, 1e-3, false);
  for (double e : t.energies) EXPECT_NEAR(e, t.energies.front(), 1e-12 * t.energies.front());
  EXPECT_LT(t.max_abs_step_residual(), 1e-12 * t.energies.front());
}

TEST(Timestepper, DiscreteEnergyIdentityPerStep) {
  const BeamConfig c;
  const auto mats = assemble(build_mesh(c, 4), c);
  const Trajectory t = simulate(mats, initial_state(mats, 4), 0.2, 1e-3, false);
  EXPECT_LT(t.max_abs_step_residual(), 1e-12 * t.energies.front());
  for (std::size_t k = 0; k + 1 < t.size(); ++k) EXPECT_LE(t.energies[k + 1], t.energies[k] + 1e-15);
}

TEST(Timestepper, BalanceResidualIsSecondOrder) {
  const BeamConfig c;
  const auto mats = assemble(build_mesh(c, 3), c);
  const StateVector u0 = initial_state(mats, 6);
  const double a = simulate(mats, u0, 0.1, 1e-4, false).max_abs_balance();
  const double b = simulate(mats, u0, 0.1, 5e-5, false).max_abs_balance();
  EXPECT_NEAR(a / b, 4.0, 0.5);
}

TEST(Timestepper, StepIsLinear) {
  const BeamConfig c;
  const auto mats = assemble(build_mesh(c, 3), c);
  const MidpointStepper st(mats, 1e-3);
  const StateVector a = initial_state(mats, 1), b = initial_state(mats, 2);
  const StateVector lhs = st.step(a + 2.0 * b), rhs = st.step(a) + 2.0 * st.step(b);
  EXPECT_LT(g_norm(mats, lhs - rhs), 1e-12 * g_norm(mats, lhs));
}

TEST(Timestepper, InitialStateIsSeededAndNormalized) {
  const BeamConfig c;
  const auto mats = assemble(build_mesh(c, 4), c);
  const StateVector a = initial_state(mats, 9), b = initial_state(mats, 9), d = initial_state(mats, 10);
  EXPECT_EQ(a.u, b.u);
  EXPECT_EQ(a.v, b.v);
  EXPECT_NE(a.u, d.u);
  EXPECT_NEAR(energy(mats, a), 0.75, 1e-12);
}

TEST(Timestepper, RejectsBadArguments) {
  const BeamConfig c;
  const auto mats = assemble(build_mesh(c, 2), c);
  const StateVector s = StateVector::zero(mats.size());
  EXPECT_THROW(simulate(mats, s, 1.0, 0.0), Error);
  EXPECT_THROW(simulate(mats, s, -1.0, 0.1), Error);
  EXPECT_THROW(simulate(mats, StateVector::zero(3), 1.0, 0.1), Error);
}
