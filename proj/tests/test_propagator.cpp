#include <gtest/gtest.h>

#include <cmath>

#include "chiral_switch/propagator.hpp"
#include "chiral_switch/schemes.hpp"

using namespace chiral;

namespace {

DriveScheme constant_two_level(double omega, double t_end) {
  DriveScheme s;
  s.labels = {"1", "2"};
  s.t_start = 0.0;
  s.t_end = t_end;
  Coupling c;
  c.level_a = 1;
  c.level_b = 0;
  c.envelopes = {PulseEnvelope(omega, 0.0, 1e12)};
  s.couplings = {c};
  return s;
}

IntegratorConfig with_stride(double stride, IntegratorMethod method = IntegratorMethod::Adaptive) {
  IntegratorConfig cfg;
  cfg.method = method;
  cfg.sample_stride = stride;
  return cfg;
}

}  // namespace

TEST(Propagate, FreeEvolutionIsIdentity) {
  auto s = make_discriminator(1.0, 12.0);
  for (auto& c : s.couplings)
    for (auto& e : c.envelopes) e.peak_rabi = 0.0;
  const auto c0 = StateVector::normalized((CVector(3) << Complex(0.3, 0.1), 0.5, Complex(0.0, -0.7)).finished(),
                                          discriminator_labels());
  for (auto method : {IntegratorMethod::Adaptive, IntegratorMethod::RK4, IntegratorMethod::PiecewiseExponential}) {
    IntegratorConfig cfg;
    cfg.method = method;
    cfg.oracle_steps = 1000;
    const auto traj = propagate(s, c0, cfg);
    for (const auto& c : traj.states) EXPECT_LE((c - c0.amplitudes()).cwiseAbs().maxCoeff(), 1e-15);
  }
}

TEST(Propagate, RabiFlop) {
  const double omega = 0.8;
  const double t_end = kPi / (2.0 * omega);
  const auto s = constant_two_level(omega, t_end);
  const auto c0 = StateVector::basis(0, s.labels);
  const auto traj = propagate(s, c0, with_stride(t_end / 40.0));
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const double expected = std::pow(std::sin(omega * traj.times[i]), 2);
    EXPECT_NEAR(traj.populations[i][1], expected, 1e-9);
  }
  EXPECT_NEAR(traj.final_populations()[1], 1.0, 1e-9);
  const auto rk4 = propagate(s, c0, [&] {
    auto cfg = with_stride(t_end / 40.0, IntegratorMethod::RK4);
    cfg.max_step = 1e-3;
    return cfg;
  }());
  EXPECT_NEAR(rk4.final_populations()[1], 1.0, 1e-10);
}

TEST(PiecewiseExponential, ExactForConstantHamiltonian) {
  const double omega = 1.3;
  const auto s = constant_two_level(omega, 2.0);
  const auto c0 = StateVector::basis(0, s.labels);
  for (std::size_t n : {1u, 7u, 50u}) {
    const auto traj = piecewise_exponential_propagate(s, c0, n, 0.5);
    for (std::size_t i = 0; i < traj.size(); ++i) {
      const double t = traj.times[i];
      EXPECT_NEAR(std::abs(traj.states[i][0] - Complex(std::cos(omega * t), 0.0)), 0.0, 1e-12);
      EXPECT_NEAR(std::abs(traj.states[i][1] - Complex(0.0, -std::sin(omega * t))), 0.0, 1e-12);
    }
  }
  EXPECT_THROW(piecewise_exponential_propagate(s, c0, 0), InvalidParameter);
}

TEST(Propagate, DiscriminatorSeparatesEnantiomers) {
  const auto c0 = StateVector::basis(0, discriminator_labels());
  const auto l = propagate(make_discriminator(1.0, 12.0, Enantiomer::L), c0);
  const auto d = propagate(make_discriminator(1.0, 12.0, Enantiomer::D), c0);
  // Observed mapping: loop phase 0 (L) ends on |3>, loop phase pi (D) stays on |1>.
  EXPECT_GE(l.final_populations()[2], 0.99);
  EXPECT_GE(d.final_populations()[0], 0.99);
  EXPECT_LE(l.final_populations()[1], 1e-2);
  EXPECT_LE(d.final_populations()[1], 1e-2);
  EXPECT_LE(l.norm_drift, 1e-8);
  EXPECT_LE(d.norm_drift, 1e-8);
}

TEST(Propagate, SampleGridAndPopulations) {
  const auto scheme = make_discriminator(1.0, 12.0);
  const auto traj = propagate(scheme, StateVector::basis(0, discriminator_labels()));
  ASSERT_EQ(traj.size(), 601u);  // stride tau/50 over 12 tau
  EXPECT_DOUBLE_EQ(traj.times.front(), -36.0);
  EXPECT_DOUBLE_EQ(traj.times.back(), 108.0);
  for (std::size_t i = 1; i < traj.size(); ++i) EXPECT_GT(traj.times[i], traj.times[i - 1]);
  for (std::size_t i = 0; i < traj.size(); ++i) {
    EXPECT_LE((traj.populations[i] - traj.states[i].cwiseAbs2()).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_NEAR(traj.populations[i].sum(), 1.0, 1e-8);
  }
}

TEST(Propagate, IsDeterministic) {
  const auto scheme = make_converter(30.0, 3.0);
  const auto c0 = StateVector::basis(0, converter_labels());
  const auto a = propagate(scheme, c0);
  const auto b = propagate(scheme, c0);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a.states[i], b.states[i]);
}

TEST(Propagate, NormConservation) {
  const auto c0 = StateVector::basis(0, converter_labels());
  const auto adaptive = propagate(make_converter(30.0, 3.0), c0);
  EXPECT_LE(adaptive.norm_drift, 1e-8);
  const auto oracle = piecewise_exponential_propagate(make_converter(30.0, 3.0), c0, 20000);
  EXPECT_LE(oracle.norm_drift, 1e-10);
}

TEST(Propagate, UnitarityOverSubWindow) {
  for (const auto& scheme : {make_discriminator(1.0, 12.0), make_converter(30.0, 3.0)}) {
    auto sub = scheme;
    sub.t_start = scheme.t_start + 0.3 * (scheme.t_end - scheme.t_start);
    sub.t_end = scheme.t_start + 0.7 * (scheme.t_end - scheme.t_start);
    const auto n = static_cast<Eigen::Index>(scheme.dimension());
    CMatrix u(n, n);
    for (Eigen::Index k = 0; k < n; ++k)
      u.col(k) = propagate(sub, StateVector::basis(static_cast<std::size_t>(k), scheme.labels)).final_amplitudes();
    EXPECT_LE((u.adjoint() * u - CMatrix::Identity(n, n)).cwiseAbs().maxCoeff(), 1e-7);
  }
}

TEST(Propagate, TimeReversalReturnsInitialState) {
  for (const auto& scheme : {make_discriminator(1.0, 12.0, Enantiomer::D), make_converter(30.0, 3.0)}) {
    const auto c0 = StateVector::basis(0, scheme.labels);
    const auto forward = propagate(scheme, c0);
    const auto back = propagate(time_reversed(scheme),
                                StateVector::normalized(forward.final_amplitudes().conjugate(), scheme.labels));
    const CVector returned = back.final_amplitudes().conjugate();
    EXPECT_LE((returned - c0.amplitudes()).cwiseAbs().maxCoeff(), 1e-6);
  }
}

TEST(Propagate, OracleAgreesOnDiscriminator) {
  const auto scheme = make_discriminator(1.0, 12.0, Enantiomer::L);
  const auto c0 = StateVector::basis(0, discriminator_labels());
  const auto adaptive = propagate(scheme, c0);
  const auto oracle = piecewise_exponential_propagate(scheme, c0, 200000);
  EXPECT_LE(max_state_distance(adaptive, oracle), 1e-6);
  // Midpoint slices are second order, so the 200000-slice error is about a
  // third of the distance to the 100000-slice run.
  const auto coarse = piecewise_exponential_propagate(scheme, c0, 100000);
  const auto coarser = piecewise_exponential_propagate(scheme, c0, 50000);
  const double d1 = max_state_distance(coarse, oracle);
  const double d2 = max_state_distance(coarser, coarse);
  EXPECT_NEAR(d2 / d1, 4.0, 0.2);
  EXPECT_LE(d1 / 3.0, 1e-6);
}

TEST(Propagate, InvalidConfigurations) {
  const auto scheme = make_discriminator(1.0, 12.0);
  const auto c0 = StateVector::basis(0, discriminator_labels());
  IntegratorConfig cfg;
  cfg.rel_tol = 0.0;
  EXPECT_THROW(propagate(scheme, c0, cfg), InvalidParameter);
  cfg = {};
  cfg.max_step = -1.0;
  EXPECT_THROW(propagate(scheme, c0, cfg), InvalidParameter);
  EXPECT_THROW(propagate(scheme, StateVector::basis(0, converter_labels())), InvalidInput);
}

TEST(Propagate, StepBudgetExhaustionReportsTime) {
  IntegratorConfig cfg;
  cfg.max_steps = 50;
  try {
    propagate(make_converter(30.0, 3.0), StateVector::basis(0, converter_labels()), cfg);
    FAIL() << "expected an integration failure";
  } catch (const IntegrationError& e) {
    EXPECT_GT(e.time(), -9.0);
    EXPECT_LT(e.time(), 15.0);
    EXPECT_EQ(e.kind(), "integration-failure");
  }
}

TEST(Propagate, NormDriftAboveToleranceFails) {
  IntegratorConfig cfg;
  cfg.method = IntegratorMethod::RK4;
  cfg.max_step = 0.2;  // far too coarse for Omega = 30 rad/ns
  EXPECT_THROW(propagate(make_converter(30.0, 3.0), StateVector::basis(0, converter_labels()), cfg),
               IntegrationError);
}

TEST(SampleTimes, CoversWindow) {
  const auto grid = sample_times(-1.0, 2.0, 0.7);
  ASSERT_EQ(grid.size(), 6u);
  EXPECT_DOUBLE_EQ(grid.front(), -1.0);
  EXPECT_DOUBLE_EQ(grid.back(), 2.0);
  EXPECT_THROW(sample_times(0.0, 1.0, 0.0), InvalidParameter);
}
