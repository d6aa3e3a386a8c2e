#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "chiral_switch/pulse.hpp"
#include "chiral_switch/scheme.hpp"
#include "chiral_switch/schemes.hpp"
#include "chiral_switch/state.hpp"
#include "chiral_switch/units.hpp"
#include "test_support.hpp"

using namespace chiral;

namespace {

// exp(-1), exp(-4) to 30 digits (mpmath)
constexpr double kExpM1 = 0.367879441171442321595523770161;
constexpr double kExpM4 = 0.0183156388887341802937180212732;

Coupling single(std::size_t a, std::size_t b, double peak, double center, double width, double phase = 0.0,
                int sign = 1) {
  Coupling c;
  c.level_a = a;
  c.level_b = b;
  c.envelopes = {PulseEnvelope(peak, center, width)};
  c.static_phase = phase;
  c.structure_sign = sign;
  return c;
}

// Constant loop with |W| = omega on every edge; loop phase carried on W12.
DriveScheme equal_loop(double omega, double phi) {
  DriveScheme s;
  s.labels = {"1", "2", "3"};
  s.t_start = -1.0;
  s.t_end = 1.0;
  s.couplings = {single(1, 0, omega, 0.0, 1e9, phi), single(2, 0, omega, 0.0, 1e9), single(2, 1, omega, 0.0, 1e9)};
  s.couplings[0].drive = "1,2";
  s.couplings[1].drive = "1,3";
  s.couplings[2].drive = "2,3";
  return s;
}

}  // namespace

TEST(GaussianEnvelope, PeakAndWidths) {
  EXPECT_DOUBLE_EQ(gaussian_envelope(0.0, 0.0, 12.0), 1.0);
  EXPECT_NEAR(gaussian_envelope(12.0, 0.0, 12.0), kExpM1, 1e-16);
  EXPECT_NEAR(gaussian_envelope(24.0, 0.0, 12.0), kExpM4, 1e-17);
  EXPECT_DOUBLE_EQ(gaussian_envelope(-7.0, 3.0, 5.0), gaussian_envelope(13.0, 3.0, 5.0));
}

TEST(GaussianEnvelope, RejectsNonPositiveWidth) {
  EXPECT_THROW(gaussian_envelope(0.0, 0.0, 0.0), InvalidParameter);
  EXPECT_THROW(gaussian_envelope(0.0, 0.0, -1.0), InvalidParameter);
  EXPECT_THROW(PulseEnvelope(1.0, 0.0, 0.0), InvalidParameter);
}

TEST(EvaluateCoupling, PhaseAndSign) {
  auto c = single(1, 0, 1.0, 0.0, 12.0);
  EXPECT_NEAR(std::abs(evaluate_coupling(c, 0.0) - Complex(1.0, 0.0)), 0.0, 1e-15);
  c.static_phase = kPi;
  EXPECT_NEAR(std::abs(evaluate_coupling(c, 0.0) - Complex(-1.0, 0.0)), 0.0, 1e-15);
  c.static_phase = 0.0;
  c.structure_sign = -1;
  EXPECT_NEAR(std::abs(evaluate_coupling(c, 0.0) - Complex(-1.0, 0.0)), 0.0, 1e-15);
}

TEST(EvaluateCoupling, ChirpedTwoLobeDrive) {
  const auto disc = make_discriminator(1.0, 12.0);
  const auto& w13 = disc.couplings[1];
  ASSERT_EQ(w13.drive, "1,3");
  // f(2 tau) + f(0) exp{-i 48 f(-2 tau)}, frozen from a 30-digit evaluation
  const Complex value = evaluate_coupling(w13, 48.0);
  EXPECT_NEAR(value.real(), 0.656121167425549582332349515694, 1e-14);
  EXPECT_NEAR(value.imag(), -0.770197447261332822083459273556, 1e-14);
  EXPECT_NEAR(std::abs(w13.envelopes[1].evaluate(48.0)), 1.0, 1e-15);
}

TEST(Chirp, IsPurePhase) {
  const Chirp chirp{1.0, 72.0, 12.0};
  for (double t = -50.0; t <= 200.0; t += 0.37) EXPECT_NEAR(std::abs(chirp.phase_factor(t)), 1.0, 1e-14);
}

TEST(DiscriminatorHamiltonian, ZeroField) {
  auto s = equal_loop(0.0, 0.0);
  const auto h = build_discriminator_hamiltonian(s, 0.0);
  EXPECT_EQ(h.cwiseAbs().maxCoeff(), 0.0);
}

TEST(DiscriminatorHamiltonian, EntriesFollowLoopLayout) {
  const auto disc = make_discriminator(1.0, 12.0);
  const double t = 20.0;
  const auto h = build_discriminator_hamiltonian(disc, t);
  const Complex w12 = evaluate_coupling(disc.couplings[0], t);
  const Complex w13 = evaluate_coupling(disc.couplings[1], t);
  const Complex w23 = evaluate_coupling(disc.couplings[2], t);
  EXPECT_EQ(h(0, 1), std::conj(w12));
  EXPECT_EQ(h(0, 2), std::conj(w13));
  EXPECT_EQ(h(1, 0), w12);
  EXPECT_EQ(h(1, 2), std::conj(w23));
  EXPECT_EQ(h(2, 0), w13);
  EXPECT_EQ(h(2, 1), w23);
  for (int i = 0; i < 3; ++i) EXPECT_EQ(h(i, i), Complex(0.0));
}

TEST(DiscriminatorHamiltonian, DegenerateSpectraAtEqualMagnitude) {
  const double omega = 0.7;
  const auto zero = oracle::sorted(oracle::to_vector(
      Eigen::SelfAdjointEigenSolver<CMatrix>(build_discriminator_hamiltonian(equal_loop(omega, 0.0), 0.0)).eigenvalues()));
  EXPECT_NEAR(zero[0], -omega, 1e-12);
  EXPECT_NEAR(zero[1], -omega, 1e-12);
  EXPECT_NEAR(zero[2], 2.0 * omega, 1e-12);
  const auto pi = oracle::sorted(oracle::to_vector(
      Eigen::SelfAdjointEigenSolver<CMatrix>(build_discriminator_hamiltonian(equal_loop(omega, kPi), 0.0)).eigenvalues()));
  EXPECT_NEAR(pi[0], -2.0 * omega, 1e-12);
  EXPECT_NEAR(pi[1], omega, 1e-12);
  EXPECT_NEAR(pi[2], omega, 1e-12);
}

TEST(DiscriminatorHamiltonian, ShapeErrors) {
  auto s = equal_loop(1.0, 0.0);
  s.couplings.pop_back();
  EXPECT_THROW(build_discriminator_hamiltonian(s, 0.0), SchemeShapeError);
  EXPECT_THROW(build_discriminator_hamiltonian(make_converter(30.0, 3.0), 0.0), SchemeShapeError);
  auto bad = equal_loop(1.0, 0.0);
  bad.couplings[0].level_a = 7;
  EXPECT_THROW(build_hamiltonian(bad, 0.0), SchemeShapeError);
  EXPECT_THROW(bad.validate(), SchemeShapeError);
}

TEST(ConverterHamiltonian, ZeroAndSingleDrive) {
  auto conv = make_converter(30.0, 3.0);
  for (auto& c : conv.couplings) c.envelopes.front().peak_rabi = 0.0;
  EXPECT_EQ(build_converter_hamiltonian(conv, 0.0).cwiseAbs().maxCoeff(), 0.0);

  for (auto& c : conv.couplings)
    if (c.drive == "3,5S") {
      c.envelopes.front().peak_rabi = 1.0;
      c.envelopes.front().center = 0.0;
    }
  const auto h = build_converter_hamiltonian(conv, 0.0);
  EXPECT_DOUBLE_EQ(h(0, 2).real(), -1.0);
  EXPECT_DOUBLE_EQ(h(1, 2).real(), 1.0);
  EXPECT_DOUBLE_EQ(h(2, 0).real(), -1.0);
  EXPECT_DOUBLE_EQ(h(2, 1).real(), 1.0);
  EXPECT_EQ((h.cwiseAbs().array() > 0.0).count(), 4);
  // rank-2 block [[0, -1, 1], ...]: eigenvalues +-sqrt(2) and four zeros
  const auto values = oracle::sorted(oracle::to_vector(Eigen::SelfAdjointEigenSolver<CMatrix>(h).eigenvalues()));
  EXPECT_NEAR(values.front(), -std::sqrt(2.0), 1e-14);
  EXPECT_NEAR(values.back(), std::sqrt(2.0), 1e-14);
  for (int k = 1; k < 5; ++k) EXPECT_NEAR(values[k], 0.0, 1e-14);
}

TEST(ConverterHamiltonian, PrintedSignPatternAtPumpPeak) {
  const double w = 30.0, tau = 3.0, t = 2.0 * tau;
  const auto h = build_converter_hamiltonian(make_converter(w, tau), t);
  const double fd = std::exp(-4.0);
  const double s35 = w, a35 = 0.5 * w, s45 = 0.4 * w * fd, a45 = -w * fd;
  EXPECT_NEAR(h(0, 2).real(), -s35, 1e-12);
  EXPECT_NEAR(h(0, 3).real(), a35, 1e-12);
  EXPECT_NEAR(h(1, 2).real(), s35, 1e-12);
  EXPECT_NEAR(h(1, 3).real(), a35, 1e-12);
  EXPECT_NEAR(h(2, 4).real(), -s45, 1e-12);
  EXPECT_NEAR(h(2, 5).real(), s45, 1e-12);
  EXPECT_NEAR(h(3, 4).real(), a45, 1e-12);
  EXPECT_NEAR(h(3, 5).real(), a45, 1e-12);
  EXPECT_NEAR(h(4, 2).real(), -s45, 1e-12);
  EXPECT_NEAR(h(5, 3).real(), a45, 1e-12);
}

TEST(ConverterHamiltonian, BlockStructure) {
  const auto conv = make_converter(30.0, 3.0);
  const std::array<int, 4> outer{0, 1, 4, 5};
  for (double t = -9.0; t <= 15.0; t += 0.5) {
    const auto h = build_converter_hamiltonian(conv, t);
    for (int i : outer)
      for (int j : outer) EXPECT_EQ(h(i, j), Complex(0.0));
    for (int i : {2, 3})
      for (int j : {2, 3}) EXPECT_EQ(h(i, j), Complex(0.0));
  }
}

TEST(ConverterHamiltonian, WrongSignIsShapeError) {
  auto conv = make_converter(30.0, 3.0);
  conv.couplings[0].structure_sign = 1;
  EXPECT_THROW(build_converter_hamiltonian(conv, 0.0), SchemeShapeError);
}

TEST(Hamiltonian, HermitianForRandomSchemes) {
  std::mt19937_64 rng(20240611);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int trial = 0; trial < 200; ++trial) {
    DriveScheme s;
    const std::size_t n = 2 + trial % 5;
    for (std::size_t i = 0; i < n; ++i) s.labels.push_back(std::to_string(i));
    s.t_start = -10.0;
    s.t_end = 10.0;
    for (int k = 0; k < 6; ++k) {
      const auto a = static_cast<std::size_t>(std::abs(u(rng)) * 1000) % n;
      const auto b = (a + 1 + static_cast<std::size_t>(std::abs(u(rng)) * 1000) % (n - 1)) % n;
      Coupling c = single(a, b, u(rng), u(rng), 1.0 + std::abs(u(rng)), u(rng), u(rng) > 0 ? 1 : -1);
      if (k % 2) c.envelopes.front().chirp = Chirp{u(rng), u(rng), 1.0 + std::abs(u(rng))};
      s.couplings.push_back(c);
    }
    const auto h = build_hamiltonian(s, u(rng));
    EXPECT_LE(oracle::hermiticity_defect(h), 1e-12);
  }
  for (double t = -36.0; t <= 108.0; t += 1.3) {
    EXPECT_LE(oracle::hermiticity_defect(build_hamiltonian(make_discriminator(1.0, 12.0), t)), 1e-12);
    EXPECT_LE(oracle::hermiticity_defect(build_hamiltonian(make_converter(30.0, 3.0), t / 6.0)), 1e-12);
  }
}

TEST(Hamiltonian, SpectrumIsGaugeInvariant) {
  // Rephasing one basis state shifts two coupling phases oppositely.
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-kPi, kPi);
  const auto disc = make_discriminator(1.0, 12.0);
  for (int trial = 0; trial < 100; ++trial) {
    const double t = 3.0 * u(rng) * 12.0 / kPi + 24.0;
    const double chi = u(rng);
    const int level = trial % 3;
    CVector phases = CVector::Ones(3);
    phases[level] = std::polar(1.0, chi);
    const CMatrix h = build_discriminator_hamiltonian(disc, t);
    const CMatrix rotated = phases.asDiagonal() * h * phases.conjugate().asDiagonal();
    const RVector a = Eigen::SelfAdjointEigenSolver<CMatrix>(h).eigenvalues();
    const RVector b = Eigen::SelfAdjointEigenSolver<CMatrix>(rotated).eigenvalues();
    EXPECT_LE((a - b).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(Hamiltonian, EqualMagnitudeSpectrumLaw) {
  // Compared against the characteristic-polynomial roots and the closed form.
  for (int k = 0; k <= 64; ++k) {
    const double phi = kTwoPi * k / 64.0;
    const double omega = 0.3 + 0.05 * (k % 7);
    const auto h = build_discriminator_hamiltonian(equal_loop(omega, phi), 0.0);
    const auto numeric = oracle::sorted(oracle::to_vector(Eigen::SelfAdjointEigenSolver<CMatrix>(h).eigenvalues()));
    std::vector<double> law;
    for (int j = 0; j < 3; ++j) law.push_back(2.0 * omega * std::cos((phi + kTwoPi * j) / 3.0));
    law = oracle::sorted(law);
    const auto cubic = oracle::loop_eigenvalues(h);
    for (int j = 0; j < 3; ++j) {
      EXPECT_NEAR(numeric[j], law[j], 1e-9);
      EXPECT_NEAR(cubic[j], law[j], 1e-9);
    }
  }
}

TEST(TotalPhase, SignsAndStaticPhases) {
  EXPECT_NEAR(total_phase(equal_loop(1.0, 0.0)), 0.0, 1e-15);
  auto flipped = equal_loop(1.0, 0.0);
  flipped.couplings[2].structure_sign = -1;
  EXPECT_NEAR(total_phase(flipped), kPi, 1e-15);
  auto thirds = equal_loop(1.0, kPi / 3.0);
  thirds.couplings[2].static_phase = kPi / 3.0;   // phi_{2,3}
  thirds.couplings[1].static_phase = -kPi / 3.0;  // phi_{3,1} = -phi_{1,3}
  EXPECT_NEAR(total_phase(thirds), kPi, 1e-14);
}

TEST(TotalPhase, LoopPhaseOverride) {
  for (double phi : {0.0, 0.5, kPi, 4.0, 6.0}) {
    const auto s = with_loop_phase(make_discriminator(1.0, 12.0), phi);
    EXPECT_NEAR(total_phase(s), phi, 1e-12);
  }
}

TEST(EnantiomerFlip, ShiftsLoopPhaseByPi) {
  const auto l = make_discriminator(1.0, 12.0, Enantiomer::L);
  const auto d = enantiomer_flip(l);
  EXPECT_EQ(d.enantiomer, Enantiomer::D);
  EXPECT_NEAR(total_phase(l), 0.0, 1e-15);
  EXPECT_NEAR(total_phase(d), kPi, 1e-15);
  EXPECT_EQ(d, make_discriminator(1.0, 12.0, Enantiomer::D));
  // only one coupling differs
  int differing = 0;
  for (std::size_t i = 0; i < l.couplings.size(); ++i) differing += l.couplings[i] == d.couplings[i] ? 0 : 1;
  EXPECT_EQ(differing, 1);
}

TEST(EnantiomerFlip, IsAnInvolution) {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(0.1, 5.0);
  for (int k = 0; k < 50; ++k) {
    auto disc = make_discriminator(u(rng), u(rng), k % 2 ? Enantiomer::L : Enantiomer::D);
    disc = with_loop_phase(disc, u(rng));
    EXPECT_EQ(enantiomer_flip(enantiomer_flip(disc)), disc);
    const auto conv = make_converter(u(rng), u(rng), {k % 2 ? 1 : -1, 1});
    EXPECT_EQ(enantiomer_flip(enantiomer_flip(conv)), conv);
  }
}

TEST(FlipDriveSign, UnknownDriveRejected) {
  EXPECT_THROW(flip_drive_sign(make_converter(30.0, 3.0), "9,9"), InvalidParameter);
  const auto flipped = flip_drive_sign(make_converter(30.0, 3.0), "4,5A");
  const auto [r, r_prime] = converter_ratios(flipped);
  EXPECT_NEAR(r, 2.0, 1e-15);
  EXPECT_NEAR(r_prime, 0.4, 1e-15);
}

TEST(ChiralBasis, TransformAndInverse) {
  const double s = 1.0 / std::sqrt(2.0);
  auto [l, d] = chiral_basis_transform(1.0, 0.0);
  EXPECT_NEAR(std::abs(l - s), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(d - s), 0.0, 1e-15);
  std::tie(l, d) = chiral_basis_transform(s, s);
  EXPECT_NEAR(std::abs(l - 1.0), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(d), 0.0, 1e-15);
  std::tie(l, d) = chiral_basis_transform(s, -s);
  EXPECT_NEAR(std::abs(l), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(d - 1.0), 0.0, 1e-15);
  const Complex a(0.3, -0.2), b(-0.1, 0.7);
  const auto [x, y] = chiral_basis_transform(a, b);
  const auto [a2, b2] = chiral_basis_transform(x, y);
  EXPECT_NEAR(std::abs(a2 - a), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(b2 - b), 0.0, 1e-15);
}

TEST(Units, WavenumberConversion) {
  EXPECT_EQ(wavenumber_to_angular_frequency(0.0), 0.0);
  EXPECT_NEAR(wavenumber_to_angular_frequency(1.0), 188.36515673088532773, 1e-12);
  EXPECT_NEAR(wavenumber_to_angular_frequency(0.38), 71.578759557736424539, 1e-12);
  EXPECT_NEAR(kTwoPi / wavenumber_to_angular_frequency(0.38), 0.0877800250521452762, 1e-15);
  EXPECT_THROW(wavenumber_to_angular_frequency(-1.0), InvalidParameter);
}

TEST(StateVector, NormalizationInvariant) {
  EXPECT_THROW(StateVector(CVector::Ones(3), {"1", "2", "3"}), InvalidInput);
  EXPECT_THROW(StateVector(CVector::Unit(3, 0), {"1", "2"}), InvalidInput);
  const auto s = StateVector::normalized(CVector::Ones(3), {"1", "2", "3"});
  EXPECT_NEAR(s.amplitudes().squaredNorm(), 1.0, 1e-15);
  EXPECT_EQ(s.index_of("3"), 2u);
  EXPECT_THROW(StateVector::normalized(CVector::Zero(2), {"a", "b"}), InvalidInput);
}

TEST(Populations, Examples) {
  CVector c(3);
  c << 1.0, 0.0, 0.0;
  EXPECT_EQ(populations(c), RVector::Unit(3, 0));
  c << Complex(0.5, 0.5), Complex(0.5, -0.5), 0.0;
  const RVector p = populations(c);
  EXPECT_NEAR(p[0], 0.5, 1e-15);
  EXPECT_NEAR(p[1], 0.5, 1e-15);
  EXPECT_EQ(p[2], 0.0);
}

TEST(Scheme, WindowValidation) {
  auto s = make_discriminator(1.0, 12.0);
  s.t_end = s.t_start;
  EXPECT_THROW(s.validate(), InvalidParameter);
  auto t = make_discriminator(1.0, 12.0);
  t.detunings = {0.0, 1.0};
  EXPECT_THROW(t.validate(), SchemeShapeError);
}

TEST(Scheme, DetuningsOnDiagonal) {
  auto s = make_discriminator(1.0, 12.0);
  s.detunings = {0.0, 0.25, -0.5};
  const auto h = build_discriminator_hamiltonian(s, 0.0);
  EXPECT_EQ(h(1, 1), Complex(0.25));
  EXPECT_EQ(h(2, 2), Complex(-0.5));
}
