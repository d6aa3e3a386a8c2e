#pragma once

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "chiral_switch/error.hpp"
#include "chiral_switch/propagator.hpp"
#include "chiral_switch/scheme.hpp"
#include "chiral_switch/units.hpp"

namespace chiral {

inline const std::vector<std::string>& discriminator_labels() {
  static const std::vector<std::string> labels{"1", "2", "3"};
  return labels;
}

inline const std::vector<std::string>& converter_labels() {
  static const std::vector<std::string> labels{"3L", "3D", "5S", "5A", "4L", "4D"};
  return labels;
}

namespace detail {
inline void require_positive(double omega_max, double tau) {
  if (!(omega_max > 0.0) || !std::isfinite(omega_max)) throw InvalidParameter("omega_max must be positive");
  if (!(tau > 0.0) || !std::isfinite(tau)) throw InvalidParameter("tau must be positive");
}
}  // namespace detail

/// Three-level discriminator over levels (1, 2, 3), window [-3 tau, 9 tau]:
///   W23 = W f(t)                                   dump
///   W12 = W f(t - 2 tau)                           pump
///   W13 = W (f(t - 2 tau) + f(t - 4 tau) exp{-i t W f(t - 6 tau)})
/// The L form has loop phase 0; the D form differs by the dipole sign of the
/// 1,3 coupling, giving loop phase pi.
inline DriveScheme make_discriminator(double omega_max, double tau, Enantiomer enantiomer = Enantiomer::L) {
  detail::require_positive(omega_max, tau);
  DriveScheme scheme;
  scheme.labels = discriminator_labels();
  scheme.t_start = -3.0 * tau;
  scheme.t_end = 9.0 * tau;
  scheme.pulse_width = tau;

  Coupling w12;
  w12.level_a = 1;
  w12.level_b = 0;
  w12.drive = "1,2";
  w12.envelopes = {PulseEnvelope(omega_max, 2.0 * tau, tau)};

  Coupling w13;
  w13.level_a = 2;
  w13.level_b = 0;
  w13.drive = "1,3";
  w13.flips_with_enantiomer = true;
  w13.envelopes = {PulseEnvelope(omega_max, 2.0 * tau, tau),
                   PulseEnvelope(omega_max, 4.0 * tau, tau, Chirp{omega_max, 6.0 * tau, tau})};

  Coupling w23;
  w23.level_a = 2;
  w23.level_b = 1;
  w23.drive = "2,3";
  w23.envelopes = {PulseEnvelope(omega_max, 0.0, tau)};

  scheme.couplings = {w12, w13, w23};
  return enantiomer == Enantiomer::L ? scheme : enantiomer_flip(std::move(scheme));
}

/// Peak amplitudes of the four converter drives in units of omega_max.
struct ConverterPrefactors {
  double pump_s = 1.0;   // 3,5S
  double pump_a = 0.5;   // 3,5A
  double dump_s = 0.4;   // 4,5S
  double dump_a = -1.0;  // 4,5A

  bool operator==(const ConverterPrefactors&) const = default;
};

/// Extra signs on the 3,5A drive (r) and the 4,5A drive (r').
struct SignConfig {
  int r_sign = 1;
  int r_prime_sign = 1;

  bool operator==(const SignConfig&) const = default;
};

/// Six-level converter over (3L, 3D, 5S, 5A, 4L, 4D), window [-3 tau, 5 tau].
/// Dump drives 4,5S / 4,5A peak at t = 0, pump drives 3,5S / 3,5A at 2 tau.
inline DriveScheme make_converter(double omega_max, double tau, SignConfig signs = {},
                                  ConverterPrefactors prefactors = {}) {
  detail::require_positive(omega_max, tau);
  if (std::abs(signs.r_sign) != 1 || std::abs(signs.r_prime_sign) != 1)
    throw InvalidParameter("sign_config entries must be +1 or -1");
  DriveScheme scheme;
  scheme.labels = converter_labels();
  scheme.t_start = -3.0 * tau;
  scheme.t_end = 5.0 * tau;
  scheme.pulse_width = tau;

  auto add = [&](std::size_t row, std::size_t col, int sign, const char* drive, double peak, double center) {
    Coupling c;
    c.level_a = row;
    c.level_b = col;
    c.structure_sign = sign;
    c.drive = drive;
    c.envelopes = {PulseEnvelope(peak, center, tau)};
    scheme.couplings.push_back(std::move(c));
  };
  const double pump_s = prefactors.pump_s * omega_max;
  const double pump_a = prefactors.pump_a * omega_max * signs.r_sign;
  const double dump_s = prefactors.dump_s * omega_max;
  const double dump_a = prefactors.dump_a * omega_max * signs.r_prime_sign;
  const double pump_at = 2.0 * tau;
  add(0, 2, -1, "3,5S", pump_s, pump_at);
  add(1, 2, 1, "3,5S", pump_s, pump_at);
  add(0, 3, 1, "3,5A", pump_a, pump_at);
  add(1, 3, 1, "3,5A", pump_a, pump_at);
  add(4, 2, -1, "4,5S", dump_s, 0.0);
  add(5, 2, 1, "4,5S", dump_s, 0.0);
  add(4, 3, 1, "4,5A", dump_a, 0.0);
  add(5, 3, 1, "4,5A", dump_a, 0.0);
  return scheme;
}

/// Ratios r = W35S / W35A and r' = W45S / W45A of the peak amplitudes.
inline std::pair<double, double> converter_ratios(const DriveScheme& converter) {
  auto peak = [&](const char* drive) {
    for (const auto& c : converter.couplings)
      if (c.drive == drive && !c.envelopes.empty()) return c.envelopes.front().peak_rabi;
    throw SchemeShapeError(std::string("converter has no ") + drive + " drive");
  };
  return {peak("3,5S") / peak("3,5A"), peak("4,5S") / peak("4,5A")};
}

/// Interconversion periods of the chiral pairs and the |5> tunnelling splitting.
struct MoleculeTimescales {
  std::map<int, double> tau_s;  // k -> period, ns
  double delta_e5 = 0.38;       // cm^-1
  double tau_s5 = 0.1;          // ns, nominal round value
  double cis_barrier = 2700.0;  // cm^-1, not used numerically
  double trans_barrier = 1900.0;

  void validate() const {
    if (tau_s.empty()) throw InvalidParameter("interconversion table is empty");
    double previous = std::numeric_limits<double>::infinity();
    for (const auto& [k, period] : tau_s) {
      if (!(period > 0.0)) throw InvalidParameter("interconversion periods must be positive");
      if (!(period < previous)) throw InvalidParameter("interconversion periods must decrease with k");
      previous = period;
    }
    if (!(delta_e5 > 0.0)) throw InvalidParameter("|5> splitting must be positive");
  }

  /// 2 pi / (S-A splitting of |5>), ns.
  [[nodiscard]] double beat_period5() const { return kTwoPi / wavenumber_to_angular_frequency(delta_e5); }
};

/// D2S2 values: 33, 3.3, 0.165 ms for k = 1..3 and 0.05 ms for k = 4.
inline MoleculeTimescales d2s2_timescales() {
  MoleculeTimescales m;
  m.tau_s = {{1, 33.0e6}, {2, 3.3e6}, {3, 0.165e6}, {4, 0.05e6}};
  return m;
}

struct TimescaleCheck {
  bool resolves_splitting = false;  // duration / beat period >= 10
  double splitting_ratio = 0.0;
  bool chirality_frozen = false;    // duration / min tau_s <= 0.1
  double chirality_ratio = 0.0;

  [[nodiscard]] bool ok() const noexcept { return resolves_splitting && chirality_frozen; }
};

/// A pulse sequence must be long against the |5> beat period and short
/// against every interconversion period.
inline TimescaleCheck validate_timescales(const MoleculeTimescales& m, double total_pulse_duration) {
  if (!(total_pulse_duration > 0.0)) throw InvalidParameter("pulse duration must be positive");
  m.validate();
  TimescaleCheck check;
  check.splitting_ratio = total_pulse_duration / m.beat_period5();
  check.resolves_splitting = check.splitting_ratio >= 10.0;
  double shortest = std::numeric_limits<double>::infinity();
  for (const auto& [k, period] : m.tau_s) shortest = std::min(shortest, period);
  check.chirality_ratio = total_pulse_duration / shortest;
  check.chirality_frozen = check.chirality_ratio <= 0.1;
  return check;
}

using PopulationMap = std::map<std::string, double>;

/// Outcome of discriminator + converter on a racemic pair.
struct SwitchResult {
  /// Keyed by "L" / "D": populations over chiral-labelled levels such as "1L", "4D".
  std::map<std::string, PopulationMap> initial;
  std::map<std::string, PopulationMap> final;
  Enantiomer excited = Enantiomer::L;  // member sent to |3> by the discriminator
  Enantiomer target = Enantiomer::D;   // form the ensemble ends up in
  double discrimination_fidelity = 0.0;
  double conversion_fidelity = 0.0;
  double enantiomeric_excess = 0.0;
  double max_level2_final = 0.0;       // max over members of the final |2> population
  double max_excited_population = 0.0; // max_t p(5S) + p(5A) in the converter
  double norm_drift = 0.0;
  Trajectory discriminator_l;
  Trajectory discriminator_d;
  Trajectory converter;
};

namespace detail {
template <typename F>
Trajectory annotated(const std::string& stage, F&& run) {
  try {
    return run();
  } catch (const IntegrationError& e) {
    throw IntegrationError(stage + ": " + e.what(), e.time());
  } catch (const Error& e) {
    throw Error(e.kind(), stage + ": " + e.what());
  }
}
}  // namespace detail

/// Runs both members of a 50/50 mixture, each starting in |1>, through the
/// discriminator, then sends the |3> amplitude of the excited member through
/// the converter. The member left in |1> sees no converter field.
inline SwitchResult run_two_step(double omega_max_disc, double tau_disc, double omega_max_conv, double tau_conv,
                                 const IntegratorConfig& cfg = {}, SignConfig signs = {},
                                 ConverterPrefactors prefactors = {}) {
  const auto disc_l = make_discriminator(omega_max_disc, tau_disc, Enantiomer::L);
  const auto disc_d = make_discriminator(omega_max_disc, tau_disc, Enantiomer::D);
  const auto converter = make_converter(omega_max_conv, tau_conv, signs, prefactors);
  const auto start = StateVector::basis(0, discriminator_labels());

  auto future_d = std::async(std::launch::async, [&] {
    return detail::annotated("discriminator (D)", [&] { return propagate(disc_d, start, cfg); });
  });
  SwitchResult result;
  result.discriminator_l = detail::annotated("discriminator (L)", [&] { return propagate(disc_l, start, cfg); });
  result.discriminator_d = future_d.get();

  const RVector& pl = result.discriminator_l.final_populations();
  const RVector& pd = result.discriminator_d.final_populations();
  result.excited = pl[2] >= pd[2] ? Enantiomer::L : Enantiomer::D;
  const Enantiomer resting = opposite(result.excited);
  const RVector& p_exc = result.excited == Enantiomer::L ? pl : pd;
  const RVector& p_rest = result.excited == Enantiomer::L ? pd : pl;
  const std::string exc(to_string(result.excited));
  const std::string rest(to_string(resting));

  const std::size_t entry = result.excited == Enantiomer::L ? 0 : 1;
  result.converter = detail::annotated("converter", [&] {
    return propagate(converter, StateVector::basis(entry, converter_labels()), cfg);
  });

  for (const auto& e : {exc, rest}) result.initial[e] = {{"1" + e, 1.0}};
  result.final[rest] = {{"1" + rest, p_rest[0]}, {"2" + rest, p_rest[1]}, {"3" + rest, p_rest[2]}};
  auto& fe = result.final[exc];
  fe = {{"1" + exc, p_exc[0]}, {"2" + exc, p_exc[1]}};
  const RVector& pc = result.converter.final_populations();
  for (std::size_t k = 0; k < converter_labels().size(); ++k)
    fe[converter_labels()[k]] += p_exc[2] * pc[static_cast<Eigen::Index>(k)];

  // the converter sends 3X to the opposite form, so the target is the resting form
  result.target = resting;
  const std::string target = rest;
  const std::string other = exc;
  double n_target = 0.0, n_other = 0.0;
  for (const auto& [member, pops] : result.final) {
    for (const auto& [label, p] : pops) {
      if (label.ends_with(target)) n_target += 0.5 * p;
      else if (label.ends_with(other)) n_other += 0.5 * p;
    }
  }
  result.enantiomeric_excess = (n_target + n_other) > 0.0 ? (n_target - n_other) / (n_target + n_other) : 0.0;
  result.discrimination_fidelity = std::clamp(std::min(p_exc[2], p_rest[0]), 0.0, 1.0);
  result.conversion_fidelity = std::clamp(result.converter.population(result.converter.size() - 1, "4" + target), 0.0, 1.0);
  result.max_level2_final = std::max(p_exc[1], p_rest[1]);
  for (std::size_t s = 0; s < result.converter.size(); ++s)
    result.max_excited_population = std::max(
        result.max_excited_population, result.converter.population(s, "5S") + result.converter.population(s, "5A"));
  result.norm_drift = std::max({result.discriminator_l.norm_drift, result.discriminator_d.norm_drift,
                                result.converter.norm_drift});
  return result;
}

}  // namespace chiral
