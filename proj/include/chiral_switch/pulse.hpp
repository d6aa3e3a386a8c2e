#pragma once

#include <cmath>
#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "chiral_switch/error.hpp"
#include "chiral_switch/state.hpp"

namespace chiral {

/// exp[-(t - center)^2 / width^2].
inline double gaussian_envelope(double t, double center, double width) {
  if (!(width > 0.0)) throw InvalidParameter("gaussian width must be positive");
  const double x = (t - center) / width;
  return std::exp(-x * x);
}

/// Time-dependent phase exp{-i t strength f(t - envelope_center)} applied to
/// one pulse lobe.
struct Chirp {
  double strength = 0.0;         // rad/ns
  double envelope_center = 0.0;  // ns
  double envelope_width = 1.0;   // ns

  [[nodiscard]] Complex phase_factor(double t) const {
    const double angle = -t * strength * gaussian_envelope(t, envelope_center, envelope_width);
    return std::polar(1.0, angle);
  }

  bool operator==(const Chirp&) const = default;
};

/// One Gaussian lobe of a Rabi drive. `peak_rabi` carries its own sign.
struct PulseEnvelope {
  double peak_rabi = 0.0;  // rad/ns
  double center = 0.0;     // ns
  double width = 1.0;      // ns
  std::optional<Chirp> chirp;

  PulseEnvelope() = default;
  PulseEnvelope(double peak, double center_ns, double width_ns,
                std::optional<Chirp> chirp_shape = std::nullopt)
      : peak_rabi(peak), center(center_ns), width(width_ns), chirp(chirp_shape) {
    validate();
  }

  void validate() const {
    if (!(width > 0.0)) throw InvalidParameter("pulse width must be positive");
    if (!std::isfinite(peak_rabi) || !std::isfinite(center))
      throw InvalidParameter("pulse parameters must be finite");
    if (chirp && !(chirp->envelope_width > 0.0))
      throw InvalidParameter("chirp envelope width must be positive");
  }

  [[nodiscard]] Complex evaluate(double t) const {
    const double amplitude = peak_rabi * gaussian_envelope(t, center, width);
    return chirp ? amplitude * chirp->phase_factor(t) : Complex(amplitude, 0.0);
  }

  bool operator==(const PulseEnvelope&) const = default;
};

/// A resonant drive between levels `level_a` and `level_b`. The complex Rabi
/// frequency enters the Hamiltonian at (level_a, level_b) and its conjugate at
/// (level_b, level_a).
///
/// `structure_sign` is the fixed sign with which the drive appears in the
/// Hamiltonian; `static_phase` is the combined dipole + field phase. Several
/// couplings may share one `drive` name when one field fans out to several
/// matrix elements; sign studies act on all of them together.
/// `flips_with_enantiomer` marks the couplings whose dipole sign differs
/// between the L and D forms.
struct Coupling {
  std::size_t level_a = 0;
  std::size_t level_b = 1;
  std::vector<PulseEnvelope> envelopes;
  double static_phase = 0.0;
  int structure_sign = 1;
  std::string drive;
  bool flips_with_enantiomer = false;

  bool operator==(const Coupling&) const = default;
};

/// structure_sign * e^{i static_phase} * sum of envelope lobes at t.
inline Complex evaluate_coupling(const Coupling& coupling, double t) {
  Complex sum{0.0, 0.0};
  for (const auto& envelope : coupling.envelopes) sum += envelope.evaluate(t);
  return static_cast<double>(coupling.structure_sign) * std::polar(1.0, coupling.static_phase) * sum;
}

}  // namespace chiral
