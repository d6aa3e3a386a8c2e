#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "chiral_switch/error.hpp"
#include "chiral_switch/pulse.hpp"
#include "chiral_switch/state.hpp"
#include "chiral_switch/units.hpp"

namespace chiral {

enum class Enantiomer { L, D };

inline std::string_view to_string(Enantiomer e) { return e == Enantiomer::L ? "L" : "D"; }

inline Enantiomer parse_enantiomer(std::string_view text) {
  if (text == "L" || text == "l") return Enantiomer::L;
  if (text == "D" || text == "d") return Enantiomer::D;
  throw InvalidParameter("enantiomer must be L or D, got '" + std::string(text) + "'");
}

inline Enantiomer opposite(Enantiomer e) { return e == Enantiomer::L ? Enantiomer::D : Enantiomer::L; }

/// One stage of the switch: a set of resonant couplings over labeled levels,
/// acting during [t_start, t_end]. Diagonal terms are zero in the resonant
/// rotating frame unless `detunings` is set.
struct DriveScheme {
  std::vector<std::string> labels;
  std::vector<Coupling> couplings;
  double t_start = 0.0;
  double t_end = 1.0;
  Enantiomer enantiomer = Enantiomer::L;
  std::vector<double> detunings;     // rad/ns, empty or one per level
  std::optional<double> pulse_width;  // characteristic tau, ns

  [[nodiscard]] std::size_t dimension() const noexcept { return labels.size(); }

  void validate() const {
    const std::size_t n = labels.size();
    if (n < 2) throw SchemeShapeError("scheme needs at least two levels");
    if (!std::isfinite(t_start) || !std::isfinite(t_end) || !(t_end > t_start))
      throw InvalidParameter("scheme window must be finite with t_end > t_start");
    if (!detunings.empty() && detunings.size() != n)
      throw SchemeShapeError("detunings must have one entry per level");
    for (const auto& c : couplings) {
      if (c.level_a >= n || c.level_b >= n)
        throw SchemeShapeError("coupling '" + c.drive + "' references a level outside the scheme");
      if (c.level_a == c.level_b)
        throw SchemeShapeError("coupling '" + c.drive + "' connects a level to itself");
      if (c.structure_sign != 1 && c.structure_sign != -1)
        throw SchemeShapeError("structure sign must be +1 or -1");
      for (const auto& e : c.envelopes) e.validate();
    }
  }

  bool operator==(const DriveScheme&) const = default;
};

/// Writes H(t) of an arbitrary scheme into `h`, which must be N x N. The
/// scheme is not validated here; callers on hot paths validate once.
inline void build_hamiltonian_into(const DriveScheme& scheme, double t, CMatrix& h) {
  h.setZero();
  for (const auto& c : scheme.couplings) {
    const Complex omega = evaluate_coupling(c, t);
    const auto a = static_cast<Eigen::Index>(c.level_a);
    const auto b = static_cast<Eigen::Index>(c.level_b);
    h(a, b) += omega;
    h(b, a) += std::conj(omega);
  }
  for (std::size_t i = 0; i < scheme.detunings.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    h(k, k) = scheme.detunings[i];
  }
}

/// Hamiltonian of an arbitrary scheme at time t.
inline CMatrix build_hamiltonian(const DriveScheme& scheme, double t) {
  scheme.validate();
  const auto n = static_cast<Eigen::Index>(scheme.dimension());
  CMatrix h(n, n);
  build_hamiltonian_into(scheme, t, h);
  return h;
}

namespace detail {

struct Slot {
  std::size_t row;
  std::size_t col;
  int sign;
  std::string_view drive;
};

// Rows/cols of the three-level loop: Omega_{1,2} sits below the diagonal at
// (2,1), Omega_{1,3} at (3,1), Omega_{2,3} at (3,2) (1-based).
inline constexpr std::array<Slot, 3> kDiscriminatorSlots{{
    {1, 0, 1, "1,2"},
    {2, 0, 1, "1,3"},
    {2, 1, 1, "2,3"},
}};

// Level order 3L, 3D, 5S, 5A, 4L, 4D.
inline constexpr std::array<Slot, 8> kConverterSlots{{
    {0, 2, -1, "3,5S"},
    {1, 2, 1, "3,5S"},
    {0, 3, 1, "3,5A"},
    {1, 3, 1, "3,5A"},
    {4, 2, -1, "4,5S"},
    {5, 2, 1, "4,5S"},
    {4, 3, 1, "4,5A"},
    {5, 3, 1, "4,5A"},
}};

template <std::size_t K>
void require_shape(const DriveScheme& scheme, std::size_t dimension, const std::array<Slot, K>& slots,
                   bool check_signs, const char* what) {
  scheme.validate();
  if (scheme.dimension() != dimension)
    throw SchemeShapeError(std::string(what) + " scheme must have " + std::to_string(dimension) + " levels");
  if (scheme.couplings.size() != slots.size())
    throw SchemeShapeError(std::string(what) + " scheme must have exactly " + std::to_string(slots.size()) +
                           " couplings");
  for (const auto& slot : slots) {
    const auto count = std::count_if(scheme.couplings.begin(), scheme.couplings.end(), [&](const Coupling& c) {
      return c.level_a == slot.row && c.level_b == slot.col;
    });
    if (count != 1)
      throw SchemeShapeError(std::string(what) + " scheme is missing the " + std::string(slot.drive) +
                             " coupling at (" + std::to_string(slot.row) + "," + std::to_string(slot.col) + ")");
    if (check_signs) {
      const auto it = std::find_if(scheme.couplings.begin(), scheme.couplings.end(), [&](const Coupling& c) {
        return c.level_a == slot.row && c.level_b == slot.col;
      });
      if (it->structure_sign != slot.sign)
        throw SchemeShapeError("converter coupling " + std::string(slot.drive) + " has the wrong structure sign");
    }
  }
}

}  // namespace detail

/// Three-level loop Hamiltonian
///   [[0, W12*, W13*], [W12, 0, W23*], [W13, W23, 0]].
inline CMatrix build_discriminator_hamiltonian(const DriveScheme& scheme, double t) {
  detail::require_shape(scheme, 3, detail::kDiscriminatorSlots, false, "discriminator");
  return build_hamiltonian(scheme, t);
}

/// Six-level dual-path Hamiltonian over (3L, 3D, 5S, 5A, 4L, 4D). Every drive
/// couples the 5S/5A pair to an L/D pair with sign pattern (-,+) for S
/// and (+,+) for A.
inline CMatrix build_converter_hamiltonian(const DriveScheme& scheme, double t) {
  detail::require_shape(scheme, 6, detail::kConverterSlots, true, "converter");
  return build_hamiltonian(scheme, t);
}

/// Static phase of a coupling: field phase plus pi for a negative structure
/// sign and pi for a negative leading lobe. Chirps are excluded.
inline double coupling_phase(const Coupling& c) {
  double phase = c.static_phase;
  if (c.structure_sign < 0) phase += kPi;
  if (!c.envelopes.empty() && c.envelopes.front().peak_rabi < 0.0) phase += kPi;
  return phase;
}

/// Loop phase phi_{1,2} + phi_{2,3} + phi_{3,1} of a three-level scheme, in [0, 2pi).
inline double total_phase(const DriveScheme& scheme) {
  if (scheme.dimension() != 3) throw SchemeShapeError("total phase needs a three-level loop");
  // Phase of the lower-triangle element H(i,j), i > j, i.e. of Omega_{j+1,i+1}.
  auto lower = [&](std::size_t i, std::size_t j) {
    double phase = 0.0;
    bool found = false;
    for (const auto& c : scheme.couplings) {
      if (c.level_a == i && c.level_b == j) {
        phase += coupling_phase(c);
        found = true;
      } else if (c.level_a == j && c.level_b == i) {
        phase -= coupling_phase(c);
        found = true;
      }
    }
    if (!found) throw SchemeShapeError("three-level loop is not closed");
    return phase;
  };
  return wrap_phase(lower(1, 0) + lower(2, 1) - lower(2, 0));
}

/// Adds a static phase to the 1<->2 coupling so the loop phase equals `phi`.
inline DriveScheme with_loop_phase(DriveScheme scheme, double phi) {
  const double shift = phi - total_phase(scheme);
  for (auto& c : scheme.couplings) {
    if (c.level_a == 1 && c.level_b == 0) {
      c.static_phase += shift;
      return scheme;
    }
    if (c.level_a == 0 && c.level_b == 1) {
      c.static_phase -= shift;
      return scheme;
    }
  }
  throw SchemeShapeError("three-level loop has no 1,2 coupling");
}

/// Negates the amplitude of every lobe of the named drive.
inline DriveScheme flip_drive_sign(DriveScheme scheme, std::string_view drive) {
  bool found = false;
  for (auto& c : scheme.couplings) {
    if (c.drive != drive) continue;
    found = true;
    for (auto& e : c.envelopes) e.peak_rabi = -e.peak_rabi;
  }
  if (!found) throw InvalidParameter("scheme has no drive named '" + std::string(drive) + "'");
  return scheme;
}

/// Mirror-image scheme: dipole signs of the marked couplings flipped and the
/// enantiomer tag toggled. An involution.
inline DriveScheme enantiomer_flip(DriveScheme scheme) {
  for (auto& c : scheme.couplings) {
    if (!c.flips_with_enantiomer) continue;
    for (auto& e : c.envelopes) e.peak_rabi = -e.peak_rabi;
  }
  scheme.enantiomer = opposite(scheme.enantiomer);
  return scheme;
}

/// Scheme generating H*(-t) over [-t_end, -t_start]. Propagating the conjugate
/// of a final state through it and conjugating the result undoes the
/// original evolution.
inline DriveScheme time_reversed(DriveScheme scheme) {
  for (auto& c : scheme.couplings) {
    c.static_phase = -c.static_phase;
    for (auto& e : c.envelopes) {
      e.center = -e.center;
      if (e.chirp) e.chirp->envelope_center = -e.chirp->envelope_center;
    }
  }
  const double start = scheme.t_start;
  scheme.t_start = -scheme.t_end;
  scheme.t_end = -start;
  return scheme;
}

}  // namespace chiral
