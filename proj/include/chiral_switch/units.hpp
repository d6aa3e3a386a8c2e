#pragma once

#include <cmath>
#include <numbers>

#include "chiral_switch/error.hpp"

namespace chiral {

// hbar = 1; times in ns, rates and energies in rad/ns.
inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Speed of light in cm/ns.
inline constexpr double kSpeedOfLightCmPerNs = 29.9792458;

/// Converts a spectroscopic wavenumber (cm^-1) to an angular frequency (rad/ns).
inline double wavenumber_to_angular_frequency(double wavenumber) {
  if (!(wavenumber >= 0.0)) throw InvalidParameter("wavenumber must be non-negative");
  return kTwoPi * kSpeedOfLightCmPerNs * wavenumber;
}

/// Wraps an angle into [0, 2pi).
inline double wrap_phase(double phase) {
  double wrapped = std::fmod(phase, kTwoPi);
  if (wrapped < 0.0) wrapped += kTwoPi;
  // fmod can return exactly 2pi after the shift for tiny negative inputs
  if (wrapped >= kTwoPi) wrapped = 0.0;
  return wrapped;
}

}  // namespace chiral
