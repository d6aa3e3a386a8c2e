#pragma once

#include <Eigen/Dense>

#include <complex>
#include <numbers>
#include <string>
#include <vector>

#include "chiral_switch/error.hpp"

namespace chiral {

using Complex = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using RVector = Eigen::VectorXd;

inline constexpr double kNormTolerance = 1e-9;

/// Complex amplitudes over a labeled set of levels. Always unit norm.
class StateVector {
 public:
  StateVector(CVector amplitudes, std::vector<std::string> labels)
      : amplitudes_(std::move(amplitudes)), labels_(std::move(labels)) {
    if (static_cast<std::size_t>(amplitudes_.size()) != labels_.size())
      throw InvalidInput("amplitude and label counts differ");
    if (amplitudes_.size() == 0) throw InvalidInput("empty state vector");
    if (std::abs(amplitudes_.squaredNorm() - 1.0) > kNormTolerance)
      throw InvalidInput("state vector is not normalized");
  }

  /// Normalizes `amplitudes` before construction; rejects the zero vector.
  static StateVector normalized(CVector amplitudes, std::vector<std::string> labels) {
    const double norm = amplitudes.norm();
    if (norm == 0.0) throw InvalidInput("cannot normalize the zero vector");
    amplitudes /= norm;
    return {std::move(amplitudes), std::move(labels)};
  }

  /// Unit amplitude on level `index`.
  static StateVector basis(std::size_t index, std::vector<std::string> labels) {
    if (index >= labels.size()) throw InvalidInput("basis index out of range");
    CVector amps = CVector::Zero(static_cast<Eigen::Index>(labels.size()));
    amps[static_cast<Eigen::Index>(index)] = 1.0;
    return {std::move(amps), std::move(labels)};
  }

  [[nodiscard]] const CVector& amplitudes() const noexcept { return amplitudes_; }
  [[nodiscard]] const std::vector<std::string>& labels() const noexcept { return labels_; }
  [[nodiscard]] std::size_t size() const noexcept { return labels_.size(); }
  [[nodiscard]] Complex operator[](std::size_t i) const {
    return amplitudes_[static_cast<Eigen::Index>(i)];
  }

  /// Index of `label`; throws InvalidInput when absent.
  [[nodiscard]] std::size_t index_of(const std::string& label) const {
    for (std::size_t i = 0; i < labels_.size(); ++i)
      if (labels_[i] == label) return i;
    throw InvalidInput("unknown level label '" + label + "'");
  }

 private:
  CVector amplitudes_;
  std::vector<std::string> labels_;
};

/// p_i = |c_i|^2.
inline RVector populations(const CVector& amplitudes) { return amplitudes.cwiseAbs2(); }
inline RVector populations(const StateVector& state) { return populations(state.amplitudes()); }

/// Maps symmetric/antisymmetric amplitudes (c_S, c_A) to chiral ones
/// (c_L, c_D) = ((c_S + c_A)/sqrt2, (c_S - c_A)/sqrt2). The map is its own inverse.
inline std::pair<Complex, Complex> chiral_basis_transform(Complex c_sym, Complex c_anti) {
  const double s = std::numbers::sqrt2 / 2.0;
  return {s * (c_sym + c_anti), s * (c_sym - c_anti)};
}

}  // namespace chiral
