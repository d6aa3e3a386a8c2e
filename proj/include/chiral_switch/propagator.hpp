#pragma once

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "chiral_switch/error.hpp"
#include "chiral_switch/scheme.hpp"
#include "chiral_switch/state.hpp"

namespace chiral {

enum class IntegratorMethod { Adaptive, RK4, PiecewiseExponential };

inline std::string_view to_string(IntegratorMethod m) {
  switch (m) {
    case IntegratorMethod::Adaptive: return "adaptive";
    case IntegratorMethod::RK4: return "rk4";
    case IntegratorMethod::PiecewiseExponential: return "oracle";
  }
  return "adaptive";
}

inline IntegratorMethod parse_integrator_method(std::string_view text) {
  if (text == "adaptive") return IntegratorMethod::Adaptive;
  if (text == "rk4") return IntegratorMethod::RK4;
  if (text == "oracle") return IntegratorMethod::PiecewiseExponential;
  throw InvalidParameter("integrator method must be adaptive, rk4 or oracle, got '" + std::string(text) + "'");
}

struct IntegratorConfig {
  IntegratorMethod method = IntegratorMethod::Adaptive;
  double rel_tol = 1e-10;
  double abs_tol = 1e-12;
  /// Upper bound on the adaptive step; the fixed step of RK4. ns.
  double max_step = 0.05;
  /// Output sampling interval, ns. Unset: pulse_width/50, or window/600.
  std::optional<double> sample_stride;
  /// Slice count for the piecewise-exponential method.
  std::size_t oracle_steps = 200000;
  /// A run whose max |norm^2 - 1| exceeds this is rejected.
  double norm_tolerance = 1e-8;
  std::size_t max_steps = 50'000'000;

  void validate() const {
    if (!(rel_tol > 0.0) || !(abs_tol > 0.0)) throw InvalidParameter("integrator tolerances must be positive");
    if (!(max_step > 0.0)) throw InvalidParameter("max_step must be positive");
    if (sample_stride && !(*sample_stride > 0.0)) throw InvalidParameter("sample_stride must be positive");
    if (oracle_steps < 1) throw InvalidParameter("oracle_steps must be at least 1");
    if (!(norm_tolerance > 0.0)) throw InvalidParameter("norm_tolerance must be positive");
  }

  bool operator==(const IntegratorConfig&) const = default;
};

/// Sampled solution of c' = -i H(t) c.
struct Trajectory {
  std::vector<std::string> labels;
  std::vector<double> times;
  std::vector<CVector> states;
  std::vector<RVector> populations;
  double norm_drift = 0.0;
  std::size_t accepted_steps = 0;
  std::size_t rejected_steps = 0;

  [[nodiscard]] std::size_t size() const noexcept { return times.size(); }
  [[nodiscard]] const CVector& final_amplitudes() const { return states.back(); }
  [[nodiscard]] const RVector& final_populations() const { return populations.back(); }
  [[nodiscard]] StateVector state(std::size_t i) const { return StateVector::normalized(states.at(i), labels); }

  /// Population of `label` at sample i.
  [[nodiscard]] double population(std::size_t i, std::string_view label) const {
    for (std::size_t k = 0; k < labels.size(); ++k)
      if (labels[k] == label) return populations.at(i)[static_cast<Eigen::Index>(k)];
    throw InvalidInput("unknown level label '" + std::string(label) + "'");
  }
};

/// Uniform output grid covering [t_start, t_end] with spacing <= stride.
inline std::vector<double> sample_times(double t_start, double t_end, double stride) {
  if (!(stride > 0.0)) throw InvalidParameter("sample stride must be positive");
  const double span = t_end - t_start;
  const auto intervals = static_cast<std::size_t>(std::max(1.0, std::ceil(span / stride - 1e-9)));
  std::vector<double> times(intervals + 1);
  for (std::size_t k = 0; k <= intervals; ++k)
    times[k] = t_start + span * static_cast<double>(k) / static_cast<double>(intervals);
  times.back() = t_end;
  return times;
}

inline double default_stride(const DriveScheme& scheme, const IntegratorConfig& cfg) {
  if (cfg.sample_stride) return *cfg.sample_stride;
  if (scheme.pulse_width) return *scheme.pulse_width / 50.0;
  return (scheme.t_end - scheme.t_start) / 600.0;
}

namespace detail {

inline void check_initial(const DriveScheme& scheme, const StateVector& c0) {
  scheme.validate();
  if (c0.size() != scheme.dimension()) throw InvalidInput("initial state dimension does not match the scheme");
}

inline void record(Trajectory& traj, double t, const CVector& c) {
  traj.times.push_back(t);
  traj.states.push_back(c);
  traj.populations.push_back(c.cwiseAbs2());
  traj.norm_drift = std::max(traj.norm_drift, std::abs(c.squaredNorm() - 1.0));
}

inline void finish(const Trajectory& traj, double tolerance) {
  if (traj.norm_drift > tolerance)
    throw IntegrationError("norm drift " + std::to_string(traj.norm_drift) + " exceeds tolerance", traj.times.back());
}

/// Evaluates -i H(t) c without reallocating H.
class SchrodingerRhs {
 public:
  explicit SchrodingerRhs(const DriveScheme& scheme)
      : scheme_(scheme), h_(CMatrix::Zero(static_cast<Eigen::Index>(scheme.dimension()),
                                          static_cast<Eigen::Index>(scheme.dimension()))) {}

  void operator()(double t, const CVector& c, CVector& out) {
    build_hamiltonian_into(scheme_, t, h_);
    out.noalias() = Complex(0.0, -1.0) * (h_ * c);
  }

 private:
  const DriveScheme& scheme_;
  CMatrix h_;
};

// Dormand-Prince 5(4) tableau.
struct DormandPrince {
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                          a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                          b6 = 11.0 / 84;
  // b - bhat
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                          e6 = 22.0 / 525, e7 = -1.0 / 40;
};

inline Trajectory propagate_adaptive(const DriveScheme& scheme, const StateVector& c0, const IntegratorConfig& cfg) {
  using DP = DormandPrince;
  const auto grid = sample_times(scheme.t_start, scheme.t_end, default_stride(scheme, cfg));
  const auto n = static_cast<Eigen::Index>(scheme.dimension());
  Trajectory traj;
  traj.labels = scheme.labels;

  SchrodingerRhs rhs(scheme);
  CVector y = c0.amplitudes();
  CVector k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), ytmp(n), ynew(n), err(n);
  double t = grid.front();
  rhs(t, y, k1);
  record(traj, t, y);

  double h = std::min(cfg.max_step, 1e-3 * (grid.back() - grid.front()));
  std::size_t steps = 0;
  for (std::size_t s = 1; s < grid.size(); ++s) {
    const double target = grid[s];
    while (t < target) {
      if (++steps > cfg.max_steps) throw IntegrationError("step budget exhausted before tolerance was met", t);
      const double remaining = target - t;
      const bool last = h >= remaining;
      const double step = last ? remaining : h;

      ytmp = y + step * DP::a21 * k1;
      rhs(t + DP::c2 * step, ytmp, k2);
      ytmp = y + step * (DP::a31 * k1 + DP::a32 * k2);
      rhs(t + DP::c3 * step, ytmp, k3);
      ytmp = y + step * (DP::a41 * k1 + DP::a42 * k2 + DP::a43 * k3);
      rhs(t + DP::c4 * step, ytmp, k4);
      ytmp = y + step * (DP::a51 * k1 + DP::a52 * k2 + DP::a53 * k3 + DP::a54 * k4);
      rhs(t + DP::c5 * step, ytmp, k5);
      ytmp = y + step * (DP::a61 * k1 + DP::a62 * k2 + DP::a63 * k3 + DP::a64 * k4 + DP::a65 * k5);
      rhs(t + step, ytmp, k6);
      ynew = y + step * (DP::b1 * k1 + DP::b3 * k3 + DP::b4 * k4 + DP::b5 * k5 + DP::b6 * k6);
      rhs(t + step, ynew, k7);
      err = step * (DP::e1 * k1 + DP::e3 * k3 + DP::e4 * k4 + DP::e5 * k5 + DP::e6 * k6 + DP::e7 * k7);

      double sum = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        const double scale = cfg.abs_tol + cfg.rel_tol * std::max(std::abs(y[i]), std::abs(ynew[i]));
        const double r = std::abs(err[i]) / scale;
        sum += r * r;
      }
      const double norm = std::sqrt(sum / static_cast<double>(n));
      const double factor =
          norm == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(norm, -0.2), 0.2, 5.0);

      if (norm <= 1.0) {
        t = last ? target : t + step;
        y.swap(ynew);
        k1.swap(k7);
        ++traj.accepted_steps;
        // a step truncated to hit a sample point keeps the earlier proposal
        h = std::min(cfg.max_step, last ? std::max(h, step * factor) : step * factor);
      } else {
        ++traj.rejected_steps;
        h = step * std::max(0.2, factor);
      }
      if (h < 1e-14 * std::max(1.0, std::abs(t))) throw IntegrationError("step size underflow", t);
    }
    record(traj, target, y);
  }
  finish(traj, cfg.norm_tolerance);
  return traj;
}

inline Trajectory propagate_rk4(const DriveScheme& scheme, const StateVector& c0, const IntegratorConfig& cfg) {
  const auto grid = sample_times(scheme.t_start, scheme.t_end, default_stride(scheme, cfg));
  const auto n = static_cast<Eigen::Index>(scheme.dimension());
  Trajectory traj;
  traj.labels = scheme.labels;
  SchrodingerRhs rhs(scheme);
  CVector y = c0.amplitudes();
  CVector k1(n), k2(n), k3(n), k4(n), tmp(n);
  record(traj, grid.front(), y);
  for (std::size_t s = 1; s < grid.size(); ++s) {
    const double t0 = grid[s - 1];
    const double span = grid[s] - t0;
    const auto m = static_cast<std::size_t>(std::max(1.0, std::ceil(span / cfg.max_step - 1e-9)));
    const double h = span / static_cast<double>(m);
    for (std::size_t j = 0; j < m; ++j) {
      const double t = t0 + h * static_cast<double>(j);
      rhs(t, y, k1);
      tmp = y + 0.5 * h * k1;
      rhs(t + 0.5 * h, tmp, k2);
      tmp = y + 0.5 * h * k2;
      rhs(t + 0.5 * h, tmp, k3);
      tmp = y + h * k3;
      rhs(t + h, tmp, k4);
      y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      ++traj.accepted_steps;
    }
    record(traj, grid[s], y);
  }
  finish(traj, cfg.norm_tolerance);
  return traj;
}

}  // namespace detail

/// Independent reference solution: the window is cut into slices, H is frozen
/// at each slice midpoint and the exact slice unitary V exp(-i L dt) V^dagger
/// is applied. Norm preserving up to eigensolver round-off. The slice count is
/// rounded up to a multiple of the number of output intervals so samples fall
/// on slice boundaries.
inline Trajectory piecewise_exponential_propagate(const DriveScheme& scheme, const StateVector& c0,
                                                  std::size_t n_steps, std::optional<double> sample_stride = {}) {
  if (n_steps < 1) throw InvalidParameter("n_steps must be at least 1");
  detail::check_initial(scheme, c0);
  IntegratorConfig stride_cfg;
  stride_cfg.sample_stride = sample_stride;
  const auto grid = sample_times(scheme.t_start, scheme.t_end, default_stride(scheme, stride_cfg));
  const std::size_t intervals = grid.size() - 1;
  const std::size_t per_interval = (n_steps + intervals - 1) / intervals;

  Trajectory traj;
  traj.labels = scheme.labels;
  CVector y = c0.amplitudes();
  detail::record(traj, grid.front(), y);
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(static_cast<Eigen::Index>(scheme.dimension()));
  CVector phases(y.size());
  CMatrix h(y.size(), y.size());
  for (std::size_t s = 1; s < grid.size(); ++s) {
    const double t0 = grid[s - 1];
    const double dt = (grid[s] - t0) / static_cast<double>(per_interval);
    for (std::size_t j = 0; j < per_interval; ++j) {
      const double mid = t0 + dt * (static_cast<double>(j) + 0.5);
      build_hamiltonian_into(scheme, mid, h);
      solver.compute(h);
      const auto& values = solver.eigenvalues();
      for (Eigen::Index k = 0; k < values.size(); ++k) phases[k] = std::polar(1.0, -values[k] * dt);
      const auto& vectors = solver.eigenvectors();
      y = vectors * (phases.asDiagonal() * (vectors.adjoint() * y));
      ++traj.accepted_steps;
    }
    detail::record(traj, grid[s], y);
  }
  return traj;
}

/// Integrates c' = -i H(t) c over the scheme window, sampled on a uniform grid.
inline Trajectory propagate(const DriveScheme& scheme, const StateVector& c0, const IntegratorConfig& cfg = {}) {
  cfg.validate();
  detail::check_initial(scheme, c0);
  switch (cfg.method) {
    case IntegratorMethod::Adaptive: return detail::propagate_adaptive(scheme, c0, cfg);
    case IntegratorMethod::RK4: return detail::propagate_rk4(scheme, c0, cfg);
    case IntegratorMethod::PiecewiseExponential: {
      auto traj = piecewise_exponential_propagate(scheme, c0, cfg.oracle_steps, cfg.sample_stride);
      detail::finish(traj, cfg.norm_tolerance);
      return traj;
    }
  }
  throw InvalidParameter("unknown integrator method");
}

/// Largest distance between two trajectories on a shared grid.
inline double max_state_distance(const Trajectory& a, const Trajectory& b) {
  if (a.times.size() != b.times.size()) throw InvalidInput("trajectories are sampled on different grids");
  double worst = 0.0;
  for (std::size_t i = 0; i < a.times.size(); ++i) {
    if (std::abs(a.times[i] - b.times[i]) > 1e-9 * std::max(1.0, std::abs(a.times[i])))
      throw InvalidInput("trajectories are sampled on different grids");
    worst = std::max(worst, (a.states[i] - b.states[i]).cwiseAbs().maxCoeff());
  }
  return worst;
}

}  // namespace chiral
