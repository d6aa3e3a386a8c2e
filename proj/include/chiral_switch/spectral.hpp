#pragma once

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

#include "chiral_switch/error.hpp"
#include "chiral_switch/propagator.hpp"
#include "chiral_switch/scheme.hpp"
#include "chiral_switch/state.hpp"

namespace chiral {

/// Instantaneous eigenpairs of H(t) organised into continuous tracks.
/// `values[n][k]` and column k of `vectors[n]` belong to track k at times[n].
/// Tracks are numbered by ascending eigenvalue at the first sample.
struct EigenTrack {
  std::vector<double> times;
  std::vector<RVector> values;
  std::vector<CMatrix> vectors;
  /// Samples whose matching fell back to value continuity.
  std::vector<std::size_t> ambiguous_samples;

  [[nodiscard]] std::size_t size() const noexcept { return times.size(); }
  [[nodiscard]] std::size_t track_count() const { return values.empty() ? 0 : static_cast<std::size_t>(values.front().size()); }
  [[nodiscard]] double value(std::size_t sample, std::size_t track) const {
    return values.at(sample)[static_cast<Eigen::Index>(track)];
  }
};

namespace detail {

inline constexpr double kAmbiguityTolerance = 1e-6;

/// Groups indices of an ascending spectrum into runs whose neighbours differ by < tol.
inline std::vector<std::vector<Eigen::Index>> degenerate_clusters(const RVector& ascending, double tol) {
  std::vector<std::vector<Eigen::Index>> clusters;
  for (Eigen::Index k = 0; k < ascending.size(); ++k) {
    if (clusters.empty() || ascending[k] - ascending[k - 1] >= tol) clusters.emplace_back();
    clusters.back().push_back(k);
  }
  return clusters;
}

/// Best one-to-one assignment track -> slot under `score` (maximised), with the
/// runner-up score. Exhaustive for the small dimensions used here.
template <typename Score>
std::pair<std::vector<std::size_t>, double> best_assignment(std::size_t n, Score&& score, double* runner_up) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<std::size_t> best = perm;
  double best_score = -std::numeric_limits<double>::infinity();
  double second = -std::numeric_limits<double>::infinity();
  do {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += score(j, perm[j]);
    if (s > best_score) {
      second = best_score;
      best_score = s;
      best = perm;
    } else if (s > second) {
      second = s;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  if (runner_up) *runner_up = second;
  return {best, best_score};
}

/// Eigenpairs of the Hermitian matrix `h`, ascending.
inline std::pair<RVector, CMatrix> hermitian_eigen(const CMatrix& h) {
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(h);
  if (solver.info() != Eigen::Success) throw InvalidInput("eigen decomposition failed");
  return {solver.eigenvalues(), solver.eigenvectors()};
}

}  // namespace detail

/// Eigen-decomposes H(t) at each of `times` and links eigenpairs across samples
/// by maximal eigenvector overlap, so exact crossings appear as intersecting
/// tracks. Within an exactly degenerate cluster the basis is rotated onto the
/// previous vectors. When two assignments score within 1e-6 the sample is
/// flagged and matched by linear extrapolation of the values instead.
/// Eigenvector phases follow Re<v(t_n)|v(t_n+1)> >= 0.
inline EigenTrack instantaneous_spectrum(const DriveScheme& scheme, const std::vector<double>& times) {
  scheme.validate();
  EigenTrack track;
  if (times.empty()) return track;
  const double slack = 1e-9 * std::max(1.0, scheme.t_end - scheme.t_start);
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] < scheme.t_start - slack || times[i] > scheme.t_end + slack)
      throw InvalidInput("spectrum time outside the scheme window");
    if (i > 0 && !(times[i] > times[i - 1])) throw InvalidInput("spectrum times must be strictly increasing");
  }
  const std::size_t n = scheme.dimension();
  const auto ni = static_cast<Eigen::Index>(n);

  for (std::size_t s = 0; s < times.size(); ++s) {
    const CMatrix h = build_hamiltonian(scheme, times[s]);
    auto [values, vectors] = detail::hermitian_eigen(h);
    if (s == 0) {
      track.times.push_back(times[s]);
      track.values.push_back(values);
      track.vectors.push_back(vectors);
      continue;
    }
    const CMatrix& prev = track.vectors.back();
    const double scale = std::max(1.0, values.cwiseAbs().maxCoeff());
    const auto clusters = detail::degenerate_clusters(values, 1e-9 * scale);
    std::vector<std::size_t> cluster_of(n);
    for (std::size_t c = 0; c < clusters.size(); ++c)
      for (auto k : clusters[c]) cluster_of[static_cast<std::size_t>(k)] = c;

    // weight(j, k): squared projection of previous track j onto the cluster of slot k
    Eigen::MatrixXd weight(ni, ni);
    for (Eigen::Index j = 0; j < ni; ++j) {
      std::vector<double> per_cluster(clusters.size(), 0.0);
      for (Eigen::Index k = 0; k < ni; ++k)
        per_cluster[cluster_of[static_cast<std::size_t>(k)]] += std::norm(vectors.col(k).dot(prev.col(j)));
      for (Eigen::Index k = 0; k < ni; ++k) weight(j, k) = per_cluster[cluster_of[static_cast<std::size_t>(k)]];
    }
    double runner_up = 0.0;
    auto [assign, best] = detail::best_assignment(
        n, [&](std::size_t j, std::size_t k) { return weight(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)); },
        &runner_up);

    // A tie that only permutes slots inside one degenerate cluster is harmless.
    bool ambiguous = false;
    if (best - runner_up < detail::kAmbiguityTolerance && clusters.size() > 1) {
      // look for a near-optimal assignment that moves a track to another cluster
      std::vector<std::size_t> perm(n);
      std::iota(perm.begin(), perm.end(), 0);
      do {
        double sc = 0.0;
        bool differs = false;
        for (std::size_t j = 0; j < n; ++j) {
          sc += weight(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(perm[j]));
          if (cluster_of[perm[j]] != cluster_of[assign[j]]) differs = true;
        }
        if (differs && best - sc < detail::kAmbiguityTolerance) {
          ambiguous = true;
          break;
        }
      } while (std::next_permutation(perm.begin(), perm.end()));
    }
    if (ambiguous) {
      track.ambiguous_samples.push_back(s);
      const auto& last = track.values.back();
      const bool have_two = track.values.size() >= 2;
      const double dt_last = have_two ? track.times.back() - track.times[track.times.size() - 2] : 1.0;
      std::vector<double> predicted(n);
      for (std::size_t j = 0; j < n; ++j) {
        const auto jj = static_cast<Eigen::Index>(j);
        const double slope = have_two ? (last[jj] - track.values[track.values.size() - 2][jj]) / dt_last : 0.0;
        predicted[j] = last[jj] + slope * (times[s] - track.times.back());
      }
      assign = detail::best_assignment(
                   n,
                   [&](std::size_t j, std::size_t k) {
                     return -std::abs(values[static_cast<Eigen::Index>(k)] - predicted[j]);
                   },
                   nullptr)
                   .first;
    }

    RVector new_values(ni);
    CMatrix new_vectors(ni, ni);
    for (std::size_t j = 0; j < n; ++j) {
      new_values[static_cast<Eigen::Index>(j)] = values[static_cast<Eigen::Index>(assign[j])];
      new_vectors.col(static_cast<Eigen::Index>(j)) = vectors.col(static_cast<Eigen::Index>(assign[j]));
    }
    // rotate each degenerate cluster onto the tracks it received (orthogonal Procrustes)
    for (const auto& cluster : clusters) {
      if (cluster.size() < 2) continue;
      std::vector<Eigen::Index> members;
      for (std::size_t j = 0; j < n; ++j)
        if (cluster_of[assign[j]] == cluster_of[static_cast<std::size_t>(cluster.front())])
          members.push_back(static_cast<Eigen::Index>(j));
      const auto k = static_cast<Eigen::Index>(members.size());
      CMatrix basis(ni, k), target(ni, k);
      for (Eigen::Index m = 0; m < k; ++m) {
        basis.col(m) = new_vectors.col(members[static_cast<std::size_t>(m)]);
        target.col(m) = prev.col(members[static_cast<std::size_t>(m)]);
      }
      Eigen::JacobiSVD<CMatrix> svd(basis.adjoint() * target, Eigen::ComputeFullU | Eigen::ComputeFullV);
      const CMatrix aligned = basis * (svd.matrixU() * svd.matrixV().adjoint());
      for (Eigen::Index m = 0; m < k; ++m) new_vectors.col(members[static_cast<std::size_t>(m)]) = aligned.col(m);
    }
    for (Eigen::Index j = 0; j < ni; ++j) {
      const Complex overlap = prev.col(j).dot(new_vectors.col(j));
      if (std::abs(overlap) > 0.0) new_vectors.col(j) *= std::conj(overlap) / std::abs(overlap);
    }
    track.times.push_back(times[s]);
    track.values.push_back(std::move(new_values));
    track.vectors.push_back(std::move(new_vectors));
  }
  return track;
}

/// Same eigenpairs re-ordered by ascending value at every sample.
inline EigenTrack sorted_view(const EigenTrack& track) {
  EigenTrack out;
  out.times = track.times;
  out.ambiguous_samples = track.ambiguous_samples;
  for (std::size_t s = 0; s < track.size(); ++s) {
    const auto& v = track.values[s];
    std::vector<Eigen::Index> order(static_cast<std::size_t>(v.size()));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return v[a] < v[b]; });
    RVector values(v.size());
    CMatrix vectors(track.vectors[s].rows(), v.size());
    for (std::size_t k = 0; k < order.size(); ++k) {
      values[static_cast<Eigen::Index>(k)] = v[order[k]];
      vectors.col(static_cast<Eigen::Index>(k)) = track.vectors[s].col(order[k]);
    }
    out.values.push_back(std::move(values));
    out.vectors.push_back(std::move(vectors));
  }
  return out;
}

struct Crossing {
  double time = 0.0;          // ns
  std::size_t track_a = 0;    // lower track index
  std::size_t track_b = 0;
  double min_gap = 0.0;       // rad/ns
};

/// Ascending spectrum of H at a time; lets detect_crossings refine brackets.
using SpectrumFunction = std::function<RVector(double)>;

inline SpectrumFunction spectrum_function(const DriveScheme& scheme) {
  return [scheme](double t) { return detail::hermitian_eigen(build_hamiltonian(scheme, t)).first; };
}

namespace detail {

// Minimises the gap between ascending eigenvalues rank and rank+1 over
// [lo, hi] by bisecting on the sign of a centred slope.
inline std::pair<double, double> refine_gap(const SpectrumFunction& spectrum, std::size_t rank, double lo,
                                            double hi, double resolution) {
  auto gap = [&](double t) {
    const RVector v = spectrum(t);
    return v[static_cast<Eigen::Index>(rank + 1)] - v[static_cast<Eigen::Index>(rank)];
  };
  while (hi - lo > resolution) {
    const double mid = 0.5 * (lo + hi);
    const double delta = 0.25 * resolution;
    if (gap(mid - delta) < gap(mid + delta))
      hi = mid + delta;
    else
      lo = mid - delta;
  }
  const double t = 0.5 * (lo + hi);
  return {t, gap(t)};
}

}  // namespace detail

/// Finds degeneracies between pairs of tracks. A crossing is a stretch of
/// samples where the pair's gap stays below `gap_tol`, bounded on both sides
/// by samples at or above `gap_tol` (pairs that are degenerate up to the
/// window edge are not reported). The time is the point of minimum gap:
/// refined by bisection to `resolution` ns when `spectrum` is given, else
/// from the sign change of the track difference or the smallest sampled gap.
inline std::vector<Crossing> detect_crossings(const EigenTrack& track, double gap_tol,
                                              const SpectrumFunction& spectrum = {}, double resolution = 1e-3) {
  if (!(gap_tol > 0.0)) throw InvalidParameter("gap tolerance must be positive");
  std::vector<Crossing> found;
  const std::size_t samples = track.size();
  const std::size_t tracks = track.track_count();
  if (samples < 3) return found;
  for (std::size_t a = 0; a < tracks; ++a) {
    for (std::size_t b = a + 1; b < tracks; ++b) {
      auto diff = [&](std::size_t s) { return track.value(s, a) - track.value(s, b); };
      std::size_t s = 0;
      while (s < samples) {
        if (std::abs(diff(s)) >= gap_tol) {
          ++s;
          continue;
        }
        const std::size_t begin = s;
        while (s < samples && std::abs(diff(s)) < gap_tol) ++s;
        const std::size_t end = s;  // one past the region
        if (begin == 0 || end == samples) continue;

        std::size_t best = begin;
        for (std::size_t k = begin; k < end; ++k)
          if (std::abs(diff(k)) < std::abs(diff(best))) best = k;
        Crossing crossing{track.times[best], a, b, std::abs(diff(best))};
        // a sign change inside the region marks an intersection
        for (std::size_t k = begin - 1; k < end; ++k) {
          const double d0 = diff(k), d1 = diff(k + 1);
          if (d0 * d1 <= 0.0 && d0 != d1) {
            const double frac = d0 / (d0 - d1);
            crossing.time = track.times[k] + frac * (track.times[k + 1] - track.times[k]);
            crossing.min_gap = 0.0;
            best = std::abs(d0) < std::abs(d1) ? k : k + 1;
            break;
          }
        }
        if (spectrum) {
          const double lo = track.times[std::max<std::size_t>(best, 1) - 1];
          const double hi = track.times[std::min(best + 1, samples - 1)];
          // rank of the lower member in the ascending spectrum at the best sample
          const double lower = std::min(track.value(best, a), track.value(best, b));
          std::size_t rank = 0;
          for (std::size_t k = 0; k < tracks; ++k)
            if (k != a && k != b && track.value(best, k) < lower) ++rank;
          const auto [t, gap] = detail::refine_gap(spectrum, rank, lo, hi, resolution);
          crossing.time = t;
          crossing.min_gap = gap;
        }
        if (crossing.min_gap < gap_tol) found.push_back(crossing);
      }
    }
  }
  std::sort(found.begin(), found.end(), [](const Crossing& x, const Crossing& y) { return x.time < y.time; });
  return found;
}

/// |<E_k(t)|psi(t)>|^2 per sample (rows) and track (columns).
inline std::vector<RVector> adiabatic_overlap(const Trajectory& traj, const EigenTrack& track) {
  if (traj.size() != track.size()) throw InvalidInput("trajectory and eigen track use different time grids");
  std::vector<RVector> out;
  out.reserve(traj.size());
  for (std::size_t s = 0; s < traj.size(); ++s) {
    if (std::abs(traj.times[s] - track.times[s]) > 1e-9 * std::max(1.0, std::abs(traj.times[s])))
      throw InvalidInput("trajectory and eigen track use different time grids");
    if (track.vectors[s].rows() != traj.states[s].size())
      throw InvalidInput("trajectory and eigen track have different dimensions");
    out.push_back((track.vectors[s].adjoint() * traj.states[s]).cwiseAbs2());
  }
  return out;
}

/// Orthonormal basis of the null space of H(t).
struct DarkBasis {
  double time = 0.0;
  std::vector<CVector> basis;
  std::vector<double> residuals;  // ||H v||
  double hamiltonian_norm = 0.0;  // spectral norm of H(t)
  /// H vanished identically: the whole space is reported as null.
  bool degenerate_input = false;

  [[nodiscard]] std::size_t dimension() const noexcept { return basis.size(); }

  /// Orthogonal projector onto the null space.
  [[nodiscard]] CMatrix projector() const {
    const auto n = basis.empty() ? 0 : basis.front().size();
    CMatrix p = CMatrix::Zero(n, n);
    for (const auto& v : basis) p += v * v.adjoint();
    return p;
  }
};

/// Null space of a Hermitian matrix by thresholding |eigenvalue| (its
/// singular values) at 1e-10 of the largest.
inline DarkBasis null_space(const CMatrix& h, double time = 0.0) {
  DarkBasis out;
  out.time = time;
  const auto [values, vectors] = detail::hermitian_eigen(h);
  const double largest = values.cwiseAbs().maxCoeff();
  out.hamiltonian_norm = largest;
  if (largest == 0.0) {
    out.degenerate_input = true;
    for (Eigen::Index k = 0; k < h.rows(); ++k) {
      out.basis.push_back(CVector::Unit(h.rows(), k));
      out.residuals.push_back(0.0);
    }
    return out;
  }
  for (Eigen::Index k = 0; k < values.size(); ++k) {
    if (std::abs(values[k]) < 1e-10 * largest) {
      CVector v = vectors.col(k);
      out.residuals.push_back((h * v).norm());
      out.basis.push_back(std::move(v));
    }
  }
  return out;
}

/// Dark (zero-eigenvalue) states of the converter Hamiltonian at t.
inline DarkBasis dark_states(const DriveScheme& scheme, double t) {
  return null_space(build_converter_hamiltonian(scheme, t), t);
}

/// <psi(t)| P_dark(t) |psi(t)> per trajectory sample.
inline std::vector<double> dark_population(const DriveScheme& scheme, const Trajectory& traj) {
  std::vector<double> out;
  out.reserve(traj.size());
  for (std::size_t s = 0; s < traj.size(); ++s) {
    const auto dark = null_space(build_hamiltonian(scheme, traj.times[s]), traj.times[s]);
    double weight = 0.0;
    for (const auto& v : dark.basis) weight += std::norm(v.dot(traj.states[s]));
    out.push_back(weight);
  }
  return out;
}

/// The closed-form converter dark-state candidates
///   c1 = (-d+, -d-, 0, 0, 2 W35S, 0),  c2 = (-d-, -d+, 0, 0, 0, 2 W35S),
/// with d+- = W45S +- r W45A and r = W35S / W35A. They annihilate H only
/// when W45S = r W45A; use `relative_residual` to check a given point.
inline std::pair<CVector, CVector> closed_form_dark_candidates(Complex w35s, Complex w35a, Complex w45s,
                                                               Complex w45a) {
  if (w35a == Complex(0.0)) throw InvalidParameter("closed-form dark states need a nonzero 3,5A drive");
  const Complex r = w35s / w35a;
  const Complex d_plus = w45s + r * w45a;
  const Complex d_minus = w45s - r * w45a;
  CVector c1(6), c2(6);
  c1 << -d_plus, -d_minus, 0.0, 0.0, 2.0 * w35s, 0.0;
  c2 << -d_minus, -d_plus, 0.0, 0.0, 0.0, 2.0 * w35s;
  return {c1, c2};
}

/// ||H v|| / (||H|| ||v||) with the spectral norm.
inline double relative_residual(const CMatrix& h, const CVector& v) {
  const double hn = detail::hermitian_eigen(h).first.cwiseAbs().maxCoeff();
  const double vn = v.norm();
  if (hn == 0.0 || vn == 0.0) return 0.0;
  return (h * v).norm() / (hn * vn);
}

}  // namespace chiral
