#pragma once

#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "chiral_switch/error.hpp"
#include "chiral_switch/propagator.hpp"
#include "chiral_switch/spectral.hpp"

namespace chiral::io {

/// Round-trip precision scientific notation.
inline std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.16e", v);
  return buf;
}

/// Column layout: t_ns, p_<label>..., then E_1..E_N when `track` is given,
/// then overlap_1..overlap_N when `overlaps` is given. Times in ns,
/// eigenvalues in rad/ns.
inline std::vector<std::string> trajectory_header(const Trajectory& traj, bool with_track, bool with_overlaps) {
  std::vector<std::string> header{"t_ns"};
  for (const auto& l : traj.labels) header.push_back("p_" + l);
  const std::size_t n = traj.labels.size();
  if (with_track)
    for (std::size_t k = 1; k <= n; ++k) header.push_back("E_" + std::to_string(k));
  if (with_overlaps)
    for (std::size_t k = 1; k <= n; ++k) header.push_back("overlap_" + std::to_string(k));
  return header;
}

inline void write_row(std::ostream& out, const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out << ',';
    out << cells[i];
  }
  out << '\n';
}

inline void write_trajectory_csv(std::ostream& out, const Trajectory& traj, const EigenTrack* track = nullptr,
                                 const std::vector<RVector>* overlaps = nullptr) {
  if (track && track->size() != traj.size()) throw InvalidInput("eigen track and trajectory grids differ");
  if (overlaps && overlaps->size() != traj.size()) throw InvalidInput("overlap and trajectory grids differ");
  write_row(out, trajectory_header(traj, track != nullptr, overlaps != nullptr));
  for (std::size_t s = 0; s < traj.size(); ++s) {
    std::vector<std::string> cells{format_number(traj.times[s])};
    for (Eigen::Index k = 0; k < traj.populations[s].size(); ++k) cells.push_back(format_number(traj.populations[s][k]));
    if (track)
      for (Eigen::Index k = 0; k < track->values[s].size(); ++k) cells.push_back(format_number(track->values[s][k]));
    if (overlaps)
      for (Eigen::Index k = 0; k < (*overlaps)[s].size(); ++k) cells.push_back(format_number((*overlaps)[s][k]));
    write_row(out, cells);
  }
}

/// t_ns, E_1..E_N.
inline void write_spectrum_csv(std::ostream& out, const EigenTrack& track) {
  std::vector<std::string> header{"t_ns"};
  for (std::size_t k = 1; k <= track.track_count(); ++k) header.push_back("E_" + std::to_string(k));
  write_row(out, header);
  for (std::size_t s = 0; s < track.size(); ++s) {
    std::vector<std::string> cells{format_number(track.times[s])};
    for (Eigen::Index k = 0; k < track.values[s].size(); ++k) cells.push_back(format_number(track.values[s][k]));
    write_row(out, cells);
  }
}

/// Writes `content` to `path` in binary mode (LF line endings).
inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw IoError("cannot open '" + path + "' for writing");
  file << content;
  file.flush();
  if (!file) throw IoError("failed writing '" + path + "'");
}

inline void emit_trajectory(const Trajectory& traj, const EigenTrack* track, const std::string& path,
                            const std::vector<RVector>* overlaps = nullptr) {
  std::ostringstream out;
  write_trajectory_csv(out, traj, track, overlaps);
  write_file(path, out.str());
}

}  // namespace chiral::io
