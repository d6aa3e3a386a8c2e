#pragma once

#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "chiral_switch/io/config.hpp"
#include "chiral_switch/io/csv.hpp"
#include "chiral_switch/propagator.hpp"
#include "chiral_switch/schemes.hpp"
#include "chiral_switch/spectral.hpp"

namespace chiral::io {

/// The scheme a config describes for its stage.
inline DriveScheme scheme_for(const RunConfig& cfg) {
  if (cfg.stage == Stage::Converter) return make_converter(cfg.omega_max, cfg.tau, cfg.sign_config, cfg.prefactors);
  auto scheme = make_discriminator(cfg.omega_max, cfg.tau, cfg.enantiomer);
  return cfg.phi ? with_loop_phase(std::move(scheme), *cfg.phi) : scheme;
}

/// |1> for the discriminator; |3>_L or |3>_D (by enantiomer) for the converter.
inline StateVector initial_state_for(const RunConfig& cfg) {
  if (cfg.stage == Stage::Converter)
    return StateVector::basis(cfg.enantiomer == Enantiomer::L ? 0 : 1, converter_labels());
  return StateVector::basis(0, discriminator_labels());
}

/// Converter endpoint for a run entering at |3>_entry: the symmetry is flipped
/// when r and r' have opposite signs, preserved otherwise.
inline std::string expected_converter_endpoint(const DriveScheme& converter, Enantiomer entry) {
  const auto [r, r_prime] = converter_ratios(converter);
  const bool flips = r * r_prime < 0.0;
  return "4" + std::string(to_string(flips ? opposite(entry) : entry));
}

/// Pair fidelity of the discriminator: the larger of p1, p3 for each member,
/// minimised over the pair, provided the members end on different levels.
inline double discrimination_fidelity(const RVector& a, const RVector& b) {
  const bool a_on_3 = a[2] > a[0];
  const bool b_on_3 = b[2] > b[0];
  if (a_on_3 == b_on_3) return 0.0;
  return std::min(std::max(a[0], a[2]), std::max(b[0], b[2]));
}

struct SweepRow {
  std::size_t index = 0;
  double value = 0.0;
  RVector final_populations;
  double fidelity = std::numeric_limits<double>::quiet_NaN();
  double norm_drift = std::numeric_limits<double>::quiet_NaN();
  std::string status = "ok";
};

struct SweepResult {
  SweepAxis axis = SweepAxis::Phi;
  std::vector<std::string> labels;
  std::vector<SweepRow> rows;
};

/// Config of one sweep point.
inline RunConfig sweep_point_config(const RunConfig& cfg, double value) {
  RunConfig point = cfg;
  point.sweep.reset();
  switch (cfg.sweep->axis) {
    case SweepAxis::Phi: point.phi = value; break;
    case SweepAxis::OmegaMax: point.omega_max = value; break;
    case SweepAxis::Tau: point.tau = value; break;
    case SweepAxis::RPrefactor: point.prefactors.pump_a *= value; break;
    case SweepAxis::RPrimePrefactor: point.prefactors.dump_a *= value; break;
  }
  return point;
}

/// Evaluates one sweep point; discriminator points also run the mirror
/// enantiomer to score the pair.
inline SweepRow run_sweep_point(const RunConfig& cfg, std::size_t index, double value) {
  SweepRow row;
  row.index = index;
  row.value = value;
  try {
    const RunConfig point = sweep_point_config(cfg, value);
    const auto scheme = scheme_for(point);
    const auto traj = propagate(scheme, initial_state_for(point), point.integrator);
    row.final_populations = traj.final_populations();
    row.norm_drift = traj.norm_drift;
    if (point.stage == Stage::Discriminator) {
      const auto mirror = propagate(enantiomer_flip(scheme), initial_state_for(point), point.integrator);
      row.fidelity = discrimination_fidelity(row.final_populations, mirror.final_populations());
      row.norm_drift = std::max(row.norm_drift, mirror.norm_drift);
    } else {
      row.fidelity = traj.population(traj.size() - 1, expected_converter_endpoint(scheme, point.enantiomer));
    }
  } catch (const Error& e) {
    row.status = "error: " + e.kind() + ": " + e.what();
  } catch (const std::exception& e) {
    row.status = std::string("error: internal: ") + e.what();
  }
  return row;
}

/// Runs every sweep point, in parallel over `workers` threads. Rows come back
/// in sweep order; a failed point is recorded in its row and the rest continue.
inline SweepResult run_sweep(const RunConfig& cfg) {
  if (cfg.command != Command::Sweep || !cfg.sweep) throw InvalidInput("run_sweep needs a sweep configuration");
  const auto points = cfg.sweep->points();
  SweepResult result;
  result.axis = cfg.sweep->axis;
  result.labels = cfg.stage == Stage::Converter ? converter_labels() : discriminator_labels();
  result.rows.resize(points.size());

  const unsigned workers = std::min<unsigned>(resolve_workers(cfg.workers), static_cast<unsigned>(points.size()));
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < points.size(); i = next++) result.rows[i] = run_sweep_point(cfg, i, points[i]);
  };
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  return result;
}

/// index, <axis>, p_<label>..., fidelity, norm_drift, status
inline void write_sweep_csv(std::ostream& out, const SweepResult& sweep) {
  std::vector<std::string> header{"index", std::string(to_string(sweep.axis))};
  for (const auto& l : sweep.labels) header.push_back("p_" + l);
  header.insert(header.end(), {"fidelity", "norm_drift", "status"});
  write_row(out, header);
  for (const auto& row : sweep.rows) {
    std::vector<std::string> cells{std::to_string(row.index), format_number(row.value)};
    for (std::size_t k = 0; k < sweep.labels.size(); ++k)
      cells.push_back(row.final_populations.size() == static_cast<Eigen::Index>(sweep.labels.size())
                          ? format_number(row.final_populations[static_cast<Eigen::Index>(k)])
                          : "nan");
    cells.push_back(std::isnan(row.fidelity) ? "nan" : format_number(row.fidelity));
    cells.push_back(std::isnan(row.norm_drift) ? "nan" : format_number(row.norm_drift));
    std::string status = row.status;
    for (auto& ch : status)
      if (ch == ',' || ch == '\n') ch = ';';
    cells.push_back(status);
    write_row(out, cells);
  }
}

inline void emit_sweep(const SweepResult& sweep, const std::string& path) {
  std::ostringstream out;
  write_sweep_csv(out, sweep);
  write_file(path, out.str());
}

}  // namespace chiral::io
