#pragma once

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "chiral_switch/io/config.hpp"
#include "chiral_switch/io/csv.hpp"
#include "chiral_switch/io/runner.hpp"
#include "chiral_switch/schemes.hpp"
#include "chiral_switch/spectral.hpp"

namespace chiral::io {

struct CliOverrides {
  std::string config_path;
  std::string out_path;
  std::optional<double> omega_max;
  std::optional<double> tau;
  std::optional<std::string> enantiomer;
  std::optional<double> rel_tol;
  std::optional<unsigned> workers;
  std::optional<double> gap_tol;
};

inline std::string read_file(const std::string& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw IoError("cannot read '" + path + "'");
  std::ostringstream buf;
  buf << file.rdbuf();
  return buf.str();
}

/// Config file (if any) for `command`, with command-line overrides applied.
inline RunConfig resolve_config(Command command, const CliOverrides& o) {
  RunConfig cfg;
  if (!o.config_path.empty()) {
    cfg = parse_config(read_file(o.config_path));
    if (cfg.command != command)
      throw ConfigError("config declares command " + std::string(to_string(cfg.command)) +
                            " but the subcommand is " + std::string(to_string(command)),
                        "command");
  } else {
    cfg = parse_config("command: " + std::string(to_string(command)) + "\n");
  }
  if (o.omega_max) {
    if (!(*o.omega_max > 0.0)) throw InvalidParameter("--omega-max must be positive");
    cfg.omega_max = *o.omega_max;
  }
  if (o.tau) {
    if (!(*o.tau > 0.0)) throw InvalidParameter("--tau must be positive");
    cfg.tau = *o.tau;
  }
  if (o.enantiomer) cfg.enantiomer = parse_enantiomer(*o.enantiomer);
  if (o.rel_tol) {
    if (!(*o.rel_tol > 0.0)) throw InvalidParameter("--rel-tol must be positive");
    cfg.integrator.rel_tol = *o.rel_tol;
  }
  if (o.workers) cfg.workers = *o.workers;
  if (!o.out_path.empty()) cfg.output_path = o.out_path;
  return cfg;
}

inline nlohmann::json to_json(const SwitchResult& r) {
  nlohmann::json j;
  j["excited_enantiomer"] = std::string(to_string(r.excited));
  j["target_enantiomer"] = std::string(to_string(r.target));
  j["discrimination_fidelity"] = r.discrimination_fidelity;
  j["conversion_fidelity"] = r.conversion_fidelity;
  j["enantiomeric_excess"] = r.enantiomeric_excess;
  j["max_level2_final"] = r.max_level2_final;
  j["max_excited_population"] = r.max_excited_population;
  j["norm_drift"] = r.norm_drift;
  j["initial"] = r.initial;
  j["final"] = r.final;
  return j;
}

namespace detail {

inline void deliver(const std::string& content, const std::string& path, std::ostream& out) {
  if (path.empty())
    out << content;
  else
    write_file(path, content);
}

inline void run_stage(const RunConfig& cfg, std::ostream& out) {
  const auto scheme = scheme_for(cfg);
  const auto traj = propagate(scheme, initial_state_for(cfg), cfg.integrator);
  std::optional<EigenTrack> track;
  std::optional<std::vector<RVector>> overlaps;
  if (cfg.eigenvalues || cfg.overlaps) track = instantaneous_spectrum(scheme, traj.times);
  if (cfg.overlaps) overlaps = adiabatic_overlap(traj, *track);
  std::ostringstream csv;
  write_trajectory_csv(csv, traj, cfg.eigenvalues ? &*track : nullptr, overlaps ? &*overlaps : nullptr);
  deliver(csv.str(), cfg.output_path, out);
  if (!cfg.output_path.empty()) {
    out << "final";
    for (std::size_t k = 0; k < traj.labels.size(); ++k)
      out << ' ' << traj.labels[k] << '=' << traj.final_populations()[static_cast<Eigen::Index>(k)];
    out << "\nnorm_drift " << traj.norm_drift << '\n';
  }
}

inline void run_spectrum(const RunConfig& cfg, std::optional<double> gap_tol, std::ostream& out, std::ostream& err) {
  const auto scheme = scheme_for(cfg);
  const auto times = sample_times(scheme.t_start, scheme.t_end, default_stride(scheme, cfg.integrator));
  const auto track = instantaneous_spectrum(scheme, times);
  const auto crossings = detect_crossings(track, gap_tol.value_or(0.05 * cfg.omega_max), spectrum_function(scheme));
  std::ostringstream csv;
  write_spectrum_csv(csv, track);
  deliver(csv.str(), cfg.output_path, out);
  // crossings go to the diagnostic stream when the CSV occupies stdout
  std::ostream& log = cfg.output_path.empty() ? err : out;
  for (const auto& c : crossings)
    log << "crossing t_ns=" << format_number(c.time) << " tracks=E_" << c.track_a + 1 << "/E_" << c.track_b + 1
        << " min_gap=" << format_number(c.min_gap) << '\n';
}

}  // namespace detail

/// Command-line entry point. Errors are reported as a single line
/// "error: <kind>: <message>" on `err`; the return value is the exit code.
inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Two-step enantio-selective switch simulator"};
  app.require_subcommand(1);
  app.fallthrough();
  CliOverrides o;
  app.add_option("--config", o.config_path, "YAML/JSON run configuration");
  app.add_option("--out", o.out_path, "Output file (stdout when omitted)");
  app.add_option("--omega-max", o.omega_max, "Peak Rabi frequency, rad/ns");
  app.add_option("--tau", o.tau, "Pulse width, ns");
  app.add_option("--enantiomer", o.enantiomer, "L or D")->check(CLI::IsMember({"L", "D"}));
  app.add_option("--rel-tol", o.rel_tol, "Adaptive integrator relative tolerance");
  app.add_option("--workers", o.workers, "Sweep worker threads (default: CHIRAL_SWITCH_WORKERS or hardware)");
  app.add_option("--gap-tol", o.gap_tol, "Crossing gap tolerance for spectrum, rad/ns");

  auto* disc = app.add_subcommand("discriminator", "Three-level discriminator trajectory (CSV)");
  auto* conv = app.add_subcommand("converter", "Six-level converter trajectory (CSV)");
  auto* two = app.add_subcommand("two-step", "Discriminator + converter on a racemic pair (JSON)");
  auto* spectrum_cmd = app.add_subcommand("spectrum", "Instantaneous eigenvalue tracks and crossings (CSV)");
  auto* sweep = app.add_subcommand("sweep", "Parameter sweep summary (CSV)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: usage: " << e.what() << '\n';
    return 2;
  }

  try {
    Command command = Command::Discriminator;
    if (disc->parsed()) command = Command::Discriminator;
    else if (conv->parsed()) command = Command::Converter;
    else if (two->parsed()) command = Command::TwoStep;
    else if (spectrum_cmd->parsed()) command = Command::Spectrum;
    else if (sweep->parsed()) command = Command::Sweep;
    const RunConfig cfg = resolve_config(command, o);

    switch (command) {
      case Command::Discriminator:
      case Command::Converter: detail::run_stage(cfg, out); break;
      case Command::Spectrum: detail::run_spectrum(cfg, o.gap_tol, out, err); break;
      case Command::TwoStep: {
        const auto result = run_two_step(cfg.omega_max, cfg.tau, cfg.converter_omega_max, cfg.converter_tau,
                                         cfg.integrator, cfg.sign_config, cfg.prefactors);
        detail::deliver(to_json(result).dump(2) + "\n", cfg.output_path, out);
        break;
      }
      case Command::Sweep: {
        std::ostringstream csv;
        write_sweep_csv(csv, run_sweep(cfg));
        detail::deliver(csv.str(), cfg.output_path, out);
        break;
      }
    }
  } catch (const Error& e) {
    err << "error: " << e.kind() << ": " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: internal: " << e.what() << '\n';
    return 3;
  }
  return 0;
}

}  // namespace chiral::io
