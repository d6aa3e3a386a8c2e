#pragma once

#include <yaml-cpp/yaml.h>

#include <cmath>
#include <cstdlib>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "chiral_switch/error.hpp"
#include "chiral_switch/propagator.hpp"
#include "chiral_switch/scheme.hpp"
#include "chiral_switch/schemes.hpp"

namespace chiral::io {

enum class Command { Discriminator, Converter, TwoStep, Spectrum, Sweep };
enum class Stage { Discriminator, Converter };
enum class SweepAxis { Phi, OmegaMax, Tau, RPrefactor, RPrimePrefactor };

inline std::string_view to_string(Command c) {
  switch (c) {
    case Command::Discriminator: return "discriminator";
    case Command::Converter: return "converter";
    case Command::TwoStep: return "two-step";
    case Command::Spectrum: return "spectrum";
    case Command::Sweep: return "sweep";
  }
  return "discriminator";
}

inline std::optional<Command> parse_command(std::string_view s) {
  for (auto c : {Command::Discriminator, Command::Converter, Command::TwoStep, Command::Spectrum, Command::Sweep})
    if (to_string(c) == s) return c;
  return std::nullopt;
}

inline std::string_view to_string(Stage s) { return s == Stage::Discriminator ? "discriminator" : "converter"; }

inline std::string_view to_string(SweepAxis a) {
  switch (a) {
    case SweepAxis::Phi: return "phi";
    case SweepAxis::OmegaMax: return "omega_max";
    case SweepAxis::Tau: return "tau";
    case SweepAxis::RPrefactor: return "r_prefactor";
    case SweepAxis::RPrimePrefactor: return "r_prime_prefactor";
  }
  return "phi";
}

inline std::optional<SweepAxis> parse_axis(std::string_view s) {
  for (auto a : {SweepAxis::Phi, SweepAxis::OmegaMax, SweepAxis::Tau, SweepAxis::RPrefactor,
                 SweepAxis::RPrimePrefactor})
    if (to_string(a) == s) return a;
  return std::nullopt;
}

/// Sweep points: `values` when given, else `count` points from `from` to `to`
/// inclusive. Prefactor axes are multipliers of the configured prefactor.
struct SweepRange {
  SweepAxis axis = SweepAxis::Phi;
  double from = 0.0;
  double to = 0.0;
  std::size_t count = 1;
  std::vector<double> values;

  [[nodiscard]] std::vector<double> points() const {
    if (!values.empty()) return values;
    std::vector<double> out(count);
    for (std::size_t i = 0; i < count; ++i)
      out[i] = count == 1 ? from : from + (to - from) * static_cast<double>(i) / static_cast<double>(count - 1);
    return out;
  }

  bool operator==(const SweepRange&) const = default;
};

/// Fully resolved run description. `omega_max`/`tau` belong to `stage`
/// (the discriminator for two-step runs, whose converter uses
/// `converter_omega_max`/`converter_tau`).
struct RunConfig {
  Command command = Command::Discriminator;
  Stage stage = Stage::Discriminator;
  double omega_max = 1.0;  // rad/ns
  double tau = 12.0;       // ns
  Enantiomer enantiomer = Enantiomer::L;
  std::optional<double> phi;  // loop phase override, rad
  SignConfig sign_config;
  ConverterPrefactors prefactors;
  double converter_omega_max = 30.0;
  double converter_tau = 3.0;
  IntegratorConfig integrator;
  std::string output_path;
  bool eigenvalues = true;
  bool overlaps = false;
  std::optional<SweepRange> sweep;
  unsigned workers = 0;  // 0: CHIRAL_SWITCH_WORKERS or hardware concurrency

  bool operator==(const RunConfig&) const = default;
};

inline constexpr double kDefaultDiscriminatorOmega = 1.0;
inline constexpr double kDefaultDiscriminatorTau = 12.0;
inline constexpr double kDefaultConverterOmega = 30.0;
inline constexpr double kDefaultConverterTau = 3.0;

namespace detail {

inline ConfigError semantic(const std::string& key, const YAML::Node& node, const std::string& what) {
  const auto mark = node.Mark();
  return {what, key, mark.is_null() ? 0 : mark.line + 1, mark.is_null() ? 0 : mark.column + 1};
}

template <typename T>
T scalar(const YAML::Node& node, const std::string& key) {
  if (!node.IsScalar()) throw semantic(key, node, "expected a scalar value");
  try {
    return node.as<T>();
  } catch (const YAML::BadConversion&) {
    throw semantic(key, node, "value '" + node.Scalar() + "' has the wrong type");
  }
}

inline double finite(const YAML::Node& node, const std::string& key) {
  const auto v = scalar<double>(node, key);
  if (!std::isfinite(v)) throw semantic(key, node, "value must be finite");
  return v;
}

inline double positive(const YAML::Node& node, const std::string& key) {
  const auto v = finite(node, key);
  if (!(v > 0.0)) throw semantic(key, node, "value must be positive");
  return v;
}

inline int sign(const YAML::Node& node, const std::string& key) {
  const auto v = scalar<int>(node, key);
  if (v != 1 && v != -1) throw semantic(key, node, "sign must be +1 or -1");
  return v;
}

inline void reject_unknown(const YAML::Node& map, const std::set<std::string>& allowed, const std::string& prefix) {
  for (const auto& item : map) {
    const auto key = item.first.as<std::string>();
    if (!allowed.contains(key)) throw semantic(prefix + key, item.first, "unknown key");
  }
}

inline YAML::Node map_node(const YAML::Node& node, const std::string& key) {
  if (!node.IsMap()) throw semantic(key, node, "expected a mapping");
  return node;
}

}  // namespace detail

/// Parses the YAML (JSON-compatible) run description, applies stage defaults
/// and validates it. Unknown keys are rejected.
inline RunConfig parse_config(std::string_view text) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(text));
  } catch (const YAML::ParserException& e) {
    throw ConfigError(e.msg, {}, e.mark.line + 1, e.mark.column + 1);
  }
  if (root.IsNull()) throw ConfigError("configuration is empty", {}, 1, 1);
  if (!root.IsMap()) throw ConfigError("configuration must be a mapping", {}, root.Mark().line + 1, root.Mark().column + 1);
  using namespace detail;
  reject_unknown(root,
                 {"command", "stage", "omega_max", "tau", "enantiomer", "phi", "sign_config", "prefactors",
                  "converter_omega_max", "converter_tau", "integrator", "output", "axis", "from", "to", "count",
                  "values", "workers"},
                 "");

  RunConfig cfg;
  if (!root["command"]) throw ConfigError("missing required key", "command");
  {
    const auto text_cmd = scalar<std::string>(root["command"], "command");
    const auto cmd = parse_command(text_cmd);
    if (!cmd) throw semantic("command", root["command"], "unknown command '" + text_cmd + "'");
    cfg.command = *cmd;
  }

  const bool sweep_keys = root["axis"] || root["from"] || root["to"] || root["count"] || root["values"];
  if (cfg.command == Command::Sweep) {
    if (!root["axis"]) throw ConfigError("sweep needs an axis", "axis");
    SweepRange sweep;
    const auto axis_text = scalar<std::string>(root["axis"], "axis");
    const auto axis = parse_axis(axis_text);
    if (!axis) throw semantic("axis", root["axis"], "unknown sweep axis '" + axis_text + "'");
    sweep.axis = *axis;
    if (root["values"]) {
      if (!root["values"].IsSequence() || root["values"].size() == 0)
        throw semantic("values", root["values"], "expected a non-empty list");
      for (const auto& v : root["values"]) sweep.values.push_back(finite(v, "values"));
      if (root["from"] || root["to"] || root["count"])
        throw semantic("values", root["values"], "give either values or from/to/count");
      sweep.count = sweep.values.size();
      sweep.from = sweep.values.front();
      sweep.to = sweep.values.back();
    } else {
      if (!root["from"] || !root["to"]) throw ConfigError("sweep needs from and to", "from");
      sweep.from = finite(root["from"], "from");
      sweep.to = finite(root["to"], "to");
      sweep.count = 1;
      if (root["count"]) {
        const auto count = scalar<long long>(root["count"], "count");
        if (count < 1) throw semantic("count", root["count"], "sweep count must be at least 1");
        sweep.count = static_cast<std::size_t>(count);
      }
    }
    cfg.sweep = sweep;
  } else if (sweep_keys) {
    const char* key = root["axis"] ? "axis" : root["from"] ? "from" : root["to"] ? "to" : root["count"] ? "count" : "values";
    throw semantic(key, root[key], "sweep keys are only valid with command: sweep");
  }

  // stage
  switch (cfg.command) {
    case Command::Converter: cfg.stage = Stage::Converter; break;
    case Command::Discriminator:
    case Command::TwoStep: cfg.stage = Stage::Discriminator; break;
    case Command::Spectrum: cfg.stage = Stage::Discriminator; break;
    case Command::Sweep:
      cfg.stage = (cfg.sweep->axis == SweepAxis::RPrefactor || cfg.sweep->axis == SweepAxis::RPrimePrefactor)
                      ? Stage::Converter
                      : Stage::Discriminator;
      break;
  }
  if (root["stage"]) {
    const auto s = scalar<std::string>(root["stage"], "stage");
    Stage stage;
    if (s == "discriminator") stage = Stage::Discriminator;
    else if (s == "converter") stage = Stage::Converter;
    else throw semantic("stage", root["stage"], "stage must be discriminator or converter");
    const bool free_stage = cfg.command == Command::Spectrum || cfg.command == Command::Sweep;
    if (!free_stage && stage != cfg.stage)
      throw semantic("stage", root["stage"], "stage conflicts with command " + std::string(to_string(cfg.command)));
    cfg.stage = stage;
  }
  if (cfg.sweep) {
    const auto axis = cfg.sweep->axis;
    if ((axis == SweepAxis::RPrefactor || axis == SweepAxis::RPrimePrefactor) && cfg.stage != Stage::Converter)
      throw semantic("axis", root["axis"], "prefactor axes need the converter stage");
    if (axis == SweepAxis::Phi && cfg.stage != Stage::Discriminator)
      throw semantic("axis", root["axis"], "the phi axis needs the discriminator stage");
    if (axis == SweepAxis::OmegaMax || axis == SweepAxis::Tau)
      for (double v : cfg.sweep->points())
        if (!(v > 0.0)) throw semantic("axis", root["axis"], "omega_max and tau sweep values must be positive");
  }

  const bool conv = cfg.stage == Stage::Converter;
  cfg.omega_max = root["omega_max"] ? positive(root["omega_max"], "omega_max")
                                    : (conv ? kDefaultConverterOmega : kDefaultDiscriminatorOmega);
  cfg.tau = root["tau"] ? positive(root["tau"], "tau") : (conv ? kDefaultConverterTau : kDefaultDiscriminatorTau);
  if (root["converter_omega_max"]) cfg.converter_omega_max = positive(root["converter_omega_max"], "converter_omega_max");
  if (root["converter_tau"]) cfg.converter_tau = positive(root["converter_tau"], "converter_tau");
  if (cfg.command != Command::TwoStep)
    for (const char* key : {"converter_omega_max", "converter_tau"})
      if (root[key]) throw semantic(key, root[key], "only valid with command: two-step");

  if (root["enantiomer"]) {
    const auto e = scalar<std::string>(root["enantiomer"], "enantiomer");
    if (e != "L" && e != "D") throw semantic("enantiomer", root["enantiomer"], "enantiomer must be L or D");
    cfg.enantiomer = parse_enantiomer(e);
  }
  if (root["phi"]) {
    if (cfg.stage != Stage::Discriminator) throw semantic("phi", root["phi"], "phi applies to the discriminator only");
    cfg.phi = finite(root["phi"], "phi");
  }
  if (const auto node = root["sign_config"]) {
    map_node(node, "sign_config");
    reject_unknown(node, {"r_sign", "r_prime_sign"}, "sign_config.");
    if (node["r_sign"]) cfg.sign_config.r_sign = sign(node["r_sign"], "sign_config.r_sign");
    if (node["r_prime_sign"]) cfg.sign_config.r_prime_sign = sign(node["r_prime_sign"], "sign_config.r_prime_sign");
  }
  if (const auto node = root["prefactors"]) {
    map_node(node, "prefactors");
    reject_unknown(node, {"pump_s", "pump_a", "dump_s", "dump_a"}, "prefactors.");
    if (node["pump_s"]) cfg.prefactors.pump_s = finite(node["pump_s"], "prefactors.pump_s");
    if (node["pump_a"]) cfg.prefactors.pump_a = finite(node["pump_a"], "prefactors.pump_a");
    if (node["dump_s"]) cfg.prefactors.dump_s = finite(node["dump_s"], "prefactors.dump_s");
    if (node["dump_a"]) cfg.prefactors.dump_a = finite(node["dump_a"], "prefactors.dump_a");
  }
  if (const auto node = root["integrator"]) {
    map_node(node, "integrator");
    reject_unknown(node,
                   {"method", "rel_tol", "abs_tol", "max_step", "sample_stride", "oracle_steps", "norm_tolerance"},
                   "integrator.");
    auto& ic = cfg.integrator;
    if (node["method"]) {
      const auto m = scalar<std::string>(node["method"], "integrator.method");
      try {
        ic.method = parse_integrator_method(m);
      } catch (const InvalidParameter& e) {
        throw semantic("integrator.method", node["method"], e.what());
      }
    }
    if (node["rel_tol"]) ic.rel_tol = positive(node["rel_tol"], "integrator.rel_tol");
    if (node["abs_tol"]) ic.abs_tol = positive(node["abs_tol"], "integrator.abs_tol");
    if (node["max_step"]) ic.max_step = positive(node["max_step"], "integrator.max_step");
    if (node["sample_stride"]) ic.sample_stride = positive(node["sample_stride"], "integrator.sample_stride");
    if (node["norm_tolerance"]) ic.norm_tolerance = positive(node["norm_tolerance"], "integrator.norm_tolerance");
    if (node["oracle_steps"]) {
      const auto n = scalar<long long>(node["oracle_steps"], "integrator.oracle_steps");
      if (n < 1) throw semantic("integrator.oracle_steps", node["oracle_steps"], "must be at least 1");
      ic.oracle_steps = static_cast<std::size_t>(n);
    }
  }
  if (const auto node = root["output"]) {
    map_node(node, "output");
    reject_unknown(node, {"path", "eigenvalues", "overlaps"}, "output.");
    if (node["path"]) cfg.output_path = scalar<std::string>(node["path"], "output.path");
    if (node["eigenvalues"]) cfg.eigenvalues = scalar<bool>(node["eigenvalues"], "output.eigenvalues");
    if (node["overlaps"]) cfg.overlaps = scalar<bool>(node["overlaps"], "output.overlaps");
  }
  if (root["workers"]) {
    const auto w = scalar<long long>(root["workers"], "workers");
    if (w < 0) throw semantic("workers", root["workers"], "workers must be non-negative");
    cfg.workers = static_cast<unsigned>(w);
  }
  return cfg;
}

/// Serialises a RunConfig so that parse_config returns an equal value.
inline std::string emit_config(const RunConfig& cfg) {
  YAML::Emitter out;
  out.SetDoublePrecision(17);
  out << YAML::BeginMap;
  out << YAML::Key << "command" << YAML::Value << std::string(to_string(cfg.command));
  if (cfg.command == Command::Spectrum || cfg.command == Command::Sweep)
    out << YAML::Key << "stage" << YAML::Value << std::string(to_string(cfg.stage));
  if (cfg.sweep) {
    out << YAML::Key << "axis" << YAML::Value << std::string(to_string(cfg.sweep->axis));
    if (!cfg.sweep->values.empty()) {
      out << YAML::Key << "values" << YAML::Value << YAML::Flow << cfg.sweep->values;
    } else {
      out << YAML::Key << "from" << YAML::Value << cfg.sweep->from;
      out << YAML::Key << "to" << YAML::Value << cfg.sweep->to;
      out << YAML::Key << "count" << YAML::Value << cfg.sweep->count;
    }
  }
  out << YAML::Key << "omega_max" << YAML::Value << cfg.omega_max;
  out << YAML::Key << "tau" << YAML::Value << cfg.tau;
  out << YAML::Key << "enantiomer" << YAML::Value << std::string(to_string(cfg.enantiomer));
  if (cfg.phi) out << YAML::Key << "phi" << YAML::Value << *cfg.phi;
  if (cfg.command == Command::TwoStep) {
    out << YAML::Key << "converter_omega_max" << YAML::Value << cfg.converter_omega_max;
    out << YAML::Key << "converter_tau" << YAML::Value << cfg.converter_tau;
  }
  out << YAML::Key << "sign_config" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "r_sign" << YAML::Value << cfg.sign_config.r_sign;
  out << YAML::Key << "r_prime_sign" << YAML::Value << cfg.sign_config.r_prime_sign << YAML::EndMap;
  out << YAML::Key << "prefactors" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "pump_s" << YAML::Value << cfg.prefactors.pump_s;
  out << YAML::Key << "pump_a" << YAML::Value << cfg.prefactors.pump_a;
  out << YAML::Key << "dump_s" << YAML::Value << cfg.prefactors.dump_s;
  out << YAML::Key << "dump_a" << YAML::Value << cfg.prefactors.dump_a << YAML::EndMap;
  const auto& ic = cfg.integrator;
  out << YAML::Key << "integrator" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "method" << YAML::Value << std::string(to_string(ic.method));
  out << YAML::Key << "rel_tol" << YAML::Value << ic.rel_tol;
  out << YAML::Key << "abs_tol" << YAML::Value << ic.abs_tol;
  out << YAML::Key << "max_step" << YAML::Value << ic.max_step;
  if (ic.sample_stride) out << YAML::Key << "sample_stride" << YAML::Value << *ic.sample_stride;
  out << YAML::Key << "oracle_steps" << YAML::Value << ic.oracle_steps;
  out << YAML::Key << "norm_tolerance" << YAML::Value << ic.norm_tolerance << YAML::EndMap;
  out << YAML::Key << "output" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "path" << YAML::Value << YAML::DoubleQuoted << cfg.output_path;
  out << YAML::Key << "eigenvalues" << YAML::Value << cfg.eigenvalues;
  out << YAML::Key << "overlaps" << YAML::Value << cfg.overlaps << YAML::EndMap;
  out << YAML::Key << "workers" << YAML::Value << cfg.workers;
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

/// Worker count: explicit value, else CHIRAL_SWITCH_WORKERS, else hardware.
inline unsigned resolve_workers(unsigned requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("CHIRAL_SWITCH_WORKERS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && v > 0) return static_cast<unsigned>(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? hw : 1;
}

}  // namespace chiral::io
