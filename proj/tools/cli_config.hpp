#pragma once

// Experiment configuration for the command-line tool: flat `key = value`
// files, with command-line flags applied on top.

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cflow/cflow.hpp"

namespace cflow::cli {

struct ExperimentConfig {
  int dim = 1;
  std::string shape = "ellipse:2,1";
  std::string speed = "powersum:1:1";
  std::string mode = "volume";
  std::size_t grid = 256;
  double t_max = 50.0;
  double cfl = 0.25;
  double dev_tolerance = 1e-6;
  double sphericity_tolerance = 1e-5;
  double record_interval = 0.02;
  std::string out = "cflow-out";
  std::size_t snapshot_every = 0;
  std::string label;

  FlowConfig flow() const {
    FlowConfig f;
    f.t_max = t_max;
    f.cfl = cfl;
    f.dev_tolerance = dev_tolerance;
    f.sphericity_tolerance = sphericity_tolerance;
    f.record_interval = record_interval;
    f.snapshot_every = snapshot_every;
    return f;
  }

  /// Throws SpecError for anything unusable. Shape validity (convexity) is
  /// checked later, when the geometry is built.
  void validate() const {
    if (dim != 1 && dim != 2) throw SpecError("dim must be 1 or 2");
    require_grid_size(grid);
    (void)parse_speed(speed);
    (void)parse_mode(mode);
    flow().validate();
    if (out.empty()) throw SpecError("output directory must not be empty");
  }
};

namespace detail {

inline std::string trim(std::string_view s) {
  auto issp = [](unsigned char c) { return std::isspace(c) != 0; };
  while (!s.empty() && issp(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && issp(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return std::string(s);
}

inline double to_double(const std::string& key, const std::string& v) {
  try {
    return cflow::detail::parse_real(v, key);
  } catch (const SpecError&) {
    throw SpecError("config key '" + key + "': '" + v + "' is not a number");
  }
}

inline std::size_t to_count(const std::string& key, const std::string& v) {
  const double x = to_double(key, v);
  if (!(x >= 0.0) || x != static_cast<double>(static_cast<std::size_t>(x)))
    throw SpecError("config key '" + key + "': '" + v + "' is not a nonnegative integer");
  return static_cast<std::size_t>(x);
}

}  // namespace detail

/// Ordered key/value pairs from a config file; '#' starts a comment.
inline std::vector<std::pair<std::string, std::string>> read_key_values(std::istream& in,
                                                                        const std::string& origin) {
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string body = detail::trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos)
      throw SpecError(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
    std::string key = detail::trim(std::string_view(body).substr(0, eq));
    std::string value = detail::trim(std::string_view(body).substr(eq + 1));
    if (key.empty())
      throw SpecError(origin + ":" + std::to_string(lineno) + ": empty key");
    out.emplace_back(std::move(key), std::move(value));
  }
  return out;
}

inline std::vector<std::pair<std::string, std::string>> read_key_value_file(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SpecError("cannot open config file '" + path + "'");
  return read_key_values(in, path);
}

/// Sets one field; returns false for keys that are not experiment settings.
inline bool apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& v) {
  if (key == "dim") {
    const auto d = detail::to_count(key, v);
    cfg.dim = static_cast<int>(std::min<std::size_t>(d, 3));
  } else if (key == "shape") {
    cfg.shape = v;
  } else if (key == "speed") {
    cfg.speed = v;
  } else if (key == "mode") {
    cfg.mode = v;
  } else if (key == "grid") {
    cfg.grid = detail::to_count(key, v);
  } else if (key == "tmax") {
    cfg.t_max = detail::to_double(key, v);
  } else if (key == "cfl") {
    cfg.cfl = detail::to_double(key, v);
  } else if (key == "dev-tol") {
    cfg.dev_tolerance = detail::to_double(key, v);
  } else if (key == "sphericity-tol") {
    cfg.sphericity_tolerance = detail::to_double(key, v);
  } else if (key == "record-interval") {
    cfg.record_interval = detail::to_double(key, v);
  } else if (key == "out") {
    cfg.out = v;
  } else if (key == "snapshot-every") {
    cfg.snapshot_every = detail::to_count(key, v);
  } else if (key == "label") {
    cfg.label = v;
  } else {
    return false;
  }
  return true;
}

inline ExperimentConfig load_experiment(const std::string& path) {
  ExperimentConfig cfg;
  for (const auto& [k, v] : read_key_value_file(path))
    if (!apply_setting(cfg, k, v)) throw SpecError("unknown config key '" + k + "' in " + path);
  return cfg;
}

/// One sweep cell: a shape with its dimension.
struct ShapeEntry {
  int dim;
  std::string shape;
};

/// A shapes x speeds x modes matrix sharing every other setting.
struct SweepConfig {
  ExperimentConfig base;
  std::vector<ShapeEntry> shapes;
  std::vector<std::string> speeds;
  std::vector<std::string> modes;
  std::size_t jobs = 1;

  std::size_t cell_count() const { return shapes.size() * speeds.size() * modes.size(); }
};

namespace detail {

inline std::vector<std::string> words(const std::string& v) {
  std::istringstream in(v);
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

}  // namespace detail

/// Sweep keys: `shapes` (whitespace separated, each optionally prefixed by
/// `<dim>@`, otherwise using `dim`), `speeds`, `modes`, `jobs`; all other
/// keys are shared experiment settings.
inline SweepConfig parse_sweep(const std::vector<std::pair<std::string, std::string>>& kv,
                               const std::string& origin) {
  SweepConfig sw;
  std::vector<std::string> raw_shapes;
  for (const auto& [k, v] : kv) {
    if (k == "shapes") {
      raw_shapes = detail::words(v);
    } else if (k == "speeds") {
      sw.speeds = detail::words(v);
    } else if (k == "modes") {
      sw.modes = detail::words(v);
    } else if (k == "jobs") {
      sw.jobs = std::max<std::size_t>(1, detail::to_count(k, v));
    } else if (!apply_setting(sw.base, k, v)) {
      throw SpecError("unknown config key '" + k + "' in " + origin);
    }
  }
  for (const auto& w : raw_shapes) {
    const auto at = w.find('@');
    if (at == std::string::npos) {
      sw.shapes.push_back({sw.base.dim, w});
    } else {
      const auto d = detail::to_count("shapes", w.substr(0, at));
      if (d != 1 && d != 2) throw SpecError("shape '" + w + "': dimension must be 1 or 2");
      sw.shapes.push_back({static_cast<int>(d), w.substr(at + 1)});
    }
  }
  if (sw.shapes.empty()) sw.shapes.push_back({sw.base.dim, sw.base.shape});
  if (sw.speeds.empty()) sw.speeds.push_back(sw.base.speed);
  if (sw.modes.empty()) sw.modes.push_back(sw.base.mode);
  for (const auto& s : sw.speeds) (void)parse_speed(s);
  for (const auto& m : sw.modes) (void)parse_mode(m);
  return sw;
}

inline SweepConfig load_sweep(const std::string& path) {
  return parse_sweep(read_key_value_file(path), path);
}

}  // namespace cflow::cli
