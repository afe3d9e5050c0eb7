#pragma once

// The four subcommands: run, sweep, validate-speed and oracle. Each returns
// the process exit code; artifacts are written under the configured paths.

#include <atomic>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "cflow/cflow.hpp"
#include "cli_config.hpp"
#include "cli_output.hpp"

namespace cflow::cli {

using json = nlohmann::ordered_json;

enum ExitCode : int {
  kOk = 0,
  kAdmissibilityFail = 1,
  kConfigError = 2,
  kConvexity = 3,
  kNumerical = 4,
  kInconclusive = 5,
  kAuditFail = 6,
};

/// Relative tolerance of the first-variation cross-check, by dimension.
inline double crosscheck_tolerance(int n) { return n == 1 ? 1e-6 : 1e-4; }

inline json finite_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

struct RunOutcome {
  int exit_code = kOk;
  std::string status;
  json summary;
  json audit;
};

template <class G>
json audit_report(ConstraintMode mode, const SpeedFunction& speed,
                  std::span<const DiagnosticsRecord> traj, std::span<const G> states,
                  double r_target, bool& all_passed) {
  constexpr int n = G::dimension;
  json a;
  all_passed = true;

  const auto viol = monotonicity_audit(traj, mode);
  json mono{{"passed", viol.empty()}, {"violation_count", viol.size()}};
  json list = json::array();
  for (std::size_t i = 0; i < viol.size() && i < 50; ++i)
    list.push_back({{"t", viol[i].t}, {"quantity", viol[i].quantity}, {"jump", viol[i].jump}});
  mono["violations"] = list;
  a["monotonicity"] = mono;
  all_passed = all_passed && viol.empty();

  const auto cc = conservation_crosscheck<G>(traj, states, speed, mode);
  double worst_b = 0.0, worst_e = 0.0, tb = 0.0, te = 0.0;
  for (const auto& r : cc) {
    if (r.boundary_residual() / r.boundary > worst_b) {
      worst_b = r.boundary_residual() / r.boundary;
      tb = r.t;
    }
    if (r.enclosed_residual() / r.boundary > worst_e) {
      worst_e = r.enclosed_residual() / r.boundary;
      te = r.t;
    }
  }
  const double tol = crosscheck_tolerance(n);
  const bool cc_ok = worst_b <= tol && worst_e <= tol;
  a["crosscheck"] = {{"passed", cc_ok},
                     {"tolerance_relative_to_boundary", tol},
                     {"samples", cc.size()},
                     {"worst_boundary_residual", worst_b},
                     {"worst_boundary_time", tb},
                     {"worst_enclosed_residual", worst_e},
                     {"worst_enclosed_time", te}};
  all_passed = all_passed && cc_ok;

  const auto bar = barrier_audit<G>(traj, states, speed);
  json barj{{"passed", bar.passed},
            {"inner_checks", bar.inner_checks},
            {"outer_checks", bar.outer_checks},
            {"worst_inner_margin", finite_or_null(bar.worst_inner_margin)},
            {"worst_outer_margin", finite_or_null(bar.worst_outer_margin)}};
  if (bar.first_violation) {
    const auto& v = *bar.first_violation;
    barj["first_violation"] = {
        {"kind", v.kind}, {"anchor_time", v.anchor_time}, {"time", v.time}, {"margin", v.margin}};
  }
  a["barrier"] = barj;
  all_passed = all_passed && bar.passed;

  const auto bounds = curvature_bounds_audit(traj, speed, n, mode, r_target);
  a["bounds"] = {{"passed", bounds.passed},
                 {"min_H", bounds.min_H},
                 {"max_phi", bounds.max_phi},
                 {"max_phi_before_t1", bounds.max_phi_early},
                 {"min_h", bounds.min_h},
                 {"h_floor", bounds.h_floor},
                 {"failures", bounds.failures}};
  all_passed = all_passed && bounds.passed;

  const auto af0 = alexandrov_fenchel_check(states.front());
  const auto af1 = alexandrov_fenchel_check(states.back());
  const bool af_ok = af0.margin >= -1e-9 * af0.integral_mean_curvature &&
                     af1.margin >= -1e-9 * af1.integral_mean_curvature;
  a["alexandrov_fenchel"] = {{"passed", af_ok},
                             {"initial_margin", af0.margin},
                             {"final_margin", af1.margin}};
  all_passed = all_passed && af_ok;
  a["passed"] = all_passed;
  return a;
}

template <class Geometry>
RunOutcome execute(const Geometry& initial, const ExperimentConfig& cfg,
                   const std::filesystem::path& dir) {
  constexpr int n = Geometry::dimension;
  const auto mode = parse_mode(cfg.mode);
  const auto speed = parse_speed(cfg.speed);
  const auto admissibility = check_admissibility(speed);
  const auto result = run(make_state(initial, mode, speed), cfg.flow());

  std::filesystem::create_directories(dir / "snapshots");
  write_run_csv(dir / "run.csv", result.trajectory);
  for (std::size_t idx : result.snapshots)
    write_snapshot(dir / "snapshots", idx, result.states[idx], result.trajectory[idx].t);

  const auto& first = result.trajectory.front();
  const auto& last = result.trajectory.back();
  const double r_target = target_radius(n, mode, {first.boundary, first.enclosed});
  double min_radius = first.min_radius, min_h = first.h;
  for (const auto& r : result.trajectory) {
    min_radius = std::min(min_radius, r.min_radius);
    min_h = std::min(min_h, r.h);
  }

  RunOutcome o;
  bool audits_ok = true;
  o.audit = audit_report<Geometry>(mode, speed, result.trajectory, result.states, r_target,
                                   audits_ok);
  o.status = to_string(result.status);
  switch (result.status) {
    case RunStatus::Converged: o.exit_code = audits_ok ? kOk : kAuditFail; break;
    case RunStatus::TimeExhausted: o.exit_code = kInconclusive; break;
    case RunStatus::ConvexityLost: o.exit_code = kConvexity; break;
    case RunStatus::NumericalFailure: o.exit_code = kNumerical; break;
  }

  auto drift = [](double a, double b) { return (b - a) / a; };
  o.summary = {
      {"status", o.status},
      {"message", result.message},
      {"exit_code", o.exit_code},
      {"label", cfg.label},
      {"dim", n},
      {"shape", cfg.shape},
      {"speed", speed.label()},
      {"mode", to_string(mode)},
      {"grid", cfg.grid},
      {"admissibility", to_string(admissibility.overall)},
      {"t_final", last.t},
      {"steps", result.steps},
      {"records", result.trajectory.size()},
      {"enclosed",
       {{"initial", first.enclosed}, {"final", last.enclosed},
        {"drift", drift(first.enclosed, last.enclosed)}}},
      {"boundary",
       {{"initial", first.boundary}, {"final", last.boundary},
        {"drift", drift(first.boundary, last.boundary)}}},
      {"target_radius", finite_or_null(r_target)},
      {"achieved_radius", 0.5 * (last.inradius + last.circumradius)},
      {"inradius", last.inradius},
      {"circumradius", last.circumradius},
      {"sphericity", last.sphericity},
      {"dev", last.dev},
      {"h", last.h},
      {"min_principal_radius", min_radius},
      {"min_h", min_h},
      {"audits_passed", audits_ok},
      {"worst_margins",
       {{"barrier_inner", o.audit["barrier"]["worst_inner_margin"]},
        {"barrier_outer", o.audit["barrier"]["worst_outer_margin"]},
        {"crosscheck_boundary", o.audit["crosscheck"]["worst_boundary_residual"]},
        {"crosscheck_enclosed", o.audit["crosscheck"]["worst_enclosed_residual"]},
        {"alexandrov_fenchel_final", o.audit["alexandrov_fenchel"]["final_margin"]}}},
  };
  if (std::isfinite(result.failure_time)) o.summary["failure_time"] = result.failure_time;
  return o;
}

inline void write_json(const std::filesystem::path& path, const json& j) {
  auto out = open_for_write(path);
  out << j.dump(2) << '\n';
}

/// Runs one experiment into `cfg.out`. Initial-data and config errors still
/// produce a summary.json when the output directory can be created.
inline RunOutcome run_experiment(const ExperimentConfig& cfg) {
  const std::filesystem::path dir(cfg.out);
  auto failed = [&](int code, const std::string& status, const std::string& what) {
    RunOutcome o;
    o.exit_code = code;
    o.status = status;
    o.summary = {{"status", status}, {"message", what},   {"exit_code", code},
                 {"label", cfg.label}, {"dim", cfg.dim}, {"shape", cfg.shape},
                 {"speed", cfg.speed}, {"mode", cfg.mode}};
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (!ec) {
      try {
        write_json(dir / "summary.json", o.summary);
      } catch (const std::exception&) {
      }
    }
    return o;
  };
  RunOutcome o;
  try {
    cfg.validate();
    if (cfg.dim == 1)
      o = execute(make_curve(cfg.shape, cfg.grid), cfg, dir);
    else
      o = execute(make_surface(cfg.shape, cfg.grid), cfg, dir);
  } catch (const InvalidInitialData& e) {
    return failed(kConvexity, "InvalidInitialData", e.what());
  } catch (const SpecError& e) {
    return failed(kConfigError, "ConfigError", e.what());
  } catch (const DomainError& e) {
    return failed(kConfigError, "ConfigError", e.what());
  } catch (const ConvexityLost& e) {
    return failed(kConvexity, "ConvexityLost", e.what());
  } catch (const NumericalFailure& e) {
    return failed(kNumerical, "NumericalFailure", e.what());
  }
  write_json(dir / "audit.json", o.audit);
  write_json(dir / "summary.json", o.summary);
  return o;
}

inline int cmd_run(const ExperimentConfig& cfg, std::ostream& log) {
  try {
    const auto verdict = check_admissibility(parse_speed(cfg.speed)).overall;
    if (verdict != Verdict::Pass)
      std::cerr << "WARNING: speed '" << cfg.speed << "' is not admissible ("
                << to_string(verdict) << "); convergence is not guaranteed\n";
  } catch (const SpecError&) {
    // reported by run_experiment
  }
  const auto o = run_experiment(cfg);
  log << o.status;
  if (o.summary.contains("t_final"))
    log << " t=" << num(o.summary["t_final"].get<double>())
        << " radius=" << num(o.summary["achieved_radius"].get<double>());
  if (o.summary.contains("target_radius") && !o.summary["target_radius"].is_null())
    log << " target=" << num(o.summary["target_radius"].get<double>());
  if (o.summary.contains("audits_passed"))
    log << " audits=" << (o.summary["audits_passed"].get<bool>() ? "pass" : "fail");
  const auto msg = o.summary.value("message", std::string());
  if (!msg.empty()) log << " (" << msg << ")";
  log << '\n';
  return o.exit_code;
}

namespace detail {

inline std::string sanitize(const std::string& s) {
  std::string out;
  for (char c : s) out += (std::isalnum(static_cast<unsigned char>(c)) || c == '.') ? c : '_';
  return out;
}

}  // namespace detail

struct SweepCell {
  ExperimentConfig config;
  RunOutcome outcome;
};

/// Runs every cell of the matrix into `<out>/<cell>/` and writes
/// `<out>/sweep.csv`. Exit 0 iff every cell converged with passing audits.
inline int cmd_sweep(const SweepConfig& sw, std::ostream& log) {
  std::vector<SweepCell> cells;
  std::size_t index = 0;
  for (const auto& sh : sw.shapes)
    for (const auto& sp : sw.speeds)
      for (const auto& m : sw.modes) {
        SweepCell c;
        c.config = sw.base;
        c.config.dim = sh.dim;
        c.config.shape = sh.shape;
        c.config.speed = sp;
        c.config.mode = m;
        char prefix[8];
        std::snprintf(prefix, sizeof prefix, "%03zu", index++);
        const std::string name = std::string(prefix) + "_n" + std::to_string(sh.dim) + "_" +
                                 detail::sanitize(sh.shape) + "_" + detail::sanitize(sp) + "_" + m;
        c.config.out = (std::filesystem::path(sw.base.out) / name).string();
        if (c.config.label.empty()) c.config.label = name;
        cells.push_back(std::move(c));
      }

  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < cells.size();) {
      cells[i].outcome = run_experiment(cells[i].config);
      std::lock_guard lock(log_mutex);
      log << cells[i].config.label << ": " << cells[i].outcome.status << " (exit "
          << cells[i].outcome.exit_code << ")\n";
    }
  };
  const std::size_t jobs = std::min(sw.jobs, cells.size());
  std::vector<std::thread> pool;
  for (std::size_t j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  std::filesystem::create_directories(sw.base.out);
  auto out = open_for_write(std::filesystem::path(sw.base.out) / "sweep.csv");
  out << "cell,dim,shape,speed,mode,status,exit_code,t_final,target_radius,achieved_radius,"
         "sphericity,enclosed_drift,boundary_drift,audits_passed\n";
  bool all_ok = true;
  auto field = [](const json& j, const char* key) -> std::string {
    if (!j.contains(key) || j[key].is_null()) return "";
    return num(j[key].get<double>());
  };
  for (const auto& c : cells) {
    const auto& s = c.outcome.summary;
    const bool ok = c.outcome.exit_code == kOk;
    all_ok = all_ok && ok;
    // Shape and speed specs may contain commas, so they are quoted.
    out << c.config.label << ',' << c.config.dim << ",\"" << c.config.shape << "\",\""
        << c.config.speed << "\"," << c.config.mode << ',' << c.outcome.status << ','
        << c.outcome.exit_code << ',' << field(s, "t_final") << ',' << field(s, "target_radius")
        << ',' << field(s, "achieved_radius") << ',' << field(s, "sphericity") << ','
        << (s.contains("enclosed") ? num(s["enclosed"]["drift"].get<double>()) : "") << ','
        << (s.contains("boundary") ? num(s["boundary"]["drift"].get<double>()) : "") << ','
        << (s.value("audits_passed", false) ? "true" : "false") << '\n';
  }
  return all_ok ? kOk : kAuditFail;
}

inline json admissibility_json(const AdmissibilityReport& rep) {
  json j{{"speed", rep.speed}, {"overall", to_string(rep.overall)}};
  json conds = json::array();
  for (const auto& c : rep.conditions) {
    json w = json::array();
    for (const auto& s : c.witnesses) w.push_back({{"alpha", s.alpha}, {"value", s.value}});
    json measured = json::array();
    for (const auto& s : c.measured) measured.push_back({s.alpha, s.value});
    conds.push_back({{"name", c.name},
                     {"description", c.description},
                     {"verdict", to_string(c.verdict)},
                     {"witnesses", w},
                     {"measured", measured},
                     {"equality_points", c.equality_points},
                     {"skipped_nonfinite", c.skipped_nonfinite}});
  }
  j["conditions"] = conds;
  return j;
}

inline int cmd_validate_speed(const std::string& spec, const std::string& json_path,
                              std::ostream& log) {
  std::optional<SpeedFunction> speed;
  try {
    speed = parse_speed(spec);
  } catch (const SpecError& e) {
    log << "config error: " << e.what() << '\n';
    return kConfigError;
  }
  const auto rep = check_admissibility(*speed);
  log << "speed " << rep.speed << ": " << to_string(rep.overall) << '\n';
  for (const auto& c : rep.conditions) {
    log << "  " << c.name << ") " << to_string(c.verdict) << "  " << c.description;
    if (c.verdict != Verdict::Pass && !c.witnesses.empty()) {
      log << "  witnesses:";
      for (std::size_t i = 0; i < c.witnesses.size() && i < 3; ++i)
        log << " (" << num(c.witnesses[i].alpha) << ", " << num(c.witnesses[i].value) << ")";
    }
    log << '\n';
  }
  if (!json_path.empty()) write_json(json_path, admissibility_json(rep));
  switch (rep.overall) {
    case Verdict::Pass: return kOk;
    case Verdict::Fail: return kAdmissibilityFail;
    case Verdict::Inconclusive: return kInconclusive;
  }
  return kInconclusive;
}

/// Writes "t,r" rows of the comparison-ball radius.
inline int cmd_oracle(const std::string& spec, int dim, double r0, double t_max,
                      std::size_t samples, std::ostream& csv, std::ostream& log) {
  try {
    if (dim != 1 && dim != 2) throw SpecError("dim must be 1 or 2");
    if (!(r0 > 0.0)) throw SpecError("r0 must be positive");
    if (!(t_max >= 0.0)) throw SpecError("tmax must be nonnegative");
    if (samples == 0) throw SpecError("samples must be positive");
    const auto speed = parse_speed(spec);
    SphereOracleOptions opt;
    opt.samples = samples;
    const auto traj = sphere_oracle(speed, dim, r0, t_max, opt);
    csv << "t,r\n";
    for (const auto& s : traj) csv << num(s.t) << ',' << num(s.r) << '\n';
  } catch (const SpecError& e) {
    log << "config error: " << e.what() << '\n';
    return kConfigError;
  }
  return kOk;
}

}  // namespace cflow::cli
