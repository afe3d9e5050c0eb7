#pragma once

// Explicit RK4 time stepping of du/dt = h - phi(H) with a parabolic step
// restriction, and the run driver that records diagnostics and detects
// convergence to a round sphere.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cflow/diagnostics.hpp"
#include "cflow/flow_law.hpp"

namespace cflow {

struct FlowConfig {
  double t_max = 50.0;
  /// Safety factor sigma in dt = sigma dtheta^2 / max_j D_j, 0 < sigma <= 1.
  double cfl = 0.25;
  /// Converged requires max|phi(H) - h| <= dev_tolerance * max(h, 1e-12) ...
  double dev_tolerance = 1e-6;
  /// ... and R+/R- - 1 <= sphericity_tolerance.
  double sphericity_tolerance = 1e-5;
  /// Time between diagnostics records.
  double record_interval = 0.02;
  /// Keep every k-th record as a snapshot (0: first and last only).
  std::size_t snapshot_every = 0;
  bool stop_on_convergence = true;
  /// Standard mode stops once the inradius drops below this fraction of its
  /// initial value.
  double extinction_ratio = 1e-2;

  void validate() const {
    if (!(t_max >= 0.0)) throw SpecError("t_max must be nonnegative");
    if (!(cfl > 0.0 && cfl <= 1.0)) throw SpecError("CFL safety factor must lie in (0, 1]");
    if (!(dev_tolerance > 0.0) || !(sphericity_tolerance > 0.0))
      throw SpecError("convergence thresholds must be positive");
    if (!(record_interval > 0.0)) throw SpecError("record interval must be positive");
  }
};

enum class RunStatus { Converged, TimeExhausted, ConvexityLost, NumericalFailure };

inline const char* to_string(RunStatus s) {
  switch (s) {
    case RunStatus::Converged: return "Converged";
    case RunStatus::TimeExhausted: return "TimeExhausted";
    case RunStatus::ConvexityLost: return "ConvexityLost";
    case RunStatus::NumericalFailure: return "NumericalFailure";
  }
  return "?";
}

template <class Geometry>
struct RunResult {
  std::vector<DiagnosticsRecord> trajectory;
  /// Geometry at every record time (parallel to `trajectory`).
  std::vector<Geometry> states;
  /// Indices into `trajectory`/`states` kept as snapshots.
  std::vector<std::size_t> snapshots;
  RunStatus status = RunStatus::TimeExhausted;
  FlowState<Geometry> final_state;
  std::size_t steps = 0;
  /// Failure site or termination note.
  std::string message;
  double failure_time = std::numeric_limits<double>::quiet_NaN();
};

inline bool is_converged(const DiagnosticsRecord& rec, const FlowConfig& cfg) {
  return rec.dev <= cfg.dev_tolerance * std::max(rec.h, 1e-12) &&
         rec.sphericity <= cfg.sphericity_tolerance;
}

/// Reusable RK4 workspace for one grid.
template <class Geometry>
class Stepper {
 public:
  /// Stable step sigma dtheta^2 / max_j phi'(H_j) |A|^2_j for the current state.
  double stable_time_step(const FlowState<Geometry>& state, double cfl) {
    prepare(state);
    return stable_dt(state, cfl);
  }

  /// Advances `state` in place by one RK4 step (clipped so t <= t_limit) and
  /// returns the step taken. Throws ConvexityLost or NumericalFailure; the
  /// state is left untouched in that case.
  double advance(FlowState<Geometry>& state, double cfl, double t_limit) {
    prepare(state);
    const std::size_t n = state.geometry.size();
    double dt = stable_dt(state, cfl);
    if (state.t + dt > t_limit) dt = t_limit - state.t;
    if (!(dt > 0.0) || !std::isfinite(dt))
      throw NumericalFailure("time step collapsed to " + std::to_string(dt));

    const auto u0 = state.geometry.values();
    stage_rate(state, geom_, k1_);
    for (std::size_t j = 0; j < n; ++j) stage_u_[j] = u0[j] + 0.5 * dt * k1_[j];
    evaluate(state, stage_u_, k2_);
    for (std::size_t j = 0; j < n; ++j) stage_u_[j] = u0[j] + 0.5 * dt * k2_[j];
    evaluate(state, stage_u_, k3_);
    for (std::size_t j = 0; j < n; ++j) stage_u_[j] = u0[j] + dt * k3_[j];
    evaluate(state, stage_u_, k4_);
    std::vector<double> next(n);
    for (std::size_t j = 0; j < n; ++j)
      next[j] = u0[j] + dt / 6.0 * (k1_[j] + 2.0 * k2_[j] + 2.0 * k3_[j] + k4_[j]);
    // The new state must itself be strictly convex; its evaluation is reused
    // by the next step.
    state.geometry.evaluate(next, geom_);
    state.geometry = state.geometry.with_values(std::move(next));
    state.t += dt;
    cached_ = state.geometry.values().data();
    cached_t_ = state.t;
    return dt;
  }

  /// Local geometry of the state most recently produced or prepared.
  const LocalGeometry& geometry() const noexcept { return geom_; }

 private:
  void prepare(const FlowState<Geometry>& state) {
    const std::size_t n = state.geometry.size();
    if (stage_u_.size() != n) {
      stage_u_.resize(n);
      k1_.resize(n);
      k2_.resize(n);
      k3_.resize(n);
      k4_.resize(n);
      phi_.resize(n);
      dphi_.resize(n);
      cached_ = nullptr;
    }
    if (cached_ != state.geometry.values().data() || cached_t_ != state.t) {
      state.geometry.evaluate(state.geometry.values(), geom_);
      cached_ = state.geometry.values().data();
      cached_t_ = state.t;
    }
  }

  double stable_dt(const FlowState<Geometry>& state, double cfl) const {
    state.speed.derivatives(geom_.mean_curvature, dphi_);
    double dmax = 0.0;
#pragma omp simd reduction(max : dmax)
    for (std::size_t j = 0; j < dphi_.size(); ++j)
      dmax = std::max(dmax, dphi_[j] * geom_.curvature_norm2[j]);
    if (!std::isfinite(dmax)) throw NumericalFailure("non-finite parabolic diffusivity");
    const double h = state.geometry.spacing();
    return cfl * h * h / dmax;
  }

  void stage_rate(const FlowState<Geometry>& state, const LocalGeometry& g,
                  std::vector<double>& k) {
    const std::size_t n = g.mean_curvature.size();
    state.speed.values(g.mean_curvature, phi_);
    const double h = nonlocal_from(g, phi_, state.mode);
    if (!std::isfinite(h)) throw NumericalFailure("non-finite nonlocal term");
    for (std::size_t j = 0; j < n; ++j) k[j] = h - phi_[j];
  }

  void evaluate(const FlowState<Geometry>& state, const std::vector<double>& u,
                std::vector<double>& k) {
    state.geometry.evaluate(u, stage_geom_);
    stage_rate(state, stage_geom_, k);
  }

  LocalGeometry geom_;
  LocalGeometry stage_geom_;
  std::vector<double> stage_u_, k1_, k2_, k3_, k4_, phi_;
  mutable std::vector<double> dphi_;
  const double* cached_ = nullptr;
  double cached_t_ = std::numeric_limits<double>::quiet_NaN();
};

/// One RK4 step of size sigma dtheta^2 / max_j D_j with h recomputed at every
/// stage.
template <class Geometry>
FlowState<Geometry> step(const FlowState<Geometry>& state, const FlowConfig& config) {
  Stepper<Geometry> stepper;
  FlowState<Geometry> next = state;
  stepper.advance(next, config.cfl, std::numeric_limits<double>::infinity());
  return next;
}

/// Integrates from `initial` until the run stops; `status` says why.
template <class Geometry>
RunResult<Geometry> run(const FlowState<Geometry>& initial, const FlowConfig& config) {
  constexpr int n = Geometry::dimension;
  config.validate();
  RunResult<Geometry> result{{}, {}, {}, RunStatus::TimeExhausted, initial, 0, {},
                             std::numeric_limits<double>::quiet_NaN()};
  auto& state = result.final_state;

  auto push_record = [&](DiagnosticsRecord rec) {
    result.trajectory.push_back(std::move(rec));
    result.states.push_back(state.geometry);
    const std::size_t idx = result.trajectory.size() - 1;
    if (idx == 0 || (config.snapshot_every > 0 && idx % config.snapshot_every == 0))
      result.snapshots.push_back(idx);
  };

  try {
    push_record(record(state, 0.0));
  } catch (const ConvexityLost& e) {
    result.status = RunStatus::ConvexityLost;
    result.message = e.what();
    result.failure_time = state.t;
    return result;
  }
  const double initial_inradius = result.trajectory.front().inradius;
  if (config.stop_on_convergence && is_converged(result.trajectory.back(), config)) {
    result.status = RunStatus::Converged;
    return result;
  }

  Stepper<Geometry> stepper;
  MeasureProbe previous{state.t,
                        {result.trajectory.back().boundary, result.trajectory.back().enclosed},
                        true};
  StepExtremes extremes;
  double next_record = state.t + config.record_interval;
  bool awaiting_after = false;
  bool finished = false;
  while (!finished) {
    if (state.t >= config.t_max) {
      result.status = RunStatus::TimeExhausted;
      break;
    }
    double dt = 0.0;
    try {
      dt = stepper.advance(state, config.cfl, config.t_max);
    } catch (const ConvexityLost& e) {
      result.status = RunStatus::ConvexityLost;
      result.message = e.what();
      result.failure_time = state.t;
      break;
    } catch (const NumericalFailure& e) {
      result.status = RunStatus::NumericalFailure;
      result.message = e.what();
      result.failure_time = state.t;
      break;
    }
    ++result.steps;
    const MeasureProbe current{state.t, state.geometry.measures_from(stepper.geometry()), true};
    {
      const Measures& a = previous.measures;
      const Measures& b = current.measures;
      extremes.boundary_rise.offer(a.boundary, b.boundary, state.t, 1.0);
      extremes.boundary_drop.offer(a.boundary, b.boundary, state.t, -1.0);
      extremes.enclosed_rise.offer(a.enclosed, b.enclosed, state.t, 1.0);
      extremes.enclosed_drop.offer(a.enclosed, b.enclosed, state.t, -1.0);
      extremes.isoperimetric_rise.offer(
          std::pow(a.boundary, n + 1) / std::pow(a.enclosed, n),
          std::pow(b.boundary, n + 1) / std::pow(b.enclosed, n), state.t, 1.0);
      ++extremes.steps;
    }
    if (awaiting_after) {
      result.trajectory.back().after = current;
      awaiting_after = false;
    }
    // A convex body has inradius <= (n + 1)|Omega| / |M|. Checking that
    // bound every step catches extinction that happens between records.
    const bool extinct =
        state.mode == ConstraintMode::Standard &&
        (n + 1) * current.measures.enclosed / current.measures.boundary <
            config.extinction_ratio * initial_inradius;
    if (extinct || state.t >= next_record || state.t >= config.t_max) {
      auto rec = record(state, dt);
      rec.before = previous;
      rec.steps = extremes;
      extremes = {};
      push_record(std::move(rec));
      awaiting_after = true;
      while (next_record <= state.t) next_record += config.record_interval;
      const auto& last = result.trajectory.back();
      if (config.stop_on_convergence && is_converged(last, config)) {
        result.status = RunStatus::Converged;
        finished = true;
      } else if (extinct || (state.mode == ConstraintMode::Standard &&
                             last.inradius < config.extinction_ratio * initial_inradius)) {
        result.status = RunStatus::TimeExhausted;
        result.message = "extinction guard: inradius below " +
                         std::to_string(config.extinction_ratio) + " of initial";
        finished = true;
      }
    }
    previous = current;
  }

  // One look-ahead step so the final record also has a forward probe.
  if (awaiting_after && (result.status == RunStatus::Converged ||
                         result.status == RunStatus::TimeExhausted)) {
    try {
      FlowState<Geometry> ahead = state;
      stepper.advance(ahead, config.cfl, std::numeric_limits<double>::infinity());
      result.trajectory.back().after = {ahead.t, ahead.geometry.measures(), true};
    } catch (const std::runtime_error&) {
    }
  }
  if (result.snapshots.empty() || result.snapshots.back() != result.trajectory.size() - 1)
    result.snapshots.push_back(result.trajectory.size() - 1);
  return result;
}

}  // namespace cflow
