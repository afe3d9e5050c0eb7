#pragma once

// Geometric functionals tracked along a flow, and audits that check a
// recorded trajectory against what the flow is known to do.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cflow/axisym_support.hpp"
#include "cflow/flow_law.hpp"
#include "cflow/sphere_oracle.hpp"
#include "cflow/support_curve.hpp"

namespace cflow {

// ---------------------------------------------------------------------------
// Inradius and circumradius

/// Inner and outer radius with their optimal centres. For bodies of
/// revolution the centre lies on the axis and is reported as (0, z).
struct Radii {
  double inradius = 0.0;
  double circumradius = 0.0;
  Point2 inner_center;
  Point2 outer_center;
};

/// Golden-section search for the minimiser of a unimodal f on [lo, hi].
template <class F>
double golden_argmin(F&& f, double lo, double hi, double tol) {
  constexpr double inv_phi = 0.6180339887498949;
  double a = lo, b = hi;
  double x1 = b - inv_phi * (b - a);
  double x2 = a + inv_phi * (b - a);
  double f1 = f(x1), f2 = f(x2);
  while (b - a > tol) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - inv_phi * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + inv_phi * (b - a);
      f2 = f(x2);
    }
  }
  return f1 <= f2 ? x1 : x2;
}

inline constexpr double kCenterTolerance = 1e-9;

/// The discrete min-max problems can have a flat optimum: near a grid
/// normal that dominates, moving the centre along that normal leaves the
/// gap unchanged. Golden-section then stops anywhere on the plateau, so
/// this returns the plateau's midpoint instead, which keeps symmetric
/// bodies centred on their axis of symmetry.
template <class F>
double plateau_midpoint(F&& f, double x, double lo, double hi, double tol) {
  const double fx = f(x);
  const double slack = 1e-13 * (1.0 + std::abs(fx));
  auto flat = [&](double y) { return f(y) <= fx + slack; };
  const double probe = 1e3 * tol;
  if (!(x - probe > lo && flat(x - probe)) && !(x + probe < hi && flat(x + probe))) return x;
  auto edge = [&](double inside, double outside) {
    if (flat(outside)) return outside;
    while (std::abs(outside - inside) > tol) {
      const double mid = 0.5 * (inside + outside);
      (flat(mid) ? inside : outside) = mid;
    }
    return inside;
  };
  return 0.5 * (edge(x, lo) + edge(x, hi));
}

/// min and max over grid normals of u(nu) - <c, nu>.
struct SupportGap {
  double min;
  double max;
};

inline SupportGap support_gap(const SupportCurve& curve, Point2 c) {
  const auto& g = curve.grid();
  SupportGap r{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (std::size_t j = 0; j < curve.size(); ++j) {
    const double d = curve[j] - c.x * g.cos[j] - c.y * g.sin[j];
    r.min = std::min(r.min, d);
    r.max = std::max(r.max, d);
  }
  return r;
}

inline SupportGap support_gap(const AxisymSupport& surface, Point2 c) {
  const auto& g = surface.grid();
  const double z = c.y;
  SupportGap r{surface.north_pole_value() - z, surface.north_pole_value() - z};
  const double south = surface.south_pole_value() + z;
  r.min = std::min(r.min, south);
  r.max = std::max(r.max, south);
  for (std::size_t j = 0; j < surface.size(); ++j) {
    const double d = surface[j] - z * g.cos[j];
    r.min = std::min(r.min, d);
    r.max = std::max(r.max, d);
  }
  return r;
}

/// Inner radius  max_c min_nu (u - <c,nu>)  and outer radius
/// min_c max_nu (u - <c,nu>), by nested golden-section search over the centre.
inline Radii radii(const SupportCurve& curve) {
  const auto& g = curve.grid();
  const std::size_t n = curve.size();
  const auto u = curve.values();
  const double bound = *std::max_element(u.begin(), u.end());
  std::vector<double> shifted(n);

  auto inner_min = [&](double cy) {
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) m = std::min(m, shifted[j] - cy * g.sin[j]);
    return m;
  };
  auto inner_max = [&](double cy) {
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) m = std::max(m, shifted[j] - cy * g.sin[j]);
    return m;
  };
  auto shift = [&](double cx) {
    for (std::size_t j = 0; j < n; ++j) shifted[j] = u[j] - cx * g.cos[j];
  };

  Radii r;
  {
    auto best_over_y = [&](double cx, double* cy_out) {
      shift(cx);
      auto objective = [&](double y) { return -inner_min(y); };
      double cy = golden_argmin(objective, -bound, bound, kCenterTolerance);
      if (cy_out) *cy_out = cy = plateau_midpoint(objective, cy, -bound, bound, kCenterTolerance);
      return inner_min(cy);
    };
    auto objective = [&](double x) { return -best_over_y(x, nullptr); };
    const double cx = plateau_midpoint(
        objective, golden_argmin(objective, -bound, bound, kCenterTolerance), -bound, bound,
        kCenterTolerance);
    double cy = 0.0;
    best_over_y(cx, &cy);
    r.inner_center = {cx, cy};
    r.inradius = support_gap(curve, r.inner_center).min;
  }
  {
    auto best_over_y = [&](double cx, double* cy_out) {
      shift(cx);
      double cy = golden_argmin(inner_max, -bound, bound, kCenterTolerance);
      if (cy_out) *cy_out = cy = plateau_midpoint(inner_max, cy, -bound, bound, kCenterTolerance);
      return inner_max(cy);
    };
    auto objective = [&](double x) { return best_over_y(x, nullptr); };
    const double cx = plateau_midpoint(
        objective, golden_argmin(objective, -bound, bound, kCenterTolerance), -bound, bound,
        kCenterTolerance);
    double cy = 0.0;
    best_over_y(cx, &cy);
    r.outer_center = {cx, cy};
    r.circumradius = support_gap(curve, r.outer_center).max;
  }
  return r;
}

inline Radii radii(const AxisymSupport& surface) {
  const auto u = surface.values();
  const double bound =
      std::max({*std::max_element(u.begin(), u.end()), surface.north_pole_value(),
                surface.south_pole_value()});
  Radii r;
  auto inner = [&](double z) { return -support_gap(surface, {0.0, z}).min; };
  auto outer = [&](double z) { return support_gap(surface, {0.0, z}).max; };
  const double zi = plateau_midpoint(
      inner, golden_argmin(inner, -bound, bound, kCenterTolerance), -bound, bound,
      kCenterTolerance);
  const double zo = plateau_midpoint(
      outer, golden_argmin(outer, -bound, bound, kCenterTolerance), -bound, bound,
      kCenterTolerance);
  r.inner_center = {0.0, zi};
  r.outer_center = {0.0, zo};
  r.inradius = support_gap(surface, r.inner_center).min;
  r.circumradius = support_gap(surface, r.outer_center).max;
  return r;
}

// ---------------------------------------------------------------------------
// Per-time record

/// Measures at a neighbouring time step, used for central differences.
struct MeasureProbe {
  double t = 0.0;
  Measures measures;
  bool valid = false;
};

/// Largest relative change of one measure over a single engine step.
struct StepJump {
  double relative = 0.0;  // change / value before the step
  double jump = 0.0;      // signed change
  double t = 0.0;         // time at the end of that step

  void offer(double before, double after, double t_after, double sign) {
    const double d = after - before;
    const double rel = sign * d / std::abs(before);
    if (rel > relative) {
      relative = rel;
      jump = d;
      t = t_after;
    }
  }
};

/// Per-step extremes accumulated by the engine between two records.
struct StepExtremes {
  std::size_t steps = 0;
  StepJump boundary_rise, boundary_drop;
  StepJump enclosed_rise, enclosed_drop;
  StepJump isoperimetric_rise;
};

struct DiagnosticsRecord {
  double t = 0.0;
  double dt = 0.0;
  double boundary = 0.0;       // |M_t|
  double enclosed = 0.0;       // |Omega_t|
  double isoperimetric = 0.0;  // |M|^(n+1) / |Omega|^n
  double inradius = 0.0;
  double circumradius = 0.0;
  Point2 inner_center;
  Point2 outer_center;
  double sphericity = 0.0;  // R+/R- - 1
  double H_min = 0.0;
  double H_max = 0.0;
  double h = 0.0;
  double dev = 0.0;            // max_j |phi(H_j) - h|
  double phi_max = 0.0;        // max_j phi(H_j)
  double min_radius = 0.0;     // min_j min_i r_i
  MeasureProbe before;
  MeasureProbe after;
  /// Engine steps since the previous record (empty for hand-built records).
  StepExtremes steps;
};

template <class Geometry>
DiagnosticsRecord record(const FlowState<Geometry>& state, double dt) {
  constexpr int n = Geometry::dimension;
  const auto g = state.geometry.local_geometry();
  std::vector<double> phi;
  speed_values(state.speed, g, phi);
  DiagnosticsRecord rec;
  rec.t = state.t;
  rec.dt = dt;
  const Measures m = state.geometry.measures_from(g);
  rec.boundary = m.boundary;
  rec.enclosed = m.enclosed;
  rec.isoperimetric = std::pow(m.boundary, n + 1) / std::pow(m.enclosed, n);
  const auto rr = radii(state.geometry);
  rec.inradius = rr.inradius;
  rec.circumradius = rr.circumradius;
  rec.inner_center = rr.inner_center;
  rec.outer_center = rr.outer_center;
  rec.sphericity = rr.circumradius / rr.inradius - 1.0;
  const auto [hmin, hmax] = std::minmax_element(g.mean_curvature.begin(), g.mean_curvature.end());
  rec.H_min = *hmin;
  rec.H_max = *hmax;
  rec.h = nonlocal_from(g, phi, state.mode);
  rec.dev = 0.0;
  rec.phi_max = 0.0;
  for (double p : phi) {
    rec.dev = std::max(rec.dev, std::abs(p - rec.h));
    rec.phi_max = std::max(rec.phi_max, p);
  }
  rec.min_radius = g.min_radius;
  return rec;
}

// ---------------------------------------------------------------------------
// Monotonicity

struct MonotonicityViolation {
  double t;
  std::string quantity;
  double jump;  // signed change between consecutive records
};

struct MonotonicitySlack {
  double monotone = 1e-9;      // relative slack for |M|, |Omega|, I monotonicity
  double conservation = 1e-9;  // relative slack for the conserved measure
};

/// Volume mode: |M| and I nonincreasing, |Omega| constant. Area mode: |Omega|
/// nondecreasing, I nonincreasing, |M| constant. Standard mode asserts nothing.
///
/// The monotone quantities are compared between consecutive records and, when
/// the engine filled them in, over every individual time step; a quantity is
/// reported at most once per record interval. The conserved measure is judged
/// per time step only.
inline std::vector<MonotonicityViolation> monotonicity_audit(
    std::span<const DiagnosticsRecord> trajectory, ConstraintMode mode,
    MonotonicitySlack slack = {}) {
  std::vector<MonotonicityViolation> out;
  if (mode == ConstraintMode::Standard) return out;
  auto check = [&](const char* name, double before, double after, double t, double sign,
                   const StepJump& step, double tol) {
    const double d = after - before;
    if (sign * d > tol * std::abs(before))
      out.push_back({t, name, d});
    else if (step.relative > tol)
      out.push_back({step.t, name, step.jump});
  };
  for (std::size_t k = 1; k < trajectory.size(); ++k) {
    const auto& a = trajectory[k - 1];
    const auto& b = trajectory[k];
    const auto& s = b.steps;
    check("isoperimetric", a.isoperimetric, b.isoperimetric, b.t, 1.0, s.isoperimetric_rise,
          slack.monotone);
    if (mode == ConstraintMode::VolumePreserving) {
      check("boundary", a.boundary, b.boundary, b.t, 1.0, s.boundary_rise, slack.monotone);
      const StepJump& worst =
          s.enclosed_rise.relative >= s.enclosed_drop.relative ? s.enclosed_rise : s.enclosed_drop;
      if (worst.relative > slack.conservation) out.push_back({worst.t, "enclosed", worst.jump});
    } else {
      check("enclosed", a.enclosed, b.enclosed, b.t, -1.0, s.enclosed_drop, slack.monotone);
      const StepJump& worst =
          s.boundary_rise.relative >= s.boundary_drop.relative ? s.boundary_rise : s.boundary_drop;
      if (worst.relative > slack.conservation) out.push_back({worst.t, "boundary", worst.jump});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// First-variation cross-check

struct CrosscheckResidual {
  double t;
  double boundary;            // |M| at t, for relative bounds
  double boundary_rate;       // d|M|/dt by central difference
  double boundary_integral;   // int H (h - phi) dmu
  double enclosed_rate;       // d|Omega|/dt by central difference
  double enclosed_integral;   // int (h - phi) dmu
  double boundary_residual() const { return std::abs(boundary_rate - boundary_integral); }
  double enclosed_residual() const { return std::abs(enclosed_rate - enclosed_integral); }
};

namespace detail {

// Three-point derivative at the middle of nonuniform nodes t-a, t, t+b.
inline double central_rate(double fm, double f0, double fp, double a, double b) {
  // Written in differences so that constant data gives exactly zero.
  return (b / (a * (a + b))) * (f0 - fm) + (a / (b * (a + b))) * (fp - f0);
}

}  // namespace detail

/// Compares time derivatives of |M| and |Omega| with the first-variation
/// integrals at every record that has measure probes on both sides.
template <class Geometry>
std::vector<CrosscheckResidual> conservation_crosscheck(
    std::span<const DiagnosticsRecord> trajectory, std::span<const Geometry> states,
    const SpeedFunction& speed, ConstraintMode mode) {
  std::vector<CrosscheckResidual> out;
  const std::size_t count = std::min(trajectory.size(), states.size());
  std::vector<double> phi;
  for (std::size_t k = 0; k < count; ++k) {
    const auto& rec = trajectory[k];
    if (!rec.before.valid || !rec.after.valid) continue;
    const double a = rec.t - rec.before.t;
    const double b = rec.after.t - rec.t;
    if (!(a > 0.0) || !(b > 0.0)) continue;
    const auto g = states[k].local_geometry();
    speed_values(speed, g, phi);
    const double h = nonlocal_from(g, phi, mode);
    CrosscheckResidual r{};
    r.t = rec.t;
    r.boundary = rec.boundary;
    for (std::size_t j = 0; j < phi.size(); ++j) {
      const double v = (h - phi[j]) * g.area_element[j];
      r.enclosed_integral += v;
      r.boundary_integral += g.mean_curvature[j] * v;
    }
    r.boundary_rate = detail::central_rate(rec.before.measures.boundary, rec.boundary,
                                           rec.after.measures.boundary, a, b);
    r.enclosed_rate = detail::central_rate(rec.before.measures.enclosed, rec.enclosed,
                                           rec.after.measures.enclosed, a, b);
    out.push_back(r);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Curvature and nonlocal bounds

/// Radius of the ball carrying the same conserved measure as `initial`:
/// sqrt(A/pi) or L/2pi for curves, (3V/4pi)^(1/3) or sqrt(S/4pi) for
/// surfaces. NaN in standard mode, which conserves nothing.
inline double target_radius(int n, ConstraintMode mode, const Measures& initial) {
  switch (mode) {
    case ConstraintMode::VolumePreserving:
      return n == 1 ? std::sqrt(initial.enclosed / pi)
                    : std::cbrt(3.0 * initial.enclosed / (4.0 * pi));
    case ConstraintMode::AreaPreserving:
      return n == 1 ? initial.boundary / (2.0 * pi) : std::sqrt(initial.boundary / (4.0 * pi));
    case ConstraintMode::Standard:
      break;
  }
  return std::numeric_limits<double>::quiet_NaN();
}

struct BoundsReport {
  bool passed = true;
  double min_H = std::numeric_limits<double>::infinity();
  double max_phi = 0.0;        // max over the run of max_j phi(H_j)
  double max_phi_early = 0.0;  // the same, restricted to t < early_time
  double min_h = std::numeric_limits<double>::infinity();
  double h_floor = 0.0;        // fraction * phi(n / r_target); 0 in standard mode
  std::vector<std::string> failures;
};

/// Curvature stays positive, the largest speed never exceeds (1 + growth)
/// times its maximum over t < early_time, and h stays above
/// h_fraction * phi(n / r_target).
inline BoundsReport curvature_bounds_audit(std::span<const DiagnosticsRecord> trajectory,
                                           const SpeedFunction& speed, int n,
                                           ConstraintMode mode, double r_target,
                                           double early_time = 1.0, double growth = 0.01,
                                           double h_fraction = 0.5) {
  BoundsReport rep;
  if (trajectory.empty()) return rep;
  for (const auto& rec : trajectory) {
    rep.min_H = std::min(rep.min_H, rec.H_min);
    rep.max_phi = std::max(rep.max_phi, rec.phi_max);
    if (rec.t < early_time || &rec == &trajectory.front())
      rep.max_phi_early = std::max(rep.max_phi_early, rec.phi_max);
    rep.min_h = std::min(rep.min_h, rec.h);
  }
  if (!(rep.min_H > 0.0)) rep.failures.push_back("mean curvature not positive");
  if (!std::isfinite(rep.max_phi) || rep.max_phi > (1.0 + growth) * rep.max_phi_early)
    rep.failures.push_back("speed grew past its early maximum");
  if (mode != ConstraintMode::Standard) {
    rep.h_floor = h_fraction * speed.value(n / r_target);
    if (!(rep.min_h >= rep.h_floor)) rep.failures.push_back("nonlocal term below its floor");
  }
  rep.passed = rep.failures.empty();
  return rep;
}

// ---------------------------------------------------------------------------
// Barriers

struct BarrierViolation {
  std::string kind;  // "inner" or "outer"
  double anchor_time;
  double time;
  double margin;
};

struct BarrierReport {
  bool passed = true;
  std::optional<BarrierViolation> first_violation;
  double worst_inner_margin = std::numeric_limits<double>::infinity();
  double worst_outer_margin = std::numeric_limits<double>::infinity();
  std::size_t inner_checks = 0;
  std::size_t outer_checks = 0;
};

/// Inner barrier: from every record time t0, a ball centred at the incentre
/// shrinking by r' = -phi(n/r) from the inradius stays inside the body while
/// r >= R-(t0)/2. Outer barrier: the ball of radius R+(t0) + h_max (t - t0)
/// about the circumcentre contains the body for t - t0 <= R+(t0)/h_max.
template <class Geometry>
BarrierReport barrier_audit(std::span<const DiagnosticsRecord> trajectory,
                            std::span<const Geometry> states, const SpeedFunction& speed,
                            double tolerance = 1e-6) {
  constexpr int n = Geometry::dimension;
  BarrierReport rep;
  const std::size_t count = std::min(trajectory.size(), states.size());
  double h_max = 0.0;
  for (std::size_t k = 0; k < count; ++k) h_max = std::max(h_max, trajectory[k].h);
  const ComparisonBall ball(speed, n, 1e-3);

  auto flag = [&](const char* kind, double t0, double t, double margin) {
    if (margin < -tolerance && rep.passed) {
      rep.passed = false;
      rep.first_violation = BarrierViolation{kind, t0, t, margin};
    }
  };

  for (std::size_t k = 0; k < count; ++k) {
    const auto& anchor = trajectory[k];
    // inner
    double r = anchor.inradius;
    double t = anchor.t;
    for (std::size_t m = k + 1; m < count; ++m) {
      r = ball.advance(r, trajectory[m].t - t, 0.5 * anchor.inradius);
      t = trajectory[m].t;
      if (r < 0.5 * anchor.inradius) break;
      const double margin = support_gap(states[m], anchor.inner_center).min - r;
      rep.worst_inner_margin = std::min(rep.worst_inner_margin, margin);
      ++rep.inner_checks;
      flag("inner", anchor.t, t, margin);
    }
    // outer
    const double window = h_max > 0.0 ? anchor.circumradius / h_max
                                      : std::numeric_limits<double>::infinity();
    for (std::size_t m = k + 1; m < count; ++m) {
      const double elapsed = trajectory[m].t - anchor.t;
      if (elapsed > window) break;
      const double margin = h_max * elapsed + anchor.circumradius -
                            support_gap(states[m], anchor.outer_center).max;
      rep.worst_outer_margin = std::min(rep.worst_outer_margin, margin);
      ++rep.outer_checks;
      flag("outer", anchor.t, trajectory[m].t, margin);
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Alexandrov-Fenchel

struct AlexandrovFenchel {
  double integral_mean_curvature;  // int H dmu
  double bound;                    // C_n |Omega|^((n-1)/(n+1))
  double margin;
};

/// int H dmu >= C_n |Omega|^((n-1)/(n+1)), with C_n fixed by equality on balls.
template <class Geometry>
AlexandrovFenchel alexandrov_fenchel_check(const Geometry& geometry) {
  constexpr int n = Geometry::dimension;
  const auto g = geometry.local_geometry();
  const auto m = geometry.measures_from(g);
  double integral = 0.0;
  for (std::size_t j = 0; j < geometry.size(); ++j)
    integral += g.mean_curvature[j] * g.area_element[j];
  double bound;
  if constexpr (n == 1) {
    bound = 2.0 * pi;
  } else {
    const double c2 = 8.0 * pi / std::cbrt(4.0 * pi / 3.0);
    bound = c2 * std::cbrt(m.enclosed);
  }
  return {integral, bound, integral - bound};
}

}  // namespace cflow
