#pragma once

// Radius of a round sphere moving by the standard flow, r' = -phi(n / r).
// This is the comparison ball used by the inner barrier and the exact
// solution the simulator must reproduce when started from a ball.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "cflow/speed.hpp"

namespace cflow {

struct RadiusSample {
  double t;
  double r;
};

/// Fixed-rule RK4 integrator for r' = -phi(n/r). The step is
/// `step_factor * r / phi(n/r)`, a fixed fraction of the current time scale.
class ComparisonBall {
 public:
  ComparisonBall(const SpeedFunction& speed, int dimension, double step_factor = 1e-4)
      : speed_(&speed), n_(dimension), factor_(step_factor) {}

  double rate(double r) const { return -speed_->value(n_ / r); }

  /// Radius after `duration` starting from `r`; returns early once r <= floor.
  double advance(double r, double duration, double floor = 0.0) const {
    double remaining = duration;
    while (remaining > 0.0 && r > floor) {
      double dt = factor_ * r / speed_->value(n_ / r);
      if (dt >= remaining) dt = remaining;
      const double k1 = rate(r);
      const double k2 = rate(r + 0.5 * dt * k1);
      const double k3 = rate(r + 0.5 * dt * k2);
      const double k4 = rate(r + dt * k3);
      r += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      remaining -= dt;
    }
    return r;
  }

  /// Radii at the sorted times `times`, starting from r(t0) = r0. Stops once
  /// r <= floor; the result may be shorter than `times`.
  std::vector<RadiusSample> trajectory(double t0, double r0, const std::vector<double>& times,
                                       double floor) const {
    std::vector<RadiusSample> out;
    double t = t0, r = r0;
    for (double target : times) {
      if (target < t) continue;
      r = advance(r, target - t, floor);
      t = target;
      if (!(r > floor)) break;
      out.push_back({t, r});
    }
    return out;
  }

  double step_factor() const noexcept { return factor_; }

 private:
  const SpeedFunction* speed_;
  int n_;
  double factor_;
};

struct SphereOracleOptions {
  std::size_t samples = 1000;
  double tolerance = 1e-10;
  double initial_step_factor = 1e-4;
  int max_halvings = 12;
};

/// Comparison-ball trajectory on [0, t_max] sampled at `samples` equal
/// intervals. The step is halved until two successive resolutions agree to
/// `tolerance` at every sample; the trajectory stops at r <= 1e-3 r0.
inline std::vector<RadiusSample> sphere_oracle(const SpeedFunction& speed, int dimension,
                                               double r0, double t_max,
                                               const SphereOracleOptions& opt = {}) {
  std::vector<double> times;
  times.reserve(opt.samples + 1);
  for (std::size_t i = 0; i <= opt.samples; ++i)
    times.push_back(t_max * static_cast<double>(i) / static_cast<double>(opt.samples));
  const double floor = 1e-3 * r0;
  double factor = opt.initial_step_factor;
  auto coarse = ComparisonBall(speed, dimension, factor).trajectory(0.0, r0, times, floor);
  for (int k = 0; k < opt.max_halvings; ++k) {
    factor *= 0.5;
    auto fine = ComparisonBall(speed, dimension, factor).trajectory(0.0, r0, times, floor);
    double diff = 0.0;
    const std::size_t m = std::min(coarse.size(), fine.size());
    for (std::size_t i = 0; i < m; ++i) diff = std::max(diff, std::abs(coarse[i].r - fine[i].r));
    coarse = std::move(fine);
    if (diff <= opt.tolerance) break;
  }
  return coarse;
}

}  // namespace cflow
