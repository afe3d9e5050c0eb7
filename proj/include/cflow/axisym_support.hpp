#pragma once

// Strictly convex bodies of revolution in R^3, described by the support
// function u(theta) of the polar angle theta of the outer normal (measured
// from the symmetry axis). Samples live at cell centres theta_j = (j+1/2) pi/N
// and are extended across both poles by even reflection, so u'(pole) = 0.
//
// Principal radii:  r1 = u'' + u        (meridian)
//                   r2 = u' cot(theta) + u  (parallel)

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cflow/geometry_common.hpp"
#include "cflow/support_curve.hpp"

namespace cflow {

struct AxisymGrid {
  std::size_t size = 0;
  double spacing = 0.0;
  std::vector<double> angle;
  std::vector<double> cos;
  std::vector<double> sin;
  std::vector<double> cot;
  /// 2 pi * integral of sin(theta) over cell j; sums to 4 pi exactly.
  std::vector<double> solid_angle;
};

inline std::shared_ptr<const AxisymGrid> axisym_grid(std::size_t n) {
  static std::mutex mutex;
  static std::map<std::size_t, std::shared_ptr<const AxisymGrid>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[n];
  if (!slot) {
    auto g = std::make_shared<AxisymGrid>();
    g->size = n;
    g->spacing = pi / static_cast<double>(n);
    const double half = std::sin(0.5 * g->spacing);
    for (std::size_t j = 0; j < n; ++j) {
      const double t = g->spacing * (static_cast<double>(j) + 0.5);
      g->angle.push_back(t);
      g->cos.push_back(std::cos(t));
      g->sin.push_back(std::sin(t));
      g->cot.push_back(std::cos(t) / std::sin(t));
      g->solid_angle.push_back(4.0 * pi * std::sin(t) * half);
    }
    slot = std::move(g);
  }
  return slot;
}

struct PrincipalRadii {
  std::vector<double> meridian;  // r1
  std::vector<double> parallel;  // r2
  std::vector<double> mean_curvature;
};

class AxisymSupport {
 public:
  static constexpr int dimension = 2;

  explicit AxisymSupport(std::vector<double> u) : u_(std::move(u)) {
    require_grid_size(u_.size());
    grid_ = axisym_grid(u_.size());
  }

  AxisymSupport with_values(std::vector<double> u) const {
    AxisymSupport s(*this);
    s.u_ = std::move(u);
    return s;
  }

  std::size_t size() const noexcept { return u_.size(); }
  double spacing() const noexcept { return grid_->spacing; }
  double angle(std::size_t j) const noexcept { return grid_->angle[j]; }
  std::span<const double> values() const noexcept { return u_; }
  double operator[](std::size_t j) const noexcept { return u_[j]; }
  const AxisymGrid& grid() const noexcept { return *grid_; }

  /// Fills H = 1/r1 + 1/r2, |A|^2 and dmu = r1 r2 dOmega.
  void evaluate(std::span<const double> u, LocalGeometry& out) const {
    const std::size_t n = grid_->size;
    thread_local std::vector<double> pad;
    fill_padded(u, pad);
    const double h = grid_->spacing;
    const double inv_h = 1.0 / h;
    const double inv_h2 = inv_h * inv_h;
    out.resize(n);
    double min_r = std::numeric_limits<double>::infinity();
    double sum = 0.0;
    const double* cot = grid_->cot.data();
    const double* dw = grid_->solid_angle.data();
    const double* pu = pad.data() + 2;
    double* H = out.mean_curvature.data();
    double* A2 = out.curvature_norm2.data();
    double* dmu = out.area_element.data();
#pragma omp simd reduction(min : min_r) reduction(+ : sum)
    for (std::size_t j = 0; j < n; ++j) {
      const double* p = pu + j;
      const double r1 = p[0] + detail::d2_4th(p, inv_h2);
      const double r2 = p[0] + detail::d1_4th(p, inv_h) * cot[j];
      const double inv = 1.0 / (r1 * r2);
      const double k1 = r2 * inv;
      const double k2 = r1 * inv;
      H[j] = k1 + k2;
      A2[j] = k1 * k1 + k2 * k2;
      dmu[j] = r1 * r2 * dw[j];
      sum += r1 + r2;
      min_r = std::min(min_r, std::min(r1, r2));
    }
    out.min_radius = min_r;
    out.min_radius_node = 0;
    for (std::size_t j = 0; j < n; ++j) {
      const double* p = pu + j;
      const double r1 = p[0] + detail::d2_4th(p, inv_h2);
      const double r2 = p[0] + detail::d1_4th(p, inv_h) * cot[j];
      if (std::min(r1, r2) == min_r) {
        out.min_radius_node = j;
        break;
      }
    }
    if (!std::isfinite(sum))
      throw NumericalFailure("non-finite principal radius on the surface");
    if (!(min_r > 0.0))
      throw ConvexityLost(out.min_radius_node, angle(out.min_radius_node), min_r);
  }

  LocalGeometry local_geometry() const {
    LocalGeometry g;
    evaluate(u_, g);
    return g;
  }

  /// (r1, r2, H) per node; throws ConvexityLost.
  PrincipalRadii principal_radii() const {
    const auto g = local_geometry();  // convexity check
    (void)g;
    const auto du = derivative();
    const auto d2u = second_derivative();
    PrincipalRadii p;
    for (std::size_t j = 0; j < size(); ++j) {
      const double r1 = u_[j] + d2u[j];
      const double r2 = u_[j] + du[j] * grid_->cot[j];
      p.meridian.push_back(r1);
      p.parallel.push_back(r2);
      p.mean_curvature.push_back(1.0 / r1 + 1.0 / r2);
    }
    return p;
  }

  /// (surface area, enclosed volume).
  Measures measures() const { return measures_from(local_geometry()); }

  Measures measures_from(const LocalGeometry& g) const {
    Measures m;
    for (std::size_t j = 0; j < size(); ++j) {
      m.boundary += g.area_element[j];
      m.enclosed += u_[j] * g.area_element[j];
    }
    m.enclosed /= 3.0;
    return m;
  }

  std::vector<double> derivative() const {
    std::vector<double> pad;
    fill_padded(u_, pad);
    std::vector<double> d(size());
    for (std::size_t j = 0; j < size(); ++j) d[j] = detail::d1_4th(&pad[j + 2], 1.0 / spacing());
    return d;
  }

  std::vector<double> second_derivative() const {
    std::vector<double> pad;
    fill_padded(u_, pad);
    const double inv_h2 = 1.0 / (spacing() * spacing());
    std::vector<double> d(size());
    for (std::size_t j = 0; j < size(); ++j) d[j] = detail::d2_4th(&pad[j + 2], inv_h2);
    return d;
  }

  /// Support values on the axis (theta = 0 and theta = pi), 4th-order
  /// extrapolation from the even extension.
  double north_pole_value() const { return (9.0 * u_[0] - u_[1]) / 8.0; }
  double south_pole_value() const {
    const std::size_t n = size();
    return (9.0 * u_[n - 1] - u_[n - 2]) / 8.0;
  }

  /// Meridian profile points (distance from axis, height), north to south.
  std::vector<Point2> meridian_points() const {
    const auto du = derivative();
    std::vector<Point2> pts(size());
    for (std::size_t j = 0; j < size(); ++j) {
      const double c = grid_->cos[j], s = grid_->sin[j];
      pts[j] = {u_[j] * s + du[j] * c, u_[j] * c - du[j] * s};
    }
    return pts;
  }

  /// Translation by c along the symmetry axis.
  AxisymSupport translated(double c) const {
    std::vector<double> v(u_);
    for (std::size_t j = 0; j < size(); ++j) v[j] += c * grid_->cos[j];
    return with_values(std::move(v));
  }

  AxisymSupport scaled(double lambda) const {
    std::vector<double> v(u_);
    for (auto& x : v) x *= lambda;
    return with_values(std::move(v));
  }

 private:
  void fill_padded(std::span<const double> u, std::vector<double>& pad) const {
    const std::size_t n = u.size();
    pad.resize(n + 4);
    pad[0] = u[1];
    pad[1] = u[0];
    std::copy(u.begin(), u.end(), pad.begin() + 2);
    pad[n + 2] = u[n - 1];
    pad[n + 3] = u[n - 2];
  }

  std::vector<double> u_;
  std::shared_ptr<const AxisymGrid> grid_;
};

/// Builds a body of revolution from `ball:r`, `spheroid:a,c` (equatorial a,
/// polar c) or `perturbed:r0;m1:eps1[,...]` (cos(m theta), m >= 2 even).
inline AxisymSupport make_surface(std::string_view spec, std::size_t n) {
  require_grid_size(n);
  const auto grid = axisym_grid(n);
  const auto [name, args] = detail::split_head(spec);
  std::vector<double> u(n);
  if (name == "ball") {
    const double r = detail::parse_positive(args, spec);
    std::fill(u.begin(), u.end(), r);
  } else if (name == "spheroid") {
    const auto ac = detail::split(args, ',');
    if (ac.size() != 2) throw SpecError("spheroid spec must read spheroid:a,c");
    const double a = detail::parse_positive(ac[0], spec);
    const double c = detail::parse_positive(ac[1], spec);
    for (std::size_t j = 0; j < n; ++j) {
      const double co = grid->cos[j], si = grid->sin[j];
      u[j] = std::sqrt(c * c * co * co + a * a * si * si);
    }
  } else if (name == "perturbed") {
    const auto semi = args.find(';');
    if (semi == std::string_view::npos)
      throw SpecError("perturbed spec must read perturbed:r0;m1:eps1[,...]");
    const double r0 = detail::parse_positive(args.substr(0, semi), spec);
    const auto harmonics = detail::parse_harmonics(args.substr(semi + 1), spec);
    std::fill(u.begin(), u.end(), r0);
    for (auto [m, eps] : harmonics) {
      if (m < 2 || m % 2 != 0)
        throw SpecError("surface perturbation harmonics must be even and >= 2");
      for (std::size_t j = 0; j < n; ++j) u[j] += eps * std::cos(m * grid->angle[j]);
    }
  } else {
    throw SpecError("unknown surface shape '" + std::string(spec) +
                    "' (expected ball:r, spheroid:a,c, perturbed:r0;m:eps,...)");
  }
  AxisymSupport surface(std::move(u));
  LocalGeometry g;
  try {
    surface.evaluate(surface.values(), g);
  } catch (const ConvexityLost& e) {
    throw InvalidInitialData("initial surface '" + std::string(spec) +
                                 "' is not strictly convex: min(r1, r2) = " +
                                 std::to_string(e.radius()) + " at theta = " +
                                 std::to_string(e.angle()),
                             e.radius(), e.angle());
  }
  return surface;
}

}  // namespace cflow
