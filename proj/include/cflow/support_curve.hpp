#pragma once

// Strictly convex closed plane curves described by their support function
// u(theta) on a uniform periodic grid of the Gauss circle, with outer normal
// nu(theta) = (cos theta, sin theta). The radius of curvature is
// rho = u + u'' and the curvature is H = 1 / rho.

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
#include "cflow/speed.hpp"

namespace cflow {

struct CurveGrid {
  std::size_t size = 0;
  double spacing = 0.0;
  std::vector<double> angle;
  std::vector<double> cos;
  std::vector<double> sin;
};

inline std::shared_ptr<const CurveGrid> curve_grid(std::size_t n) {
  static std::mutex mutex;
  static std::map<std::size_t, std::shared_ptr<const CurveGrid>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[n];
  if (!slot) {
    auto g = std::make_shared<CurveGrid>();
    g->size = n;
    g->spacing = 2.0 * pi / static_cast<double>(n);
    for (std::size_t j = 0; j < n; ++j) {
      const double t = g->spacing * static_cast<double>(j);
      g->angle.push_back(t);
      g->cos.push_back(std::cos(t));
      g->sin.push_back(std::sin(t));
    }
    slot = std::move(g);
  }
  return slot;
}

struct CurvatureProfile {
  std::vector<double> radius;     // rho_j
  std::vector<double> curvature;  // H_j
};

class SupportCurve {
 public:
  static constexpr int dimension = 1;

  explicit SupportCurve(std::vector<double> u) : u_(std::move(u)) {
    require_grid_size(u_.size());
    grid_ = curve_grid(u_.size());
  }

  /// New curve on the same grid.
  SupportCurve with_values(std::vector<double> u) const {
    SupportCurve c(*this);
    c.u_ = std::move(u);
    return c;
  }

  std::size_t size() const noexcept { return u_.size(); }
  double spacing() const noexcept { return grid_->spacing; }
  double angle(std::size_t j) const noexcept { return grid_->angle[j]; }
  std::span<const double> values() const noexcept { return u_; }
  double operator[](std::size_t j) const noexcept { return u_[j]; }
  const CurveGrid& grid() const noexcept { return *grid_; }

  /// Outer unit normal at node j.
  Point2 normal(std::size_t j) const noexcept { return {grid_->cos[j], grid_->sin[j]}; }

  /// Fills H, |A|^2 and dmu = rho dtheta for support values `u` on this grid.
  void evaluate(std::span<const double> u, LocalGeometry& out) const {
    const std::size_t n = grid_->size;
    thread_local std::vector<double> pad;
    pad.resize(n + 4);
    pad[0] = u[n - 2];
    pad[1] = u[n - 1];
    std::copy(u.begin(), u.end(), pad.begin() + 2);
    pad[n + 2] = u[0];
    pad[n + 3] = u[1];
    const double h = grid_->spacing;
    const double inv_h2 = 1.0 / (h * h);
    out.resize(n);
    double min_r = std::numeric_limits<double>::infinity();
    double sum = 0.0;
    const double* pu = pad.data() + 2;
    double* H = out.mean_curvature.data();
    double* A2 = out.curvature_norm2.data();
    double* dmu = out.area_element.data();
#pragma omp simd reduction(min : min_r) reduction(+ : sum)
    for (std::size_t j = 0; j < n; ++j) {
      const double rho = pu[j] + detail::d2_4th(pu + j, inv_h2);
      const double k = 1.0 / rho;
      H[j] = k;
      A2[j] = k * k;
      dmu[j] = rho * h;
      sum += rho;
      min_r = std::min(min_r, rho);
    }
    out.min_radius = min_r;
    out.min_radius_node = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (dmu[j] == min_r * h) {
        out.min_radius_node = j;
        break;
      }
    }
    if (!std::isfinite(sum))
      throw NumericalFailure("non-finite radius of curvature on the curve");
    if (!(min_r > 0.0))
      throw ConvexityLost(out.min_radius_node, angle(out.min_radius_node), min_r);
  }

  LocalGeometry local_geometry() const {
    LocalGeometry g;
    evaluate(u_, g);
    return g;
  }

  /// rho = u + u'' and H = 1/rho per node; throws ConvexityLost.
  CurvatureProfile curvature_profile() const {
    const auto g = local_geometry();
    CurvatureProfile p;
    p.curvature = g.mean_curvature;
    p.radius.resize(size());
    for (std::size_t j = 0; j < size(); ++j) p.radius[j] = g.area_element[j] / spacing();
    return p;
  }

  /// (perimeter, enclosed area) by periodic trapezoidal quadrature.
  Measures measures() const { return measures_from(local_geometry()); }

  Measures measures_from(const LocalGeometry& g) const {
    Measures m;
    for (std::size_t j = 0; j < size(); ++j) {
      m.boundary += g.area_element[j];
      m.enclosed += u_[j] * g.area_element[j];
    }
    m.enclosed *= 0.5;
    return m;
  }

  /// u'(theta) by the same 4th-order periodic stencil.
  std::vector<double> derivative() const {
    const std::size_t n = size();
    std::vector<double> d(n);
    const double inv_h = 1.0 / spacing();
    for (std::size_t j = 0; j < n; ++j) {
      const double p[5] = {u_[(j + n - 2) % n], u_[(j + n - 1) % n], u_[j], u_[(j + 1) % n],
                           u_[(j + 2) % n]};
      d[j] = detail::d1_4th(p + 2, inv_h);
    }
    return d;
  }

  /// Boundary points F = u nu + u' nu^perp.
  std::vector<Point2> boundary_points() const {
    const auto du = derivative();
    std::vector<Point2> pts(size());
    for (std::size_t j = 0; j < size(); ++j) {
      const double c = grid_->cos[j], s = grid_->sin[j];
      pts[j] = {u_[j] * c - du[j] * s, u_[j] * s + du[j] * c};
    }
    return pts;
  }

  /// Support function of the curve translated by (cx, cy).
  SupportCurve translated(double cx, double cy) const {
    std::vector<double> v(u_);
    for (std::size_t j = 0; j < size(); ++j) v[j] += cx * grid_->cos[j] + cy * grid_->sin[j];
    return with_values(std::move(v));
  }

  SupportCurve scaled(double lambda) const {
    std::vector<double> v(u_);
    for (auto& x : v) x *= lambda;
    return with_values(std::move(v));
  }

 private:
  std::vector<double> u_;
  std::shared_ptr<const CurveGrid> grid_;
};

namespace detail {

inline std::vector<std::pair<int, double>> parse_harmonics(std::string_view list,
                                                           std::string_view context) {
  std::vector<std::pair<int, double>> out;
  for (auto item : split(list, ',')) {
    const auto parts = split(item, ':');
    if (parts.size() != 2)
      throw SpecError("harmonic '" + std::string(item) + "' must read <k>:<eps> in " +
                      std::string(context));
    const double k = parse_real(parts[0], context);
    if (k != std::floor(k)) throw SpecError("harmonic index must be an integer in " + std::string(context));
    out.emplace_back(static_cast<int>(k), parse_real(parts[1], context));
  }
  return out;
}

inline double parse_positive(std::string_view text, std::string_view context) {
  const double x = parse_real(text, context);
  if (!(x > 0.0) || !std::isfinite(x))
    throw SpecError("value '" + std::string(text) + "' must be positive in " + std::string(context));
  return x;
}

}  // namespace detail

/// Builds a curve from `ball:r`, `ellipse:a,b` or `perturbed:r0;k1:eps1[,...]`
/// (harmonics cos(k theta), k >= 2) and validates strict convexity.
inline SupportCurve make_curve(std::string_view spec, std::size_t n) {
  require_grid_size(n);
  const auto grid = curve_grid(n);
  const auto [name, args] = detail::split_head(spec);
  std::vector<double> u(n);
  if (name == "ball") {
    const double r = detail::parse_positive(args, spec);
    std::fill(u.begin(), u.end(), r);
  } else if (name == "ellipse") {
    const auto ab = detail::split(args, ',');
    if (ab.size() != 2) throw SpecError("ellipse spec must read ellipse:a,b");
    const double a = detail::parse_positive(ab[0], spec);
    const double b = detail::parse_positive(ab[1], spec);
    for (std::size_t j = 0; j < n; ++j) {
      const double c = grid->cos[j], s = grid->sin[j];
      u[j] = std::sqrt(a * a * c * c + b * b * s * s);
    }
  } else if (name == "perturbed") {
    const auto semi = args.find(';');
    if (semi == std::string_view::npos)
      throw SpecError("perturbed spec must read perturbed:r0;k1:eps1[,...]");
    const double r0 = detail::parse_positive(args.substr(0, semi), spec);
    const auto harmonics = detail::parse_harmonics(args.substr(semi + 1), spec);
    std::fill(u.begin(), u.end(), r0);
    for (auto [k, eps] : harmonics) {
      if (k < 2) throw SpecError("curve perturbation harmonics must satisfy k >= 2");
      for (std::size_t j = 0; j < n; ++j) u[j] += eps * std::cos(k * grid->angle[j]);
    }
  } else {
    throw SpecError("unknown curve shape '" + std::string(spec) +
                    "' (expected ball:r, ellipse:a,b, perturbed:r0;k:eps,...)");
  }
  SupportCurve curve(std::move(u));
  LocalGeometry g;
  try {
    curve.evaluate(curve.values(), g);
  } catch (const ConvexityLost& e) {
    throw InvalidInitialData("initial curve '" + std::string(spec) +
                                 "' is not strictly convex: min rho = " +
                                 std::to_string(e.radius()) + " at theta = " +
                                 std::to_string(e.angle()),
                             e.radius(), e.angle());
  }
  return curve;
}

}  // namespace cflow
