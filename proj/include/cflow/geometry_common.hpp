#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include "cflow/errors.hpp"

namespace cflow {

inline constexpr double pi = std::numbers::pi;

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

/// |M| (perimeter or surface area) and |Omega| (enclosed area or volume).
struct Measures {
  double boundary = 0.0;
  double enclosed = 0.0;
};

/// Per-node curvature data shared by every geometry type.
///
/// `area_element` holds the quadrature weights of dmu, so that
/// sum(area_element) is |M| and sum(u * area_element) / (n + 1) is |Omega|.
struct LocalGeometry {
  std::vector<double> mean_curvature;    // H_j
  std::vector<double> curvature_norm2;   // |A|^2_j = sum_i r_i^-2
  std::vector<double> area_element;      // dmu_j
  double min_radius = std::numeric_limits<double>::infinity();
  std::size_t min_radius_node = 0;

  void resize(std::size_t n) {
    mean_curvature.resize(n);
    curvature_norm2.resize(n);
    area_element.resize(n);
  }
};

/// omega_n, the measure of the unit n-sphere.
constexpr double unit_sphere_measure(int n) { return n == 1 ? 2.0 * pi : 4.0 * pi; }

/// (n+1)^n omega_n, the isoperimetric ratio of a ball.
constexpr double ball_isoperimetric_ratio(int n) {
  return n == 1 ? 4.0 * pi : 9.0 * unit_sphere_measure(2);
}

inline bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

inline void require_grid_size(std::size_t n) {
  if (n < 64 || !is_power_of_two(n)) {
    throw SpecError("grid size " + std::to_string(n) + " must be a power of two >= 64");
  }
}

namespace detail {

// 4th-order central differences on a padded array (two ghosts each side).
inline double d1_4th(const double* p, double inv_h) {
  return (p[-2] - 8.0 * p[-1] + 8.0 * p[1] - p[2]) * (inv_h / 12.0);
}

inline double d2_4th(const double* p, double inv_h2) {
  return (-p[-2] + 16.0 * p[-1] - 30.0 * p[0] + 16.0 * p[1] - p[2]) * (inv_h2 / 12.0);
}

// Splits "<name>:<rest>".
inline std::pair<std::string_view, std::string_view> split_head(std::string_view spec) {
  const auto pos = spec.find(':');
  if (pos == std::string_view::npos) return {spec, {}};
  return {spec.substr(0, pos), spec.substr(pos + 1)};
}

}  // namespace detail

}  // namespace cflow
