#pragma once

// The flow law  du/dt = h(t) - phi(H)  in the Gauss-map parametrisation, and
// the nonlocal forcing h(t) that conserves the enclosed measure (volume mode)
// or the boundary measure (area mode).

#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cflow/errors.hpp"
#include "cflow/geometry_common.hpp"
#include "cflow/speed.hpp"

namespace cflow {

enum class ConstraintMode { VolumePreserving, AreaPreserving, Standard };

inline const char* to_string(ConstraintMode m) {
  switch (m) {
    case ConstraintMode::VolumePreserving: return "volume";
    case ConstraintMode::AreaPreserving: return "area";
    case ConstraintMode::Standard: return "standard";
  }
  return "?";
}

inline ConstraintMode parse_mode(std::string_view text) {
  if (text == "volume") return ConstraintMode::VolumePreserving;
  if (text == "area") return ConstraintMode::AreaPreserving;
  if (text == "standard") return ConstraintMode::Standard;
  throw SpecError("unknown mode '" + std::string(text) + "' (expected volume, area, standard)");
}

template <class Geometry>
struct FlowState {
  Geometry geometry;
  double t = 0.0;
  ConstraintMode mode = ConstraintMode::VolumePreserving;
  SpeedFunction speed;
};

template <class Geometry>
FlowState<Geometry> make_state(Geometry geometry, ConstraintMode mode, SpeedFunction speed,
                               double t = 0.0) {
  return FlowState<Geometry>{std::move(geometry), t, mode, std::move(speed)};
}

/// phi(H_j) for every node.
inline void speed_values(const SpeedFunction& speed, const LocalGeometry& g,
                         std::vector<double>& phi) {
  phi.resize(g.mean_curvature.size());
  speed.values(g.mean_curvature, phi);
}

/// h from per-node speeds, using the same dmu weights as the measures.
///   volume:  h = int phi dmu / |M|
///   area:    h = int H phi dmu / int H dmu
inline double nonlocal_from(const LocalGeometry& g, std::span<const double> phi,
                            ConstraintMode mode) {
  const std::size_t n = phi.size();
  switch (mode) {
    case ConstraintMode::VolumePreserving: {
      double num = 0.0, den = 0.0;
#pragma omp simd reduction(+ : num, den)
      for (std::size_t j = 0; j < n; ++j) {
        num += phi[j] * g.area_element[j];
        den += g.area_element[j];
      }
      return num / den;
    }
    case ConstraintMode::AreaPreserving: {
      double num = 0.0, den = 0.0;
#pragma omp simd reduction(+ : num, den)
      for (std::size_t j = 0; j < n; ++j) {
        const double w = g.mean_curvature[j] * g.area_element[j];
        num += phi[j] * w;
        den += w;
      }
      return num / den;
    }
    case ConstraintMode::Standard:
      return 0.0;
  }
  return 0.0;
}

template <class Geometry>
double nonlocal_term(const FlowState<Geometry>& state) {
  const auto g = state.geometry.local_geometry();
  std::vector<double> phi;
  speed_values(state.speed, g, phi);
  return nonlocal_from(g, phi, state.mode);
}

/// Per-node du/dt = h - phi(H_j).
template <class Geometry>
std::vector<double> rhs(const FlowState<Geometry>& state) {
  const auto g = state.geometry.local_geometry();
  std::vector<double> phi;
  speed_values(state.speed, g, phi);
  const double h = nonlocal_from(g, phi, state.mode);
  for (auto& p : phi) p = h - p;
  return phi;
}

}  // namespace cflow
