#pragma once

// File writers for run artifacts: the per-record CSV and geometry snapshots.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "cflow/cflow.hpp"

namespace cflow::cli {

namespace fs = std::filesystem;

/// Shortest text that round-trips the double.
inline std::string num(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::ofstream open_for_write(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

inline void write_run_csv(const fs::path& path, std::span<const DiagnosticsRecord> records) {
  auto out = open_for_write(path);
  out << "t,dt,area,volume,isoper,inradius,circumradius,sphericity,Hmin,Hmax,h,dev\n";
  for (const auto& r : records) {
    out << num(r.t) << ',' << num(r.dt) << ',' << num(r.boundary) << ',' << num(r.enclosed)
        << ',' << num(r.isoperimetric) << ',' << num(r.inradius) << ',' << num(r.circumradius)
        << ',' << num(r.sphericity) << ',' << num(r.H_min) << ',' << num(r.H_max) << ','
        << num(r.h) << ',' << num(r.dev) << '\n';
  }
}

inline std::string snapshot_stem(std::size_t index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%05zu", index);
  return buf;
}

/// theta, u, x, y and an SVG outline of the curve.
inline void write_snapshot(const fs::path& dir, std::size_t index, const SupportCurve& curve,
                           double t) {
  const auto pts = curve.boundary_points();
  const std::string stem = snapshot_stem(index);
  {
    auto out = open_for_write(dir / (stem + ".csv"));
    out << "theta,u,x,y\n";
    for (std::size_t j = 0; j < curve.size(); ++j)
      out << num(curve.angle(j)) << ',' << num(curve[j]) << ',' << num(pts[j].x) << ','
          << num(pts[j].y) << '\n';
  }
  double xmin = pts[0].x, xmax = pts[0].x, ymin = pts[0].y, ymax = pts[0].y;
  for (const auto& p : pts) {
    xmin = std::min(xmin, p.x);
    xmax = std::max(xmax, p.x);
    ymin = std::min(ymin, p.y);
    ymax = std::max(ymax, p.y);
  }
  const double pad = 0.05 * std::max(xmax - xmin, ymax - ymin);
  const double w = xmax - xmin + 2 * pad, hgt = ymax - ymin + 2 * pad;
  auto out = open_for_write(dir / (stem + ".svg"));
  // SVG's y axis points down, so y is mirrored.
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"" << num(xmin - pad) << ' '
      << num(-ymax - pad) << ' ' << num(w) << ' ' << num(hgt) << "\" width=\"480\" height=\""
      << static_cast<int>(480.0 * hgt / w) << "\">\n";
  out << "  <title>t = " << num(t) << "</title>\n";
  out << "  <polygon fill=\"none\" stroke=\"black\" stroke-width=\"" << num(w / 400.0)
      << "\" points=\"";
  for (const auto& p : pts) out << num(p.x) << ',' << num(-p.y) << ' ';
  out << "\"/>\n</svg>\n";
}

/// theta, u, radial, z and an OBJ surface of revolution with one longitude
/// per grid node.
inline void write_snapshot(const fs::path& dir, std::size_t index, const AxisymSupport& surface,
                           double t) {
  const auto mer = surface.meridian_points();
  const std::string stem = snapshot_stem(index);
  const std::size_t n = surface.size();
  {
    auto out = open_for_write(dir / (stem + ".csv"));
    out << "theta,u,radial,z\n";
    for (std::size_t j = 0; j < n; ++j)
      out << num(surface.angle(j)) << ',' << num(surface[j]) << ',' << num(mer[j].x) << ','
          << num(mer[j].y) << '\n';
  }
  auto out = open_for_write(dir / (stem + ".obj"));
  out << "# surface of revolution, t = " << num(t) << "\n";
  const std::size_t lon = n;
  out << "v 0 0 " << num(surface.north_pole_value()) << '\n';
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t k = 0; k < lon; ++k) {
      const double a = 2.0 * pi * static_cast<double>(k) / static_cast<double>(lon);
      out << "v " << num(mer[j].x * std::cos(a)) << ' ' << num(mer[j].x * std::sin(a)) << ' '
          << num(mer[j].y) << '\n';
    }
  }
  out << "v 0 0 " << num(-surface.south_pole_value()) << '\n';
  // OBJ indices are 1-based; vertex 1 is the north pole.
  auto vid = [&](std::size_t j, std::size_t k) { return 2 + j * lon + (k % lon); };
  const std::size_t south = 2 + n * lon;
  for (std::size_t k = 0; k < lon; ++k) out << "f 1 " << vid(0, k) << ' ' << vid(0, k + 1) << '\n';
  for (std::size_t j = 0; j + 1 < n; ++j)
    for (std::size_t k = 0; k < lon; ++k)
      out << "f " << vid(j, k) << ' ' << vid(j + 1, k) << ' ' << vid(j + 1, k + 1) << ' '
          << vid(j, k + 1) << '\n';
  for (std::size_t k = 0; k < lon; ++k)
    out << "f " << vid(n - 1, k + 1) << ' ' << vid(n - 1, k) << ' ' << south << '\n';
}

}  // namespace cflow::cli
