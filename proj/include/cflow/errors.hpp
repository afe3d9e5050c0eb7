#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cflow {

/// Malformed speed or shape specification text.
class SpecError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Speed evaluated outside (0, inf).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A principal radius of curvature became nonpositive at some node.
class ConvexityLost : public std::runtime_error {
 public:
  ConvexityLost(std::size_t node, double angle, double radius)
      : std::runtime_error("convexity lost at node " + std::to_string(node) +
                           " (theta=" + std::to_string(angle) +
                           ", radius=" + std::to_string(radius) + ")"),
        node_(node),
        angle_(angle),
        radius_(radius) {}

  std::size_t node() const noexcept { return node_; }
  double angle() const noexcept { return angle_; }
  double radius() const noexcept { return radius_; }

 private:
  std::size_t node_;
  double angle_;
  double radius_;
};

/// Initial data that is not strictly convex, reported with the worst radius.
class InvalidInitialData : public std::invalid_argument {
 public:
  InvalidInitialData(const std::string& what, double min_radius, double angle)
      : std::invalid_argument(what), min_radius_(min_radius), angle_(angle) {}

  double min_radius() const noexcept { return min_radius_; }
  double angle() const noexcept { return angle_; }

 private:
  double min_radius_;
  double angle_;
};

/// Non-finite values appeared during time stepping.
class NumericalFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace cflow
