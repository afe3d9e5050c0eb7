#include <gtest/gtest.h>

#include <cmath>
#include <string>
#include <vector>

#include "cflow/cflow.hpp"
#include "oracles.hpp"

using namespace cflow;

namespace {

const std::vector<std::string> kSpeeds = {"powersum:1:1", "powersum:2:1", "powersum:0.5:1",
                                          "log1p", "expm1", "powersum:1:1,2:0.5"};

// Volume- and area-mode h for the exact ellipse on a fine trapezoidal grid.
double ellipse_h_oracle(const SpeedFunction& s, double a, double b, ConstraintMode mode) {
  const int n = 2048;
  double num = 0, den = 0;
  for (int j = 0; j < n; ++j) {
    const double rho = oracle::ellipse_rho(a, b, 2 * oracle::kPi * j / n);
    if (mode == ConstraintMode::VolumePreserving) {
      num += s.value(1 / rho) * rho;
      den += rho;
    } else {
      num += s.value(1 / rho);
      den += 1;
    }
  }
  return num / den;
}

}  // namespace

TEST(FlowLaw, ModeNames) {
  EXPECT_EQ(parse_mode("volume"), ConstraintMode::VolumePreserving);
  EXPECT_EQ(parse_mode("area"), ConstraintMode::AreaPreserving);
  EXPECT_EQ(parse_mode("standard"), ConstraintMode::Standard);
  EXPECT_THROW(parse_mode("Volume"), SpecError);
  for (auto m : {ConstraintMode::VolumePreserving, ConstraintMode::AreaPreserving,
                 ConstraintMode::Standard})
    EXPECT_EQ(parse_mode(to_string(m)), m);
}

TEST(FlowLaw, BallNonlocalTermIsSpeedOfBall) {
  for (const auto& spec : kSpeeds) {
    const auto s = parse_speed(spec);
    for (auto mode : {ConstraintMode::VolumePreserving, ConstraintMode::AreaPreserving}) {
      const double r = 1.7;
      const double h1 = nonlocal_term(make_state(make_curve("ball:1.7", 128), mode, s));
      EXPECT_NEAR(h1, s.value(1 / r), 1e-13 * s.value(1 / r)) << spec;
      const double h2 = nonlocal_term(make_state(make_surface("ball:1.7", 128), mode, s));
      EXPECT_NEAR(h2, s.value(2 / r), 1e-13 * s.value(2 / r)) << spec;
      for (double v : rhs(make_state(make_surface("ball:1.7", 128), mode, s)))
        EXPECT_NEAR(v, 0.0, 1e-12 * s.value(2 / r));
    }
    EXPECT_EQ(nonlocal_term(make_state(make_curve("ball:1", 64), ConstraintMode::Standard, s)), 0.0);
  }
}

TEST(FlowLaw, EllipseNonlocalTermMatchesFineQuadrature) {
  for (const auto& spec : kSpeeds) {
    const auto s = parse_speed(spec);
    for (auto mode : {ConstraintMode::VolumePreserving, ConstraintMode::AreaPreserving}) {
      const double expect = ellipse_h_oracle(s, 2, 1, mode);
      const double got = nonlocal_term(make_state(make_curve("ellipse:2,1", 256), mode, s));
      EXPECT_NEAR(got, expect, 1e-6 * expect) << spec << " " << to_string(mode);
    }
  }
}

TEST(FlowLaw, RightHandSideSignsAndConstraint) {
  const auto s = parse_speed("powersum:1:1");
  const auto curve = make_curve("ellipse:2,1", 256);
  const auto g = curve.local_geometry();
  for (auto mode : {ConstraintMode::VolumePreserving, ConstraintMode::AreaPreserving}) {
    const auto v = rhs(make_state(curve, mode, s));
    EXPECT_LT(v[0], 0.0);   // tip of the long axis: H = 2, moves in
    EXPECT_GT(v[64], 0.0);  // flat side: H = 1/4, moves out
    double total = 0, scale = 0;
    for (std::size_t j = 0; j < v.size(); ++j) {
      const double w = mode == ConstraintMode::VolumePreserving
                           ? g.area_element[j]
                           : g.area_element[j] * g.mean_curvature[j];
      total += v[j] * w;
      scale += std::abs(v[j] * w);
    }
    EXPECT_NEAR(total, 0.0, 1e-13 * scale);
  }
}

TEST(Engine, StepSizeFollowsParabolicRestriction) {
  const auto s = parse_speed("powersum:2:1");
  auto state = make_state(make_curve("ball:2", 256), ConstraintMode::VolumePreserving, s);
  FlowConfig cfg;
  const auto next = step(state, cfg);
  // D = phi'(1/2) * (1/2)^2 = 1/4.
  const double dtheta = 2 * oracle::kPi / 256;
  EXPECT_NEAR(next.t, 0.25 * dtheta * dtheta / 0.25, 1e-15);
  Stepper<AxisymSupport> st;
  auto s2 = make_state(make_surface("ball:1", 128), ConstraintMode::VolumePreserving, s);
  // D = phi'(2) * (1 + 1) = 8.
  EXPECT_NEAR(st.stable_time_step(s2, 0.5), 0.5 * std::pow(oracle::kPi / 128, 2) / 8, 1e-16);
}

TEST(Engine, ConfigValidation) {
  FlowConfig c;
  EXPECT_NO_THROW(c.validate());
  c.cfl = 0;
  EXPECT_THROW(c.validate(), SpecError);
  c.cfl = 1.5;
  EXPECT_THROW(c.validate(), SpecError);
  c = {};
  c.t_max = -1;
  EXPECT_THROW(c.validate(), SpecError);
  c = {};
  c.record_interval = 0;
  EXPECT_THROW(c.validate(), SpecError);
}

TEST(Engine, BallIsConvergedImmediately) {
  const auto r = run(make_state(make_curve("ball:1", 256), ConstraintMode::AreaPreserving,
                                parse_speed("expm1")),
                     FlowConfig{});
  EXPECT_EQ(r.status, RunStatus::Converged);
  EXPECT_EQ(r.steps, 0u);
  EXPECT_EQ(r.trajectory.size(), 1u);
  EXPECT_EQ(r.trajectory[0].t, 0.0);
}

TEST(Engine, BallStaysPut) {
  FlowConfig cfg;
  cfg.t_max = 0.5;
  cfg.stop_on_convergence = false;
  const auto r = run(make_state(make_surface("ball:1", 128), ConstraintMode::VolumePreserving,
                                parse_speed("powersum:1:1")),
                     cfg);
  EXPECT_EQ(r.status, RunStatus::TimeExhausted);
  EXPECT_DOUBLE_EQ(r.final_state.t, 0.5);
  for (double u : r.final_state.geometry.values()) EXPECT_NEAR(u, 1.0, 1e-10);
}

TEST(Engine, ShrinkingCircleMatchesClosedForm) {
  FlowConfig cfg;
  cfg.t_max = 0.45;
  cfg.record_interval = 0.01;
  const auto r = run(make_state(make_curve("ball:1", 256), ConstraintMode::Standard,
                                parse_speed("powersum:1:1")),
                     cfg);
  EXPECT_EQ(r.status, RunStatus::TimeExhausted);
  EXPECT_DOUBLE_EQ(r.trajectory.back().t, 0.45);
  for (const auto& rec : r.trajectory) {
    EXPECT_NEAR(rec.inradius, std::sqrt(1 - 2 * rec.t), 1e-8) << rec.t;
    EXPECT_NEAR(rec.circumradius, std::sqrt(1 - 2 * rec.t), 1e-8) << rec.t;
  }
}

TEST(Engine, ShrinkingSphereMatchesClosedForm) {
  FlowConfig cfg;
  cfg.t_max = 0.2;
  cfg.record_interval = 0.01;
  const auto r = run(make_state(make_surface("ball:1", 128), ConstraintMode::Standard,
                                parse_speed("powersum:1:1")),
                     cfg);
  for (const auto& rec : r.trajectory)
    EXPECT_NEAR(rec.inradius, std::sqrt(1 - 4 * rec.t), 1e-8) << rec.t;
}

TEST(Engine, ExtinctionGuardStopsStandardFlow) {
  FlowConfig cfg;
  cfg.t_max = 10;
  cfg.extinction_ratio = 0.5;
  const auto r = run(make_state(make_curve("ball:1", 64), ConstraintMode::Standard,
                                parse_speed("powersum:1:1")),
                     cfg);
  EXPECT_EQ(r.status, RunStatus::TimeExhausted);
  EXPECT_NE(r.message.find("extinction"), std::string::npos);
  EXPECT_LT(r.trajectory.back().inradius, 0.5);
  EXPECT_LT(r.final_state.t, 0.5);
}

TEST(Engine, ExtinctionBetweenRecordsIsCaught) {
  // Near t = 1/3 the circle's remaining lifetime is shorter than a record
  // interval, so only a per-step check can stop it before collapse.
  FlowConfig cfg;
  cfg.t_max = 1;
  cfg.record_interval = 0.05;
  const auto r = run(make_state(make_curve("ball:1", 128), ConstraintMode::Standard,
                                parse_speed("powersum:2:1")),
                     cfg);
  EXPECT_EQ(r.status, RunStatus::TimeExhausted) << r.message;
  EXPECT_NE(r.message.find("extinction"), std::string::npos);
  EXPECT_LT(r.trajectory.back().inradius, 0.03);
  EXPECT_LT(r.final_state.t, 1.0 / 3.0);
}

TEST(Engine, EllipseConvergesToConservedBall) {
  const auto r = run(make_state(make_curve("ellipse:2,1", 256), ConstraintMode::VolumePreserving,
                                parse_speed("powersum:1:1")),
                     FlowConfig{});
  ASSERT_EQ(r.status, RunStatus::Converged);
  const auto& last = r.trajectory.back();
  EXPECT_TRUE(is_converged(last, FlowConfig{}));
  EXPECT_NEAR(0.5 * (last.inradius + last.circumradius), std::sqrt(2.0), 1e-6);
  EXPECT_NEAR(last.enclosed, r.trajectory.front().enclosed, 1e-12);
  EXPECT_LT(last.dev, r.trajectory.front().dev);
  // Snapshots hold the first and last record.
  ASSERT_GE(r.snapshots.size(), 2u);
  EXPECT_EQ(r.snapshots.front(), 0u);
  EXPECT_EQ(r.snapshots.back(), r.trajectory.size() - 1);
  EXPECT_EQ(r.states.size(), r.trajectory.size());
}

TEST(Engine, SnapshotCadence) {
  FlowConfig cfg;
  cfg.t_max = 0.1;
  cfg.record_interval = 0.01;
  cfg.snapshot_every = 3;
  const auto r = run(make_state(make_curve("ellipse:2,1", 64), ConstraintMode::AreaPreserving,
                                parse_speed("powersum:1:1")),
                     cfg);
  ASSERT_EQ(r.trajectory.size(), 11u);
  EXPECT_EQ(r.snapshots, (std::vector<std::size_t>{0, 3, 6, 9, 10}));
}

TEST(Engine, RunsAreBitReproducible) {
  FlowConfig cfg;
  cfg.t_max = 0.3;
  auto go = [&] {
    return run(make_state(make_surface("perturbed:1;2:0.1", 64), ConstraintMode::AreaPreserving,
                          parse_speed("log1p")),
               cfg);
  };
  const auto a = go(), b = go();
  ASSERT_EQ(a.trajectory.size(), b.trajectory.size());
  for (std::size_t k = 0; k < a.trajectory.size(); ++k) {
    EXPECT_EQ(a.trajectory[k].boundary, b.trajectory[k].boundary);
    EXPECT_EQ(a.trajectory[k].dev, b.trajectory[k].dev);
  }
  const auto ua = a.final_state.geometry.values(), ub = b.final_state.geometry.values();
  EXPECT_TRUE(std::equal(ua.begin(), ua.end(), ub.begin()));
}

TEST(Engine, NonconvexStateEndsRunWithConvexityLost) {
  std::vector<double> u(64, 1.0);
  u[10] = 0.7;
  const auto r = run(make_state(SupportCurve(u), ConstraintMode::VolumePreserving,
                                parse_speed("powersum:1:1")),
                     FlowConfig{});
  EXPECT_EQ(r.status, RunStatus::ConvexityLost);
  EXPECT_FALSE(r.message.empty());
  EXPECT_EQ(r.failure_time, 0.0);
  Stepper<SupportCurve> st;
  auto s = make_state(SupportCurve(u), ConstraintMode::VolumePreserving, parse_speed("powersum:1:1"));
  EXPECT_THROW(st.advance(s, 0.25, 1.0), ConvexityLost);
  EXPECT_EQ(s.t, 0.0);
}

TEST(Engine, StandardFlowOfPerturbedCurveShrinksMonotonically) {
  FlowConfig cfg;
  cfg.t_max = 5;
  const auto r = run(make_state(make_curve("perturbed:1;2:0.2", 128), ConstraintMode::Standard,
                                parse_speed("powersum:1:1")),
                     cfg);
  EXPECT_NE(r.status, RunStatus::NumericalFailure);
  for (std::size_t k = 1; k < r.trajectory.size(); ++k) {
    EXPECT_LT(r.trajectory[k].enclosed, r.trajectory[k - 1].enclosed);
    EXPECT_LT(r.trajectory[k].boundary, r.trajectory[k - 1].boundary);
  }
}

TEST(SphereOracle, ClosedForms) {
  const auto s = parse_speed("powersum:1:1");
  const auto t1 = sphere_oracle(s, 1, 1.0, 0.375, {.samples = 3});
  EXPECT_NEAR(t1.back().t, 0.375, 1e-15);
  EXPECT_NEAR(t1.back().r, 0.5, 1e-9);
  const auto t2 = sphere_oracle(s, 2, 1.0, 0.1875, {.samples = 3});
  EXPECT_NEAR(t2.back().r, 0.5, 1e-9);
  for (const auto& p : sphere_oracle(s, 1, 1.0, 0.45, {.samples = 45}))
    EXPECT_NEAR(p.r, std::sqrt(1 - 2 * p.t), 1e-9);
}

TEST(SphereOracle, Expm1DecreasesStrictly) {
  const auto t = sphere_oracle(parse_speed("expm1"), 1, 1.0, 0.3, {.samples = 300});
  ASSERT_GT(t.size(), 10u);
  for (std::size_t k = 1; k < t.size(); ++k) EXPECT_LT(t[k].r, t[k - 1].r);
}

TEST(SphereOracle, SquareSpeedClosedForm) {
  // r' = -1/r^2 gives r^3 = 1 - 3t for n = 1.
  const auto t = sphere_oracle(parse_speed("powersum:2:1"), 1, 1.0, 0.3, {.samples = 30});
  for (const auto& p : t) EXPECT_NEAR(p.r, std::cbrt(1 - 3 * p.t), 1e-9);
}
