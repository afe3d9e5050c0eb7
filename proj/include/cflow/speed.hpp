#pragma once

// Speed functions phi(H) for constrained curvature flows, and a numerical
// audit of the five structural conditions under which the flows are known
// to converge to a round ball:
//   i)   phi(0) = 0 and phi -> inf as alpha -> inf
//   ii)  phi' > 0 on (0, inf)
//   iii) phi' alpha^2 / phi -> 0 at 0 and -> inf at inf
//   iv)  phi' alpha -> 0 at 0
//   v)   phi'' alpha >= -2 phi'

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include "cflow/errors.hpp"

namespace cflow {

enum class SpeedKind { PowerSum, Log1p, Expm1, Arctan };

/// One term c * alpha^k of a power-sum speed.
struct PowerTerm {
  double exponent;
  double coefficient;
};

/// phi and its first two derivatives at a single point.
struct SpeedValues {
  double value;
  double first;
  double second;
};

class SpeedFunction {
 public:
  static SpeedFunction power_sum(std::vector<PowerTerm> terms) {
    if (terms.empty()) throw SpecError("power sum needs at least one term");
    std::string label = "powersum:";
    for (std::size_t i = 0; i < terms.size(); ++i) {
      const auto& t = terms[i];
      if (!(t.exponent > 0.0) || !(t.coefficient > 0.0) ||
          !std::isfinite(t.exponent) || !std::isfinite(t.coefficient)) {
        throw SpecError("power sum term " + std::to_string(i + 1) + " (k=" +
                        format_number(t.exponent) + ", c=" +
                        format_number(t.coefficient) +
                        ") must have positive exponent and coefficient");
      }
      if (i > 0) label += ',';
      label += format_number(t.exponent) + ':' + format_number(t.coefficient);
    }
    SpeedFunction f(SpeedKind::PowerSum, std::move(label));
    f.terms_ = std::move(terms);
    return f;
  }
  static SpeedFunction log1p() { return {SpeedKind::Log1p, "log1p"}; }
  static SpeedFunction expm1() { return {SpeedKind::Expm1, "expm1"}; }
  /// Bounded reference speed used to exercise the admissibility audit.
  static SpeedFunction arctan() { return {SpeedKind::Arctan, "arctan"}; }

  SpeedKind kind() const noexcept { return kind_; }
  const std::string& label() const noexcept { return label_; }
  std::span<const PowerTerm> terms() const noexcept { return terms_; }

  /// phi(alpha); no domain check, callers in hot loops guarantee alpha > 0.
  double value(double alpha) const noexcept {
    switch (kind_) {
      case SpeedKind::PowerSum: {
        double s = 0.0;
        for (const auto& t : terms_) s += t.coefficient * power(alpha, t.exponent);
        return s;
      }
      case SpeedKind::Log1p:
        return std::log1p(alpha);
      case SpeedKind::Expm1:
        return std::expm1(alpha);
      case SpeedKind::Arctan:
        return std::atan(alpha);
    }
    return 0.0;
  }

  double derivative(double alpha) const noexcept {
    switch (kind_) {
      case SpeedKind::PowerSum: {
        double s = 0.0;
        for (const auto& t : terms_)
          s += t.coefficient * t.exponent * power(alpha, t.exponent - 1.0);
        return s;
      }
      case SpeedKind::Log1p:
        return 1.0 / (1.0 + alpha);
      case SpeedKind::Expm1:
        return std::exp(alpha);
      case SpeedKind::Arctan:
        return 1.0 / (1.0 + alpha * alpha);
    }
    return 0.0;
  }

  double second_derivative(double alpha) const noexcept {
    switch (kind_) {
      case SpeedKind::PowerSum: {
        double s = 0.0;
        for (const auto& t : terms_) {
          const double kk = t.exponent * (t.exponent - 1.0);
          if (kk != 0.0) s += t.coefficient * kk * power(alpha, t.exponent - 2.0);
        }
        return s;
      }
      case SpeedKind::Log1p:
        return -1.0 / ((1.0 + alpha) * (1.0 + alpha));
      case SpeedKind::Expm1:
        return std::exp(alpha);
      case SpeedKind::Arctan: {
        const double d = 1.0 + alpha * alpha;
        return -2.0 * alpha / (d * d);
      }
    }
    return 0.0;
  }

  /// phi over a whole array; the family dispatch is hoisted out of the loop.
  void values(std::span<const double> alpha, std::span<double> out) const noexcept {
    const std::size_t n = alpha.size();
    switch (kind_) {
      case SpeedKind::PowerSum:
        for (std::size_t j = 0; j < n; ++j) out[j] = 0.0;
        for (const auto& t : terms_) add_power(alpha, out, t.coefficient, t.exponent);
        return;
      case SpeedKind::Log1p:
        for (std::size_t j = 0; j < n; ++j) out[j] = std::log1p(alpha[j]);
        return;
      case SpeedKind::Expm1:
        for (std::size_t j = 0; j < n; ++j) out[j] = std::expm1(alpha[j]);
        return;
      case SpeedKind::Arctan:
        for (std::size_t j = 0; j < n; ++j) out[j] = std::atan(alpha[j]);
        return;
    }
  }

  /// phi' over a whole array.
  void derivatives(std::span<const double> alpha, std::span<double> out) const noexcept {
    const std::size_t n = alpha.size();
    switch (kind_) {
      case SpeedKind::PowerSum:
        for (std::size_t j = 0; j < n; ++j) out[j] = 0.0;
        for (const auto& t : terms_)
          add_power(alpha, out, t.coefficient * t.exponent, t.exponent - 1.0);
        return;
      default:
        for (std::size_t j = 0; j < n; ++j) out[j] = derivative(alpha[j]);
        return;
    }
  }

  SpeedValues eval(double alpha) const {
    if (!(alpha > 0.0)) {
      throw DomainError("speed " + label_ + " evaluated at alpha=" +
                        format_number(alpha) + " (must be > 0)");
    }
    return {value(alpha), derivative(alpha), second_derivative(alpha)};
  }

  double operator()(double alpha) const noexcept { return value(alpha); }

  static std::string format_number(double x) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
    return ec == std::errc{} ? std::string(buf, ptr) : std::to_string(x);
  }

 private:
  SpeedFunction(SpeedKind kind, std::string label)
      : kind_(kind), label_(std::move(label)) {}

  static double power(double x, double k) noexcept {
    if (k == 1.0) return x;
    if (k == 2.0) return x * x;
    if (k == 0.0) return 1.0;
    if (k == 0.5) return std::sqrt(x);
    if (k == -1.0) return 1.0 / x;
    if (k == -0.5) return 1.0 / std::sqrt(x);
    if (k == 3.0) return x * x * x;
    return std::pow(x, k);
  }

  static void add_power(std::span<const double> x, std::span<double> out, double c,
                        double k) noexcept {
    const std::size_t n = x.size();
    if (k == 0.0) {
      for (std::size_t j = 0; j < n; ++j) out[j] += c;
    } else if (k == 1.0) {
      for (std::size_t j = 0; j < n; ++j) out[j] += c * x[j];
    } else if (k == 2.0) {
      for (std::size_t j = 0; j < n; ++j) out[j] += c * x[j] * x[j];
    } else if (k == 0.5) {
      for (std::size_t j = 0; j < n; ++j) out[j] += c * std::sqrt(x[j]);
    } else if (k == -0.5) {
      for (std::size_t j = 0; j < n; ++j) out[j] += c / std::sqrt(x[j]);
    } else {
      for (std::size_t j = 0; j < n; ++j) out[j] += c * power(x[j], k);
    }
  }

  SpeedKind kind_;
  std::string label_;
  std::vector<PowerTerm> terms_;
};

namespace detail {

inline double parse_real(std::string_view text, std::string_view context) {
  double x = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, x);
  if (text.empty() || ec != std::errc{} || ptr != last) {
    throw SpecError("cannot parse number '" + std::string(text) + "' in " +
                    std::string(context));
  }
  return x;
}

inline std::vector<std::string_view> split(std::string_view text, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = text.find(sep, start);
    out.push_back(text.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

}  // namespace detail

/// Parses `powersum:<k1>:<c1>[,<k2>:<c2>...]`, `log1p`, `expm1` or `arctan`.
inline SpeedFunction parse_speed(std::string_view spec) {
  if (spec == "log1p") return SpeedFunction::log1p();
  if (spec == "expm1") return SpeedFunction::expm1();
  if (spec == "arctan") return SpeedFunction::arctan();
  constexpr std::string_view prefix = "powersum:";
  if (!spec.starts_with(prefix)) {
    throw SpecError("unknown speed '" + std::string(spec) +
                    "' (expected powersum:<k>:<c>[,...], log1p, expm1)");
  }
  std::vector<PowerTerm> terms;
  for (auto pair : detail::split(spec.substr(prefix.size()), ',')) {
    const auto parts = detail::split(pair, ':');
    if (parts.size() != 2) {
      throw SpecError("power sum term '" + std::string(pair) +
                      "' must read <exponent>:<coefficient>");
    }
    const double k = detail::parse_real(parts[0], "speed spec");
    const double c = detail::parse_real(parts[1], "speed spec");
    if (!(k > 0.0) || !(c > 0.0)) {
      throw SpecError("power sum term '" + std::string(pair) +
                      "' has a nonpositive exponent or coefficient");
    }
    terms.push_back({k, c});
  }
  return SpeedFunction::power_sum(std::move(terms));
}

// ---------------------------------------------------------------------------
// Admissibility audit

enum class Verdict { Pass, Fail, Inconclusive };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::Pass: return "pass";
    case Verdict::Fail: return "fail";
    case Verdict::Inconclusive: return "inconclusive";
  }
  return "?";
}

struct Sample {
  double alpha;
  double value;
};

struct ConditionReport {
  std::string name;         // "i", "ii", ...
  std::string description;
  Verdict verdict = Verdict::Pass;
  std::vector<Sample> witnesses;  // violating points for fail/inconclusive
  std::vector<Sample> measured;   // quantity on every finite grid point
  std::size_t equality_points = 0;  // v): points where the margin is exactly 0
  std::size_t skipped_nonfinite = 0;
};

struct AdmissibilityReport {
  std::string speed;
  std::vector<ConditionReport> conditions;  // i .. v, in order
  Verdict overall = Verdict::Pass;
};

/// Thresholds and grid for the limit heuristics.
struct AdmissibilityOptions {
  double infinity_threshold = 1e3;
  double zero_threshold = 1e-3;
  /// Consecutive-decade increment ratio below which growth counts as stalling.
  double stall_ratio = 0.5;
  /// Relative decrease in the last decade below which a "-> 0" trend counts
  /// as stalled.
  double stall_progress = 1e-2;
  double v_roundoff = 1e-12;
};

/// Log-spaced grid 10^lo .. 10^hi with `per_decade` points per decade.
inline std::vector<double> log_grid(int lo_exp, int hi_exp, int per_decade) {
  std::vector<double> g;
  const int count = (hi_exp - lo_exp) * per_decade;
  g.reserve(static_cast<std::size_t>(count) + 1);
  for (int i = 0; i <= count; ++i)
    g.push_back(std::pow(10.0, lo_exp + static_cast<double>(i) / per_decade));
  return g;
}

namespace detail {

enum class Limit { ZeroAtOrigin, InfinityAtInfinity };

// Value of `samples` at the largest alpha <= target (samples sorted ascending).
inline const Sample* at_or_below(const std::vector<Sample>& s, double alpha) {
  const Sample* best = nullptr;
  for (const auto& x : s) {
    if (x.alpha <= alpha * (1.0 + 1e-12)) best = &x;
  }
  return best;
}

inline const Sample* at_or_above(const std::vector<Sample>& s, double alpha) {
  for (const auto& x : s) {
    if (x.alpha >= alpha * (1.0 - 1e-12)) return &x;
  }
  return nullptr;
}

// Judges a limit from the outermost two decades of finite samples.
inline ConditionReport condition(std::string name, std::string description) {
  ConditionReport c;
  c.name = std::move(name);
  c.description = std::move(description);
  return c;
}

inline void judge_limit(ConditionReport& rep, const std::vector<Sample>& s, Limit limit,
                        const AdmissibilityOptions& opt) {
  if (s.size() < 3) {
    rep.verdict = Verdict::Inconclusive;
    return;
  }
  Verdict v = Verdict::Pass;
  if (limit == Limit::InfinityAtInfinity) {
    const Sample& top = s.back();
    const Sample* dec1 = at_or_below(s, top.alpha / 10.0);
    const Sample* dec2 = at_or_below(s, top.alpha / 100.0);
    bool monotone = true;
    for (std::size_t i = 1; i < s.size(); ++i) {
      if (s[i].alpha < top.alpha / 100.0 * (1.0 - 1e-12)) continue;
      if (s[i].value < s[i - 1].value) {
        monotone = false;
        rep.witnesses.push_back(s[i]);
      }
    }
    const double d1 = dec1 ? top.value - dec1->value : 0.0;
    const double d2 = (dec1 && dec2) ? dec1->value - dec2->value : 0.0;
    const bool beyond = top.value >= opt.infinity_threshold;
    // Unbounded monotone growth: increments per decade do not decay
    // geometrically (e.g. logarithmic growth).
    const bool sustained = d2 > 0.0 && d1 >= opt.stall_ratio * d2;
    if (monotone && (beyond || sustained)) {
      v = Verdict::Pass;
    } else {
      // Geometric extrapolation of the remaining growth.
      double bound = top.value;
      if (d2 > 0.0 && d1 >= 0.0 && d1 < d2) {
        const double r = d1 / d2;
        bound += d1 * r / (1.0 - r);
      }
      const bool stalled = !(d2 > 0.0) || d1 < opt.stall_ratio * d2;
      v = (!beyond && stalled && bound < opt.infinity_threshold) ? Verdict::Fail
                                                                 : Verdict::Inconclusive;
      rep.witnesses.push_back(top);
    }
  } else {
    const Sample& bottom = s.front();
    const Sample* dec1 = at_or_above(s, bottom.alpha * 10.0);
    const Sample* dec2 = at_or_above(s, bottom.alpha * 100.0);
    bool monotone = true;
    for (std::size_t i = 1; i < s.size(); ++i) {
      if (s[i].alpha > bottom.alpha * 100.0 * (1.0 + 1e-12)) break;
      if (std::abs(s[i].value) < std::abs(s[i - 1].value)) {
        monotone = false;
        rep.witnesses.push_back(s[i]);
      }
    }
    const double q0 = std::abs(bottom.value);
    const bool below = q0 <= opt.zero_threshold;
    if (monotone && below) {
      v = Verdict::Pass;
    } else {
      const double q1 = dec1 ? std::abs(dec1->value) : q0;
      const double q2 = dec2 ? std::abs(dec2->value) : q1;
      const double d1 = q1 - q0;
      const double d2 = q2 - q1;
      double limit_estimate = q0;
      if (d2 > 0.0 && d1 >= 0.0 && d1 < d2) {
        const double r = d1 / d2;
        limit_estimate -= d1 * r / (1.0 - r);
      }
      const bool stalled = q1 <= 0.0 || (q1 - q0) / q1 < opt.stall_progress;
      v = (!below && stalled && limit_estimate > opt.zero_threshold)
              ? Verdict::Fail
              : Verdict::Inconclusive;
      rep.witnesses.push_back(bottom);
    }
  }
  // A two-sided condition takes the worse of its two verdicts.
  if (v == Verdict::Fail || (v == Verdict::Inconclusive && rep.verdict == Verdict::Pass))
    rep.verdict = v;
}

template <class F>
std::vector<Sample> sample(std::span<const double> grid, F&& quantity, std::size_t& skipped) {
  std::vector<Sample> out;
  out.reserve(grid.size());
  for (double a : grid) {
    const double q = quantity(a);
    if (std::isfinite(q)) {
      out.push_back({a, q});
    } else {
      ++skipped;
    }
  }
  return out;
}

}  // namespace detail

/// Audits conditions i)-v) on a log-spaced probe grid. Limits are certified
/// only by trends; a limit that cannot be certified is `inconclusive`.
inline AdmissibilityReport check_admissibility(const SpeedFunction& speed,
                                               std::span<const double> grid,
                                               const AdmissibilityOptions& opt = {}) {
  std::vector<double> sorted(grid.begin(), grid.end());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::remove_if(sorted.begin(), sorted.end(), [](double a) { return !(a > 0.0); }),
               sorted.end());

  AdmissibilityReport report;
  report.speed = speed.label();


  {
    auto c = detail::condition("i", "phi(alpha) -> 0 as alpha -> 0 and phi -> inf as alpha -> inf");
    c.measured = detail::sample(sorted, [&](double a) { return speed.value(a); }, c.skipped_nonfinite);
    detail::judge_limit(c, c.measured, detail::Limit::ZeroAtOrigin, opt);
    detail::judge_limit(c, c.measured, detail::Limit::InfinityAtInfinity, opt);
    report.conditions.push_back(std::move(c));
  }
  {
    auto c = detail::condition("ii", "phi'(alpha) > 0 for all alpha > 0");
    c.measured = detail::sample(sorted, [&](double a) { return speed.derivative(a); }, c.skipped_nonfinite);
    for (const auto& s : c.measured) {
      if (!(s.value > 0.0)) {
        c.verdict = Verdict::Fail;
        c.witnesses.push_back(s);
      }
    }
    report.conditions.push_back(std::move(c));
  }
  {
    auto c = detail::condition("iii", "phi' alpha^2 / phi -> 0 at 0 and -> inf at inf");
    c.measured = detail::sample(
        sorted, [&](double a) { return speed.derivative(a) * a * a / speed.value(a); },
        c.skipped_nonfinite);
    detail::judge_limit(c, c.measured, detail::Limit::ZeroAtOrigin, opt);
    detail::judge_limit(c, c.measured, detail::Limit::InfinityAtInfinity, opt);
    report.conditions.push_back(std::move(c));
  }
  {
    auto c = detail::condition("iv", "phi'(alpha) alpha -> 0 as alpha -> 0");
    c.measured = detail::sample(sorted, [&](double a) { return speed.derivative(a) * a; },
                                c.skipped_nonfinite);
    detail::judge_limit(c, c.measured, detail::Limit::ZeroAtOrigin, opt);
    report.conditions.push_back(std::move(c));
  }
  {
    auto c = detail::condition("v", "phi''(alpha) alpha + 2 phi'(alpha) >= 0");
    c.measured = detail::sample(
        sorted,
        [&](double a) { return speed.second_derivative(a) * a + 2.0 * speed.derivative(a); },
        c.skipped_nonfinite);
    for (const auto& s : c.measured) {
      const double slack = opt.v_roundoff * std::abs(speed.derivative(s.alpha));
      if (s.value == 0.0) ++c.equality_points;
      if (s.value < -slack) {
        c.verdict = Verdict::Fail;
        c.witnesses.push_back(s);
      }
    }
    report.conditions.push_back(std::move(c));
  }

  report.overall = Verdict::Pass;
  for (const auto& c : report.conditions) {
    if (c.verdict == Verdict::Fail) {
      report.overall = Verdict::Fail;
    } else if (c.verdict == Verdict::Inconclusive && report.overall == Verdict::Pass) {
      report.overall = Verdict::Inconclusive;
    }
  }
  return report;
}

/// Default probe grid 1e-8 .. 1e8, ten points per decade.
inline AdmissibilityReport check_admissibility(const SpeedFunction& speed) {
  const auto grid = log_grid(-8, 8, 10);
  return check_admissibility(speed, grid);
}

}  // namespace cflow
