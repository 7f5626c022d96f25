#include "bifmap/asymptotics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "bifmap/errors.hpp"
#include "bifmap/quadrature.hpp"
#include "json.hpp"

namespace bifmap {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::pair<double, double> compute_C0C1() {
  QuadratureConfig cfg;
  cfg.rel_tol = 1e-14;
  cfg.abs_tol = 1e-16;
  // 1 - s^3 = (1-s)(1+s+s^2) and (1-s^4)/(1-s^3) = (1+s)(1+s^2)/(1+s+s^2).
  const auto c1 = integrate_endpoint_singular(
      [](double s, double c) {
        const double q = 1.0 + s + s * s;
        const double ratio = (1.0 + s) * (1.0 + s * s) / q;
        return (s * s - 3.0 * s * ratio / 8.0) / std::sqrt(c * q);
      },
      cfg);
  if (!c1.converged) throw QuadratureFailure("C1 quadrature did not converge");
  const double a = 2.0 / 3.0;
  const double c0 = std::exp(std::lgamma(a) + std::lgamma(0.5) - std::lgamma(a + 0.5)) / 3.0;
  return {c0, c1.value};
}

// Parabola through three points; returns (x, y) at its vertex, or the middle
// point when the parabola is degenerate or its vertex escapes the bracket.
std::pair<double, double> parabola_peak(double x0, double y0, double x1, double y1, double x2,
                                        double y2) {
  const double d01 = (y1 - y0) / (x1 - x0);
  const double d12 = (y2 - y1) / (x2 - x1);
  const double a = (d12 - d01) / (x2 - x0);
  if (a == 0.0 || !std::isfinite(a)) return {x1, y1};
  const double b = d01 - a * (x0 + x1);
  const double xv = -b / (2.0 * a);
  if (!(xv >= x0 && xv <= x2)) return {x1, y1};
  return {xv, y1 + (xv - x1) * (d01 + a * (xv - x0))};
}

double wrap(double phi) { return std::remainder(phi, 2.0 * kPi); }

}  // namespace

double AsymptoticModel::leading(double alpha) const {
  return leading_coeff * std::pow(alpha, leading_exp);
}

double AsymptoticModel::with_second(double alpha) const {
  if (second_coeff == 0.0) return leading(alpha);
  return leading(alpha) + second_coeff * std::pow(alpha, second_exp) * std::sin(alpha + phase_shift);
}

Regime parse_regime(std::string_view token) {
  if (token == "1.1") return Regime::ReactionOscillation;
  if (token == "1.2i") return Regime::DiffusionOscillation;
  if (token == "1.3i") return Regime::BothOscillation;
  throw std::invalid_argument("unknown theorem '" + std::string(token) +
                              "' (expected 1.1, 1.2i or 1.3i)");
}

std::string_view regime_token(Regime regime) {
  switch (regime) {
    case Regime::ReactionOscillation: return "1.1";
    case Regime::DiffusionOscillation: return "1.2i";
    case Regime::BothOscillation: return "1.3i";
  }
  return "1.1";
}

double coeff_A(int k, int m) {
  if (k < 0 || m < 1) throw std::invalid_argument("coeff_A needs k >= 0 and m >= 1");
  const double a = (k + 1.0) / (2.0 * m);
  return std::exp(std::lgamma(a) + std::lgamma(0.5) - std::lgamma(a + 0.5)) / (2.0 * m);
}

std::pair<double, double> coeff_C0C1() {
  static const std::pair<double, double> value = compute_C0C1();
  return value;
}

double pure_power_law(int k, int m, double alpha) {
  const double A = coeff_A(k, m);
  return 4.0 * m * A * A * std::pow(alpha, 2.0 * k + 2.0 - 2.0 * m);
}

namespace {

AsymptoticModel power_reaction_model(int k, int m, bool oscillating) {
  const double A = coeff_A(k, m);
  AsymptoticModel md;
  md.leading_coeff = 4.0 * m * A * A;
  md.leading_exp = 2.0 * k + 2.0 - 2.0 * m;
  md.phase_shift = -kPi / 4.0;
  md.second_exp = 3.0 * k + 2.5 - 4.0 * m;
  md.second_coeff = oscillating ? -8.0 * m * A * std::sqrt(kPi / (2.0 * m)) : 0.0;
  // The next term is only known to be o(alpha^second_exp).
  md.remainder_exp = md.second_exp;
  return md;
}

AsymptoticModel diffusion_model(int n, double p) {
  const double A = coeff_A(2 * n, n + 1);
  AsymptoticModel md;
  md.leading_coeff = 4.0 * (n + 1) * p * A * A;
  md.leading_exp = 2.0 * n;
  md.phase_shift = -kPi / 4.0;
  md.second_exp = -0.5;
  md.second_coeff = 8.0 * (n + 1) * (p - 1.0) * A * std::sqrt(kPi / (2.0 * (n + 1))) / p;
  md.remainder_exp = -1.0;
  return md;
}

}  // namespace

LargeAlphaPrediction predict_large_alpha(const ProblemSpec& spec, double alpha) {
  spec.validate();
  if (!(alpha > 0.0)) throw std::invalid_argument("predict_large_alpha needs alpha > 0");
  AsymptoticModel md;
  switch (spec.family) {
    case ProblemFamily::OscReaction: md = power_reaction_model(spec.k, spec.m, true); break;
    case ProblemFamily::OscBoth: md = power_reaction_model(2, 2, true); break;
    case ProblemFamily::OscDiffusion: md = diffusion_model(spec.n, spec.p); break;
    case ProblemFamily::PurePower:
      throw UnsupportedFamily("pure-power curves follow the exact law, not an expansion");
  }
  return {md.leading(alpha), md.with_second(alpha), md};
}

double predict_small_alpha(const ProblemSpec& spec, double alpha) {
  spec.validate();
  if (!(alpha > 0.0 && alpha <= 0.5)) {
    throw std::invalid_argument("predict_small_alpha needs 0 < alpha <= 0.5");
  }
  const auto [c0, c1] = coeff_C0C1();
  if (spec.family == ProblemFamily::OscDiffusion && spec.n == 1) {
    return 6.0 * alpha * (c0 * c0 + 2.0 * spec.p * c0 * c1 * alpha);
  }
  if (spec.family == ProblemFamily::OscBoth) {
    return 3.0 * alpha * (c0 * c0 + 2.0 * c0 * c1 * alpha);
  }
  throw UnsupportedFamily("small-alpha expansion is available for osc-diffusion with n = 1 and "
                          "osc-both only");
}

AsymptoticModel regime_model(Regime regime, const ProblemSpec& spec) {
  spec.validate();
  switch (regime) {
    case Regime::ReactionOscillation:
      if (spec.family == ProblemFamily::OscReaction) return power_reaction_model(spec.k, spec.m, true);
      if (spec.family == ProblemFamily::PurePower) return power_reaction_model(spec.k, spec.m, false);
      break;
    case Regime::DiffusionOscillation:
      if (spec.family == ProblemFamily::OscDiffusion) return diffusion_model(spec.n, spec.p);
      break;
    case Regime::BothOscillation:
      if (spec.family == ProblemFamily::OscBoth) return power_reaction_model(2, 2, true);
      break;
  }
  throw UnsupportedFamily("regime " + std::string(regime_token(regime)) + " does not cover " +
                          std::string(family_name(spec.family)));
}

EnvelopeFit analyze_residual(const std::vector<CurvePoint>& points, const AsymptoticModel& model) {
  const std::size_t n = points.size();
  if (n < 3) throw InsufficientCoverage("need at least three curve points");
  std::vector<double> R(n), floor(n);
  for (std::size_t i = 0; i < n; ++i) {
    R[i] = points[i].lambda - model.leading(points[i].alpha);
    floor[i] = std::max(10.0 * points[i].err_estimate,
                        64.0 * std::numeric_limits<double>::epsilon() * std::abs(points[i].lambda));
  }

  struct Extremum {
    double alpha, value, center;
    bool significant;
  };
  std::vector<Extremum> ext;
  const double a_lo = points.front().alpha, a_hi = points.back().alpha;
  const auto j_first = static_cast<long long>(std::ceil((a_lo - kPi) / kPi - 1e-9));
  const auto j_last = static_cast<long long>(std::floor((a_hi - 0.5 * kPi) / kPi + 1e-9));
  constexpr double kSlack = 1e-9;
  for (long long j = j_first; j <= j_last; ++j) {
    const double c = 0.75 * kPi + static_cast<double>(j) * kPi;
    const double lo = c - 0.25 * kPi - kSlack, hi = c + 0.25 * kPi + kSlack;
    if (lo < a_lo - 2 * kSlack || hi > a_hi + 2 * kSlack) continue;
    std::size_t best = n, count = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (points[i].alpha < lo || points[i].alpha > hi) continue;
      ++count;
      if (best == n || std::abs(R[i]) > std::abs(R[best])) best = i;
    }
    if (count < 3) continue;
    const std::size_t mid = std::clamp<std::size_t>(best, 1, n - 2);
    auto [x, y] = parabola_peak(points[mid - 1].alpha, R[mid - 1], points[mid].alpha, R[mid],
                                points[mid + 1].alpha, R[mid + 1]);
    if (std::abs(y) < std::abs(R[best])) {
      x = points[best].alpha;
      y = R[best];
    }
    ext.push_back({x, y, c, std::abs(R[best]) > floor[best]});
  }
  if (ext.size() < 10) {
    throw InsufficientCoverage("only " + std::to_string(ext.size()) +
                               " half-period windows are covered; at least 10 are needed");
  }

  EnvelopeFit fit;
  int last_sign = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (std::abs(R[i]) <= floor[i]) continue;
    const int sg = R[i] > 0 ? 1 : -1;
    if (last_sign != 0 && sg != last_sign) ++fit.sign_changes;
    last_sign = sg;
  }

  std::vector<Extremum> sig;
  for (const auto& e : ext) {
    if (e.significant) sig.push_back(e);
  }
  fit.extrema = static_cast<int>(sig.size());
  if (sig.size() < 10) {
    fit.below_detection = true;
    fit.amplitude = 0.0;
    fit.decay_exp = kNaN;
    fit.phase_offset = kNaN;
    fit.rms_misfit = kNaN;
    return fit;
  }

  double sx = 0, sy = 0;
  for (const auto& e : sig) {
    sx += std::log(e.alpha);
    sy += std::log(std::abs(e.value));
  }
  const double m = static_cast<double>(sig.size());
  const double xbar = sx / m, ybar = sy / m;
  double sxx = 0, sxy = 0;
  for (const auto& e : sig) {
    const double dx = std::log(e.alpha) - xbar;
    sxx += dx * dx;
    sxy += dx * (std::log(std::abs(e.value)) - ybar);
  }
  fit.decay_exp = sxy / sxx;
  double ss = 0;
  for (const auto& e : sig) {
    const double r =
        std::log(std::abs(e.value)) - (ybar + fit.decay_exp * (std::log(e.alpha) - xbar));
    ss += r * r;
  }
  fit.rms_misfit = std::sqrt(ss / m);
  const double ref_exp = model.second_coeff != 0.0 ? model.second_exp : fit.decay_exp;
  fit.amplitude = std::exp(ybar - ref_exp * xbar);

  // The model puts a peak of sign(second_coeff) * sin(c + phase_shift) at c.
  const double coeff_sign = model.second_coeff < 0.0 ? -1.0 : 1.0;
  double ssin = 0, scos = 0;
  for (const auto& e : sig) {
    const double expected = coeff_sign * std::sin(e.center + model.phase_shift);
    double off = e.alpha - e.center;
    if ((e.value > 0) != (expected > 0)) off += kPi;
    off = wrap(off);
    ssin += std::sin(off);
    scos += std::cos(off);
  }
  fit.phase_offset = std::atan2(ssin, scos);
  return fit;
}

std::string to_json(const EnvelopeFit& fit) {
  auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(); };
  nlohmann::ordered_json j;
  j["amplitude"] = num(fit.amplitude);
  j["decay_exp"] = num(fit.decay_exp);
  j["phase_offset"] = num(fit.phase_offset);
  j["sign_changes"] = fit.sign_changes;
  j["rms_misfit"] = num(fit.rms_misfit);
  j["extrema"] = fit.extrema;
  j["below_detection"] = fit.below_detection;
  return j.dump(2);
}

std::vector<FitCheck> check_fit(const EnvelopeFit& fit, const AsymptoticModel& model) {
  auto fmt = [](const char* f, double v) {
    char buf[96];
    std::snprintf(buf, sizeof buf, f, v);
    return std::string(buf);
  };
  std::vector<FitCheck> out;
  if (model.second_coeff != 0.0) {
    const double amp = std::abs(model.second_coeff);
    const bool ok = !fit.below_detection;
    out.push_back({"decay_exp", fit.decay_exp, fmt("%+.2f +- 0.05", model.second_exp),
                   ok && std::abs(fit.decay_exp - model.second_exp) <= 0.05});
    out.push_back({"amplitude", fit.amplitude, fmt("%.4f +- 10%%", amp),
                   ok && std::abs(fit.amplitude - amp) <= 0.1 * amp});
    out.push_back({"phase_offset", fit.phase_offset, "|offset| <= 0.1 rad",
                   ok && std::abs(fit.phase_offset) <= 0.1});
    out.push_back({"sign_changes", static_cast<double>(fit.sign_changes),
                   fmt(">= %.0f", std::max(0, fit.extrema - 2)),
                   ok && fit.sign_changes >= fit.extrema - 2});
  } else if (fit.below_detection) {
    out.push_back({"residual", 0.0, "below detection", true});
  } else {
    out.push_back({"decay_exp", fit.decay_exp, fmt("<= %+.2f", model.remainder_exp + 0.2),
                   fit.decay_exp <= model.remainder_exp + 0.2});
  }
  return out;
}

}  // namespace bifmap
