#include "bifmap/phase.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

#include "bifmap/asymptotics.hpp"
#include "bifmap/errors.hpp"

namespace bifmap {

namespace {

constexpr double kPi = std::numbers::pi;

double checked(const QuadratureResult& r, const char* what) {
  if (!r.converged) {
    std::ostringstream os;
    os.precision(3);
    os << what << " did not converge (error estimate " << r.err_estimate << ")";
    throw QuadratureFailure(os.str());
  }
  return r.value;
}

// Ascending points of [lo, hi] where phase(x) crosses a multiple of pi; the
// phase is monotone decreasing from top to 0 across the interval.
std::vector<double> phase_cuts(double top, double lo, double hi,
                               double (*inverse)(double ratio)) {
  std::vector<double> cuts{lo};
  const auto jmax = static_cast<long>(std::floor(top / kPi));
  for (long j = jmax; j >= 1; --j) {
    const double x = inverse(j * kPi / top);
    if (x > cuts.back() && x < hi) cuts.push_back(x);
  }
  cuts.push_back(hi);
  return cuts;
}

double r_of_ratio(double c) { return 2.0 / kPi * std::acos(c); }
double phi_of_ratio(double c) { return std::acos(c); }

double power_sum(double s2, int n) {  // 1 + s^2 + ... + s^{2n}
  double acc = 1.0, term = 1.0;
  for (int i = 0; i < n; ++i) {
    term *= s2;
    acc += term;
  }
  return acc;
}

}  // namespace

double lemma21_leading(double f0, double mu, TrigKind kind) {
  if (!(mu > 0.0)) throw std::invalid_argument("lemma21_leading needs mu > 0");
  const double x = mu - kPi / 4.0;
  return std::sqrt(2.0 / (mu * kPi)) * f0 * (kind == TrigKind::Cos ? std::cos(x) : std::sin(x));
}

double lemma21_exact(const std::function<double(double)>& f, double mu, TrigKind kind,
                     const QuadratureConfig& cfg) {
  if (!(mu >= 0.0) || !std::isfinite(mu)) throw std::invalid_argument("lemma21_exact needs mu >= 0");
  cfg.validate();
  const auto integrand = [&](double r) {
    const double x = mu * std::cos(0.5 * kPi * r);
    return f(r) * (kind == TrigKind::Cos ? std::cos(x) : std::sin(x));
  };
  return checked(integrate_panels(integrand, phase_cuts(mu, 0.0, 1.0, r_of_ratio), cfg),
                 "stationary phase integral");
}

std::function<double(double)> sine_transform_profile(int n) {
  if (n < 1) throw std::invalid_argument("sine_transform_profile needs n >= 1");
  return [n](double r) {
    const double c = std::cos(0.5 * kPi * r);
    return 1.0 / std::sqrt(power_sum(c * c, n));
  };
}

RateScan lemma21_rate_scan(const std::function<double(double)>& f,
                           const std::vector<double>& mu_list, TrigKind kind,
                           const QuadratureConfig& cfg) {
  if (mu_list.size() < 5) throw InsufficientRange("rate scan needs at least 5 frequencies");
  for (std::size_t i = 0; i < mu_list.size(); ++i) {
    if (!(mu_list[i] > 0.0) || !std::isfinite(mu_list[i])) {
      throw InsufficientRange("rate scan frequencies must be positive and finite");
    }
    if (i > 0 && !(mu_list[i] > mu_list[i - 1])) {
      throw InsufficientRange("rate scan frequencies must be strictly increasing");
    }
  }
  if (mu_list.back() / mu_list.front() < 64.0) {
    throw InsufficientRange("rate scan frequencies must span a factor of at least 64");
  }
  RateScan scan;
  scan.mu_values = mu_list;
  const double f0 = f(0.0);
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  std::size_t used = 0;
  for (double mu : mu_list) {
    const double e = std::abs(lemma21_exact(f, mu, kind, cfg) - lemma21_leading(f0, mu, kind));
    scan.errors.push_back(e);
    if (e > 0.0) {
      const double x = std::log(mu), y = std::log(e);
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
      ++used;
    }
  }
  if (used < 2) throw InsufficientRange("rate scan has fewer than two nonzero errors");
  const double m = static_cast<double>(used);
  scan.fitted_exponent = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  return scan;
}

void write_csv(std::ostream& os, const RateScan& scan) {
  os << "mu,error\n";
  char buf[64];
  for (std::size_t i = 0; i < scan.mu_values.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.16e,%.16e\n", scan.mu_values[i], scan.errors[i]);
    os << buf;
  }
}

std::string to_json(const RateScan& scan) {
  nlohmann::ordered_json j;
  j["mu"] = scan.mu_values;
  j["error"] = scan.errors;
  j["fitted_exponent"] = scan.fitted_exponent;
  return j.dump(2);
}

ProofDiagnostics proof_diagnostics(int n, double p, double alpha, const QuadratureConfig& cfg) {
  if (n < 1) throw std::invalid_argument("proof_diagnostics needs n >= 1");
  if (!(p > 0.0) || !std::isfinite(p)) throw std::invalid_argument("proof_diagnostics needs p > 0");
  if (!(alpha >= 20.0) || !std::isfinite(alpha)) {
    throw std::invalid_argument("proof_diagnostics needs alpha >= 20");
  }
  cfg.validate();
  // Everything an integrand needs at phi, with s = cos(phi).
  struct Point {
    double s, s2n, P, sin2phi, sin_as, cos_as;
    double Nc;  // (cos a - cos(as)) / sin^2(phi)
    double N3;  // (cos a - s cos(as)) / sin^2(phi)
    double N4;  // (sin a - sin(as)) / sin^2(phi)
  };
  const auto at = [&](double phi) {
    Point q;
    q.s = std::cos(phi);
    const double sp = std::sin(phi);
    q.sin2phi = sp * sp;
    const double h = std::sin(0.5 * phi);
    const double one_minus_s = 2.0 * h * h;
    q.s2n = std::pow(q.s, 2 * n);
    q.P = power_sum(q.s * q.s, n);
    q.sin_as = std::sin(alpha * q.s);
    q.cos_as = std::cos(alpha * q.s);
    const double half_gap = std::sin(0.5 * alpha * one_minus_s);
    const double mid = 0.5 * alpha * (1.0 + q.s);
    q.Nc = -2.0 * std::sin(mid) * half_gap / q.sin2phi;
    q.N3 = q.Nc + one_minus_s * q.cos_as / q.sin2phi;
    q.N4 = 2.0 * std::cos(mid) * half_gap / q.sin2phi;
    return q;
  };
  const auto cuts = phase_cuts(alpha, 0.0, 0.5 * kPi, phi_of_ratio);
  // Near a zero of an integral the relative target sinks below rounding, so
  // the absolute target never drops under the integrand's rounding level.
  const auto integrate = [&](auto&& g, const char* what) {
    const auto h = [&](double phi) { return g(at(phi)); };
    double sup = std::abs(h(0.125 * cuts[1]));
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
      sup = std::max(sup, std::abs(h(0.5 * (cuts[i] + cuts[i + 1]))));
    }
    QuadratureConfig local = cfg;
    local.abs_tol = std::max(cfg.abs_tol, 256.0 * std::numeric_limits<double>::epsilon() * sup);
    return checked(integrate_panels(h, cuts, local), what);
  };

  const double np1 = n + 1.0;
  ProofDiagnostics d;
  d.J1 = p * coeff_A(2 * n, n + 1) * std::pow(alpha, 2 * n);
  d.J2 = integrate([](const Point& q) { return q.sin_as / std::sqrt(q.P); }, "J2");
  d.J3 = np1 / alpha *
         integrate([](const Point& q) { return q.s2n * q.N3 / (q.P * std::sqrt(q.P)); }, "J3");
  d.J4 = -np1 / (alpha * alpha) *
         integrate([](const Point& q) { return q.s2n * q.N4 / (q.P * std::sqrt(q.P)); }, "J4");
  d.J5 = np1 / (p * std::pow(alpha, 2 * n + 2)) *
         integrate(
             [alpha](const Point& q) {
               return q.sin_as * (alpha * q.N3 - q.N4) / (q.P * std::sqrt(q.P));
             },
             "J5");
  // cos a - s^2 cos(as) = (cos a - cos(as)) + sin^2(phi) cos(as)
  d.L4 = 4.0 / alpha * integrate(
                           [](const Point& q) {
                             const double s2 = q.s * q.s;
                             return s2 * (q.Nc + q.cos_as) / ((1.0 + s2) * std::sqrt(1.0 + s2));
                           },
                           "L4");
  return d;
}

double reassembled_time_map(int n, double p, double alpha, const ProofDiagnostics& d) {
  return std::sqrt((2.0 * n + 2.0) / p) * std::pow(alpha, -n) * d.sum();
}

}  // namespace bifmap
