#include "bifmap/model.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>

#include "bifmap/errors.hpp"

namespace bifmap {

namespace {

constexpr int kMaxExponent = 30;

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

// 1 - s^N as (1-s)(1 + s + ... + s^{N-1}); every term is nonnegative, so the
// result has full relative accuracy for any s in [0,1].
double one_minus_pow(double s, double one_minus_s, int N) {
  if (N <= 0) return 0.0;
  double acc = 1.0;
  for (int j = 1; j < N; ++j) acc = 1.0 + s * acc;
  return one_minus_s * acc;
}

double ipow(double x, int N) {
  double r = 1.0;
  for (int j = 0; j < N; ++j) r *= x;
  return r;
}

// Antiderivative of x^k sin x written as P(x) sin x + Q(x) cos x.
struct TrigPoly {
  std::vector<double> sin_coef;
  std::vector<double> cos_coef;
};

// S_j = -x^j cos x + j C_{j-1},  C_j = x^j sin x - j S_{j-1}.
std::vector<TrigPoly> build_sin_moments() {
  std::vector<TrigPoly> table;
  TrigPoly S{{0.0}, {-1.0}};
  TrigPoly C{{1.0}, {0.0}};
  table.push_back(S);
  for (int j = 1; j <= kMaxExponent; ++j) {
    TrigPoly nS{std::vector<double>(j + 1, 0.0), std::vector<double>(j + 1, 0.0)};
    TrigPoly nC{std::vector<double>(j + 1, 0.0), std::vector<double>(j + 1, 0.0)};
    for (int i = 0; i < j; ++i) {
      nS.sin_coef[i] = j * C.sin_coef[i];
      nS.cos_coef[i] = j * C.cos_coef[i];
      nC.sin_coef[i] = -j * S.sin_coef[i];
      nC.cos_coef[i] = -j * S.cos_coef[i];
    }
    nS.cos_coef[j] -= 1.0;
    nC.sin_coef[j] += 1.0;
    S = std::move(nS);
    C = std::move(nC);
    table.push_back(S);
  }
  return table;
}

const TrigPoly& sin_moment_poly(int k) {
  static const std::vector<TrigPoly> table = build_sin_moments();
  return table.at(static_cast<std::size_t>(k));
}

struct DiffContext {
  double alpha;
  double s;
  double c;  // 1 - s
  double u;  // alpha * s
  double h;  // alpha - u
  double sin_a, cos_a, sin_u, cos_u;
  double dsin;  // sin(alpha) - sin(u)
  double dcos;  // cos(alpha) - cos(u)
};

DiffContext make_context(double alpha, double s, double c) {
  DiffContext ctx{};
  ctx.alpha = alpha;
  ctx.s = s;
  ctx.c = c;
  ctx.u = alpha * s;
  ctx.h = alpha * c;
  ctx.sin_a = std::sin(alpha);
  ctx.cos_a = std::cos(alpha);
  ctx.sin_u = std::sin(ctx.u);
  ctx.cos_u = std::cos(ctx.u);
  const double mid = 0.5 * (alpha + ctx.u);
  const double sh = std::sin(0.5 * ctx.h);
  ctx.dsin = 2.0 * std::cos(mid) * sh;
  ctx.dcos = -2.0 * std::sin(mid) * sh;
  return ctx;
}

double power_diff(const DiffContext& ctx, int N) {
  return ipow(ctx.alpha, N) * one_minus_pow(ctx.s, ctx.c, N);
}

// P(alpha) - P(alpha s) for P(x) = sum coef[i] x^i.
double poly_diff(const std::vector<double>& coef, const DiffContext& ctx) {
  double acc = 0.0;
  double apow = 1.0;
  for (std::size_t i = 0; i < coef.size(); ++i) {
    if (i > 0 && coef[i] != 0.0) {
      acc += coef[i] * apow * one_minus_pow(ctx.s, ctx.c, static_cast<int>(i));
    }
    apow *= ctx.alpha;
  }
  return acc;
}

double poly_eval(const std::vector<double>& coef, double x) {
  double acc = 0.0;
  for (auto it = coef.rbegin(); it != coef.rend(); ++it) acc = acc * x + *it;
  return acc;
}

// int_{alpha s}^{alpha} x^k sin x dx.
double sin_moment_diff(int k, const DiffContext& ctx) {
  if (ctx.alpha <= 2.0 + 0.5 * k) {
    // sum_j (-1)^j x^{k+2j+2} / ((k+2j+2) (2j+1)!)
    double sum = 0.0;
    double apow = ipow(ctx.alpha, k + 2);
    double fact = 1.0;  // (2j+1)!
    for (int j = 0; j < 80; ++j) {
      if (j > 0) fact *= (2.0 * j) * (2.0 * j + 1.0);
      const int N = k + 2 * j + 2;
      const double term = apow / (N * fact) * one_minus_pow(ctx.s, ctx.c, N);
      sum += (j % 2 == 0) ? term : -term;
      if (std::abs(term) <= 1e-18 * std::abs(sum)) break;
      apow *= ctx.alpha * ctx.alpha;
    }
    return sum;
  }
  const TrigPoly& tp = sin_moment_poly(k);
  const double Pa = poly_eval(tp.sin_coef, ctx.alpha);
  const double Qa = poly_eval(tp.cos_coef, ctx.alpha);
  return Pa * ctx.dsin + poly_diff(tp.sin_coef, ctx) * ctx.sin_u + Qa * ctx.dcos +
         poly_diff(tp.cos_coef, ctx) * ctx.cos_u;
}

// int_{alpha s}^{alpha} sin^2 x dx.
double sin_squared_diff(const DiffContext& ctx) {
  if (ctx.alpha <= 2.0) {
    // sum_{j>=1} (-1)^{j+1} 2^{2j-1} x^{2j+1} / ((2j+1) (2j)!)
    double sum = 0.0;
    double apow = ctx.alpha * ctx.alpha * ctx.alpha;
    double two_pow = 2.0;
    double fact = 2.0;
    for (int j = 1; j < 80; ++j) {
      const int N = 2 * j + 1;
      const double term = two_pow * apow / (N * fact) * one_minus_pow(ctx.s, ctx.c, N);
      sum += (j % 2 == 1) ? term : -term;
      if (std::abs(term) <= 1e-18 * std::abs(sum)) break;
      apow *= ctx.alpha * ctx.alpha;
      two_pow *= 4.0;
      fact *= (2.0 * j + 1.0) * (2.0 * j + 2.0);
    }
    return sum;
  }
  // (x - sin(2x)/2)/2 differenced; sin 2a - sin 2u = 2 cos(a+u) sin(a-u).
  return 0.5 * ctx.h - 0.5 * std::cos(ctx.alpha + ctx.u) * std::sin(ctx.h);
}

double one_minus_cos(double u) {
  const double h = std::sin(0.5 * u);
  return 2.0 * h * h;
}

}  // namespace

std::string_view family_name(ProblemFamily family) {
  switch (family) {
    case ProblemFamily::OscDiffusion:
      return "osc-diffusion";
    case ProblemFamily::OscReaction:
      return "osc-reaction";
    case ProblemFamily::OscBoth:
      return "osc-both";
    case ProblemFamily::PurePower:
      return "pure-power";
  }
  return "unknown";
}

ProblemFamily parse_family(std::string_view name) {
  for (auto f : {ProblemFamily::OscDiffusion, ProblemFamily::OscReaction,
                 ProblemFamily::OscBoth, ProblemFamily::PurePower}) {
    if (family_name(f) == name) return f;
  }
  throw InvalidSpec("unknown family '" + std::string(name) + "'");
}

ProblemSpec ProblemSpec::osc_diffusion(int n, double p) {
  ProblemSpec s{ProblemFamily::OscDiffusion, n, p, 0, 1};
  s.validate();
  return s;
}

ProblemSpec ProblemSpec::osc_reaction(int k, int m) {
  ProblemSpec s{ProblemFamily::OscReaction, 1, 1.0, k, m};
  s.validate();
  return s;
}

ProblemSpec ProblemSpec::osc_both() {
  return ProblemSpec{ProblemFamily::OscBoth, 1, 1.0, 2, 2};
}

ProblemSpec ProblemSpec::pure_power(int k, int m) {
  ProblemSpec s{ProblemFamily::PurePower, 1, 1.0, k, m};
  s.validate();
  return s;
}

void ProblemSpec::validate() const {
  switch (family) {
    case ProblemFamily::OscDiffusion:
      if (n < 1 || 2 * n + 2 > kMaxExponent) {
        throw InvalidSpec("osc-diffusion requires 1 <= n <= " +
                          std::to_string(kMaxExponent / 2 - 1));
      }
      if (!(p > 0.0) || !std::isfinite(p)) throw InvalidSpec("osc-diffusion requires p > 0");
      break;
    case ProblemFamily::OscReaction:
    case ProblemFamily::PurePower:
      if (m < 1 || k < 0 || k >= 2 * m - 1) {
        throw InvalidSpec("requires m >= 1 and 0 <= k < 2m-1 (got k=" + std::to_string(k) +
                          ", m=" + std::to_string(m) + ")");
      }
      if (2 * m > kMaxExponent) {
        throw InvalidSpec("m too large (2m must not exceed " + std::to_string(kMaxExponent) + ")");
      }
      break;
    case ProblemFamily::OscBoth:
      break;
  }
}

std::string to_record(const ProblemSpec& spec) {
  std::ostringstream os;
  os.precision(17);
  os << "family = " << family_name(spec.family) << "\n"
     << "n = " << spec.n << "\n"
     << "p = " << spec.p << "\n"
     << "k = " << spec.k << "\n"
     << "m = " << spec.m << "\n";
  return os.str();
}

std::vector<std::pair<std::string, std::string>> parse_key_values(std::string_view text) {
  std::vector<std::pair<std::string, std::string>> out;
  std::size_t pos = 0;
  int line_no = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    ++line_no;
    pos = end + 1;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw InvalidSpec("line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    std::string key = trim(std::string_view(stripped).substr(0, eq));
    std::string value = trim(std::string_view(stripped).substr(eq + 1));
    if (key.empty()) throw InvalidSpec("line " + std::to_string(line_no) + ": empty key");
    out.emplace_back(std::move(key), std::move(value));
  }
  return out;
}

ProblemSpec parse_record(std::string_view text) {
  ProblemSpec spec;
  bool have_family = false;
  for (const auto& [key, value] : parse_key_values(text)) {
    try {
      if (key == "family") {
        spec.family = parse_family(value);
        have_family = true;
      } else if (key == "n") {
        spec.n = std::stoi(value);
      } else if (key == "p") {
        spec.p = std::stod(value);
      } else if (key == "k") {
        spec.k = std::stoi(value);
      } else if (key == "m") {
        spec.m = std::stoi(value);
      } else {
        throw InvalidSpec("unknown key '" + key + "'");
      }
    } catch (const std::logic_error&) {
      throw InvalidSpec("bad value for '" + key + "': " + value);
    }
  }
  if (!have_family) throw InvalidSpec("record has no 'family' key");
  if (spec.family == ProblemFamily::OscBoth) spec = ProblemSpec::osc_both();
  spec.validate();
  return spec;
}

double eval_D(const ProblemSpec& spec, double u) {
  switch (spec.family) {
    case ProblemFamily::OscDiffusion:
      return spec.p * ipow(u, 2 * spec.n) + std::sin(u);
    case ProblemFamily::OscReaction:
    case ProblemFamily::PurePower:
      return ipow(u, spec.k);
    case ProblemFamily::OscBoth:
      return u * u + std::sin(u);
  }
  return 0.0;
}

double eval_g(const ProblemSpec& spec, double u) {
  switch (spec.family) {
    case ProblemFamily::OscDiffusion:
      return u;
    case ProblemFamily::OscReaction:
      return ipow(u, 2 * spec.m - spec.k - 1) + std::sin(u);
    case ProblemFamily::PurePower:
      return ipow(u, 2 * spec.m - spec.k - 1);
    case ProblemFamily::OscBoth:
      return u + std::sin(u);
  }
  return 0.0;
}

double delta_G(const ProblemSpec& spec, double alpha, double s, double one_minus_s) {
  const DiffContext ctx = make_context(alpha, s, one_minus_s);
  switch (spec.family) {
    case ProblemFamily::OscDiffusion: {
      const int N = 2 * spec.n + 2;
      return spec.p / N * power_diff(ctx, N) + sin_moment_diff(1, ctx);
    }
    case ProblemFamily::OscReaction:
      return power_diff(ctx, 2 * spec.m) / (2 * spec.m) + sin_moment_diff(spec.k, ctx);
    case ProblemFamily::OscBoth:
      return 0.25 * power_diff(ctx, 4) + sin_moment_diff(2, ctx) + sin_moment_diff(1, ctx) +
             sin_squared_diff(ctx);
    case ProblemFamily::PurePower:
      return power_diff(ctx, 2 * spec.m) / (2 * spec.m);
  }
  return 0.0;
}

double eval_G(const ProblemSpec& spec, double u) { return delta_G(spec, u, 0.0, 1.0); }

double eval_W(const ProblemSpec& spec, double u) {
  switch (spec.family) {
    case ProblemFamily::OscDiffusion: {
      const int N = 2 * spec.n + 1;
      return spec.p * ipow(u, N) / N + one_minus_cos(u);
    }
    case ProblemFamily::OscReaction:
    case ProblemFamily::PurePower:
      return ipow(u, spec.k + 1) / (spec.k + 1);
    case ProblemFamily::OscBoth:
      return u * u * u / 3.0 + one_minus_cos(u);
  }
  return 0.0;
}

std::size_t default_admissibility_grid(double u_max) {
  const double by_range = std::ceil(100.0 * u_max);
  return static_cast<std::size_t>(std::max(10000.0, std::min(by_range, 1e8)));
}

AdmissibilityReport validate_admissibility(const ProblemSpec& spec, double u_max,
                                           std::size_t grid_points) {
  spec.validate();
  if (!(u_max > 0.0) || !std::isfinite(u_max)) {
    throw std::invalid_argument("validate_admissibility: u_max must be positive");
  }
  if (grid_points < 1000) {
    throw std::invalid_argument("validate_admissibility: grid_points must be >= 1000");
  }
  const double step = u_max / static_cast<double>(grid_points);
  auto D = [&](double u) { return eval_D(spec, u); };

  AdmissibilityReport rep;
  rep.min_D = std::numeric_limits<double>::infinity();
  double min_g = std::numeric_limits<double>::infinity();

  double prev2 = 0.0, prev1 = 0.0;
  for (std::size_t i = 1; i <= grid_points; ++i) {
    const double u = step * static_cast<double>(i);
    const double d = D(u);
    min_g = std::min(min_g, eval_g(spec, u));
    if (d < rep.min_D) {
      rep.min_D = d;
      rep.worst_u = u;
    }
    // prev1 sits at u - step; refine when it is a discrete interior minimum.
    if (i >= 3 && prev1 <= prev2 && prev1 <= d) {
      double a = u - 2.0 * step, b = u;
      const double ratio = 0.5 * (std::sqrt(5.0) - 1.0);
      double x1 = b - ratio * (b - a), x2 = a + ratio * (b - a);
      double f1 = D(x1), f2 = D(x2);
      for (int it = 0; it < 80 && (b - a) > 1e-15 * std::max(1.0, b); ++it) {
        if (f1 < f2) {
          b = x2;
          x2 = x1;
          f2 = f1;
          x1 = b - ratio * (b - a);
          f1 = D(x1);
        } else {
          a = x1;
          x1 = x2;
          f1 = f2;
          x2 = a + ratio * (b - a);
          f2 = D(x2);
        }
      }
      const double xm = 0.5 * (a + b);
      const double fm = D(xm);
      if (fm < rep.min_D) {
        rep.min_D = fm;
        rep.worst_u = xm;
      }
    }
    prev2 = prev1;
    prev1 = d;
  }
  rep.ok = rep.min_D > 0.0;
  rep.lambda_set_ok = rep.ok && min_g > 0.0;
  return rep;
}

AdmissibilityReport require_admissible(const ProblemSpec& spec, double u_max) {
  auto rep = validate_admissibility(spec, u_max, default_admissibility_grid(u_max));
  if (!rep.ok || !rep.lambda_set_ok) {
    std::ostringstream os;
    os.precision(6);
    os << family_name(spec.family) << ": D(u) = " << rep.min_D << " <= 0 at u = " << rep.worst_u
       << " (need D > 0 and g > 0 on (0, " << u_max << "])";
    throw AdmissibilityViolation(os.str());
  }
  return rep;
}

}  // namespace bifmap
