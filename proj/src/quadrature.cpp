#include "bifmap/quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <queue>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "bifmap/errors.hpp"

namespace bifmap {

namespace {

constexpr double kPi = std::numbers::pi;

// QUADPACK qk15 abscissae and weights.
constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

double checked(double v, double x) {
  if (!std::isfinite(v)) {
    std::ostringstream os;
    os.precision(17);
    os << "integrand returned " << v << " at x = " << x;
    throw NonFinite(os.str());
  }
  return v;
}

struct Panel {
  double a, b, value, err;
  bool operator<(const Panel& o) const { return err < o.err; }
};

Panel gauss_kronrod15(const Integrand& f, double a, double b) {
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double fc = checked(f(center), center);
  double kron = fc * kWgk[7];
  double gauss = fc * kWg[3];
  for (int i = 0; i < 7; ++i) {
    const double dx = half * kXgk[i];
    const double f1 = checked(f(center - dx), center - dx);
    const double f2 = checked(f(center + dx), center + dx);
    kron += kWgk[i] * (f1 + f2);
    if (i % 2 == 1) gauss += kWg[i / 2] * (f1 + f2);
  }
  kron *= half;
  gauss *= half;
  return {a, b, kron, std::abs(kron - gauss)};
}

double target(double value, const QuadratureConfig& cfg) {
  return std::max(cfg.rel_tol * std::abs(value), cfg.abs_tol);
}

}  // namespace

void QuadratureConfig::validate() const {
  if (!(rel_tol > 0.0) || !(abs_tol > 0.0)) {
    throw std::invalid_argument("quadrature tolerances must be positive");
  }
  if (max_levels < 1 || max_levels > 15) {
    throw std::invalid_argument("max_levels must lie in [1, 15]");
  }
  if (max_panels < 1) throw std::invalid_argument("max_panels must be >= 1");
  if (osc_panel_fraction < 1) throw std::invalid_argument("osc_panel_fraction must be >= 1");
}

void CompensatedSum::add(double x) {
  const double t = sum_ + x;
  if (std::abs(sum_) >= std::abs(x)) {
    comp_ += (sum_ - t) + x;
  } else {
    comp_ += (x - t) + sum_;
  }
  sum_ = t;
}

QuadratureResult integrate_endpoint_singular(const SingularIntegrand& f,
                                             const QuadratureConfig& cfg) {
  return integrate_endpoint_singular(f, 0.0, 1.0, cfg);
}

QuadratureResult integrate_endpoint_singular(const SingularIntegrand& f, double a, double b,
                                             const QuadratureConfig& cfg) {
  cfg.validate();
  if (!(a < b) || a < 0.0 || b > 1.0) {
    throw std::invalid_argument("integrate_endpoint_singular: need 0 <= a < b <= 1");
  }
  const double half = 0.5 * (b - a);
  const double one_minus_b = 1.0 - b;
  constexpr double kTMax = 7.0;
  std::size_t nodes = 0;

  // Term at abscissa t; returns 0 once the node collapses onto an endpoint.
  auto term = [&](double t) -> double {
    const double y = 0.5 * kPi * std::sinh(std::abs(t));
    const double e = std::exp(-2.0 * y);
    const double near = half * 2.0 * e / (1.0 + e);  // distance to the nearer endpoint
    const double sech2 = 4.0 * e / ((1.0 + e) * (1.0 + e));
    const double w = half * 0.5 * kPi * std::cosh(t) * sech2;
    if (near <= 0.0 || w <= 0.0) return 0.0;
    double s, one_minus_s;
    if (t > 0.0) {
      s = b - near;
      one_minus_s = one_minus_b + near;
    } else if (t < 0.0) {
      s = a + near;
      one_minus_s = one_minus_b + (b - s);
    } else {
      s = a + half;
      one_minus_s = one_minus_b + half;
    }
    ++nodes;
    return w * checked(f(s, one_minus_s), s);
  };

  // Level 0 (h = 1) also fixes how far out the tails carry weight.
  CompensatedSum sum;
  const double t0 = term(0.0);
  sum.add(t0);
  double biggest = std::abs(t0);
  std::vector<double> right, left;
  for (int j = 1; j <= static_cast<int>(kTMax); ++j) {
    right.push_back(term(j));
    left.push_back(term(-j));
    biggest = std::max({biggest, std::abs(right.back()), std::abs(left.back())});
    sum.add(right.back());
    sum.add(left.back());
  }
  auto reach = [&](const std::vector<double>& side) {
    double r = 1.0;
    for (std::size_t j = 0; j < side.size(); ++j) {
      if (std::abs(side[j]) > 1e-22 * biggest) r = static_cast<double>(j + 2);
    }
    return std::min(r, kTMax);
  };
  const double t_right = reach(right);
  const double t_left = reach(left);

  double h = 1.0;
  double estimate = sum.value() * h;
  double previous = estimate;
  double err = std::numeric_limits<double>::infinity();
  for (int level = 1; level <= cfg.max_levels; ++level) {
    h *= 0.5;
    for (double t = h; t <= t_right; t += 2.0 * h) sum.add(term(t));
    for (double t = h; t <= t_left; t += 2.0 * h) sum.add(term(-t));
    previous = estimate;
    estimate = sum.value() * h;
    err = std::abs(estimate - previous);
    if (level >= 3 && err <= target(estimate, cfg)) {
      return {estimate, err, nodes, true};
    }
  }
  return {estimate, err, nodes, false};
}

QuadratureResult integrate_adaptive_nothrow(const Integrand& f, double a, double b,
                                            const QuadratureConfig& cfg,
                                            std::size_t initial_panels) {
  cfg.validate();
  if (a == b) return {0.0, 0.0, 0, true};
  initial_panels = std::max<std::size_t>(initial_panels, 1);
  std::priority_queue<Panel> heap;
  double total = 0.0, total_err = 0.0;
  std::size_t nodes = 0;
  for (std::size_t i = 0; i < initial_panels; ++i) {
    const double lo = a + (b - a) * static_cast<double>(i) / initial_panels;
    const double hi = (i + 1 == initial_panels)
                          ? b
                          : a + (b - a) * static_cast<double>(i + 1) / initial_panels;
    Panel p = gauss_kronrod15(f, lo, hi);
    nodes += 15;
    total += p.value;
    total_err += p.err;
    heap.push(p);
  }
  bool converged = total_err <= target(total, cfg);
  while (!converged && heap.size() < cfg.max_panels) {
    Panel worst = heap.top();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(worst.a < mid && mid < worst.b)) break;  // panel at machine resolution
    heap.pop();
    Panel left = gauss_kronrod15(f, worst.a, mid);
    Panel right = gauss_kronrod15(f, mid, worst.b);
    nodes += 30;
    total += left.value + right.value - worst.value;
    total_err += left.err + right.err - worst.err;
    heap.push(left);
    heap.push(right);
    converged = total_err <= target(total, cfg);
  }
  CompensatedSum value;
  double err = 0.0;
  while (!heap.empty()) {
    value.add(heap.top().value);
    err += heap.top().err;
    heap.pop();
  }
  QuadratureResult res{value.value(), err, nodes, false};
  res.converged = res.err_estimate <= target(res.value, cfg);
  return res;
}

QuadratureResult integrate_adaptive(const Integrand& f, double a, double b,
                                    const QuadratureConfig& cfg) {
  auto res = integrate_adaptive_nothrow(f, a, b, cfg);
  if (!res.converged) {
    std::ostringstream os;
    os << "adaptive quadrature on [" << a << ", " << b << "] stopped at error "
       << res.err_estimate << " (value " << res.value << ")";
    throw PanelBudgetExceeded(os.str());
  }
  return res;
}

namespace {

// Runs `one_panel(i, panel_cfg)` over every panel, tightening the per-panel
// relative tolerance when the panels cancel each other.
template <class PanelFn>
QuadratureResult sum_panels(std::size_t count, const QuadratureConfig& cfg, PanelFn one_panel) {
  QuadratureConfig panel_cfg = cfg;
  panel_cfg.abs_tol = cfg.abs_tol / static_cast<double>(std::max<std::size_t>(count, 1));
  QuadratureResult out;
  for (int attempt = 0; attempt < 3; ++attempt) {
    CompensatedSum total;
    double abs_total = 0.0, err = 0.0;
    std::size_t nodes = 0;
    bool all = true;
    for (std::size_t i = 0; i < count; ++i) {
      const QuadratureResult r = one_panel(i, panel_cfg);
      total.add(r.value);
      abs_total += std::abs(r.value);
      err += r.err_estimate;
      nodes += r.nodes_used;
      all = all && r.converged;
    }
    out = {total.value(), err, out.nodes_used + nodes, false};
    out.converged = all && err <= target(out.value, cfg);
    if (out.converged || !all) return out;
    const double shrink = 0.5 * std::abs(out.value) / std::max(abs_total, 1e-300);
    panel_cfg.rel_tol = std::max(cfg.rel_tol * shrink, 1e-15);
    if (panel_cfg.rel_tol <= 1e-15 && attempt > 0) break;
  }
  return out;
}

}  // namespace

QuadratureResult integrate_panels(const Integrand& f, const std::vector<double>& cuts,
                                  const QuadratureConfig& cfg) {
  cfg.validate();
  if (cuts.size() < 2) return {0.0, 0.0, 0, true};
  return sum_panels(cuts.size() - 1, cfg, [&](std::size_t i, const QuadratureConfig& pc) {
    return integrate_adaptive_nothrow(f, cuts[i], cuts[i + 1], pc,
                                      static_cast<std::size_t>(cfg.osc_panel_fraction));
  });
}

QuadratureResult integrate_oscillatory_singular(const SingularIntegrand& f, double frequency,
                                                const QuadratureConfig& cfg) {
  cfg.validate();
  if (!(frequency >= 0.0) || !std::isfinite(frequency)) {
    throw std::invalid_argument("integrate_oscillatory_singular: frequency must be >= 0");
  }
  if (frequency < kPi) return integrate_endpoint_singular(f, cfg);

  const double period = kPi / frequency;
  const double tail_start = 1.0 - std::min(period, 1e-2);
  std::vector<double> cuts{0.0};
  for (std::size_t j = 1;; ++j) {
    const double c = static_cast<double>(j) * period;
    if (c >= tail_start) break;
    cuts.push_back(c);
  }
  if (cuts.size() > 1 && tail_start - cuts.back() < 0.25 * period) cuts.pop_back();
  cuts.push_back(tail_start);

  const Integrand smooth = [&](double s) { return f(s, 1.0 - s); };
  const std::size_t body = cuts.size() - 1;
  return sum_panels(body + 1, cfg, [&](std::size_t i, const QuadratureConfig& pc) {
    if (i == body) return integrate_endpoint_singular(f, tail_start, 1.0, pc);
    return integrate_adaptive_nothrow(smooth, cuts[i], cuts[i + 1], pc,
                                      static_cast<std::size_t>(cfg.osc_panel_fraction));
  });
}

}  // namespace bifmap
