#include "bifmap/timemap.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace bifmap {

namespace {

constexpr double kPi = std::numbers::pi;

// T(alpha) without the admissibility scan.
CurvePoint time_map_point(const ProblemSpec& spec, double alpha, const QuadratureConfig& cfg) {
  const SingularIntegrand f = [&](double s, double c) {
    return alpha * eval_D(spec, alpha * s) / std::sqrt(delta_G(spec, alpha, s, c));
  };
  const double freq = spec.family == ProblemFamily::PurePower ? 0.0 : alpha;
  const QuadratureResult r = integrate_oscillatory_singular(f, freq, cfg);
  CurvePoint pt;
  pt.alpha = alpha;
  pt.lambda = 2.0 * r.value * r.value;
  pt.err_estimate = 4.0 * std::abs(r.value) * r.err_estimate;
  pt.nodes_used = r.nodes_used;
  pt.converged = r.converged && pt.lambda > 0.0;
  return pt;
}

std::string describe(const char* what, double alpha) {
  std::ostringstream os;
  os.precision(17);
  os << what << " at alpha = " << alpha;
  return os.str();
}

// Fornberg's weights for f'(0) on unit-spaced nodes at the given offsets.
template <std::size_t W>
std::array<double, W> first_derivative_weights(const std::array<double, W>& x) {
  double c[W][2] = {};
  c[0][0] = 1.0;
  double c1 = 1.0;
  for (std::size_t i = 1; i < W; ++i) {
    double c2 = 1.0;
    for (std::size_t j = 0; j < i; ++j) {
      const double c3 = x[i] - x[j];
      c2 *= c3;
      if (j == i - 1) {
        c[i][1] = c1 * (c[i - 1][0] - x[i - 1] * c[i - 1][1]) / c2;
        c[i][0] = -c1 * x[i - 1] * c[i - 1][0] / c2;
      }
      c[j][1] = (x[i] * c[j][1] - c[j][0]) / c3;
      c[j][0] = x[i] * c[j][0] / c3;
    }
    c1 = c2;
  }
  std::array<double, W> w;
  for (std::size_t i = 0; i < W; ++i) w[i] = c[i][1];
  return w;
}

}  // namespace

std::string_view spacing_name(GridSpacing spacing) {
  switch (spacing) {
    case GridSpacing::Linear: return "linear";
    case GridSpacing::Log: return "log";
    case GridSpacing::PhaseLocked: return "phase-locked";
  }
  return "linear";
}

GridSpacing parse_spacing(std::string_view name) {
  if (name == "linear") return GridSpacing::Linear;
  if (name == "log") return GridSpacing::Log;
  if (name == "phase-locked") return GridSpacing::PhaseLocked;
  throw std::invalid_argument("unknown spacing '" + std::string(name) + "'");
}

std::vector<double> AlphaGrid::points() const {
  if (!(start > 0.0) || !(start < stop) || !std::isfinite(stop)) {
    throw std::invalid_argument("grid needs 0 < start < stop");
  }
  std::vector<double> out;
  switch (spacing) {
    case GridSpacing::Linear:
    case GridSpacing::Log: {
      if (count < 2) throw std::invalid_argument("grid needs count >= 2");
      const bool lg = spacing == GridSpacing::Log;
      const double a = lg ? std::log(start) : start;
      const double b = lg ? std::log(stop) : stop;
      for (std::size_t i = 0; i < count; ++i) {
        const double x = a + (b - a) * static_cast<double>(i) / static_cast<double>(count - 1);
        out.push_back(lg ? std::exp(x) : x);
      }
      out.front() = start;
      out.back() = stop;
      break;
    }
    case GridSpacing::PhaseLocked: {
      if (per_half_period < 1) throw std::invalid_argument("per_half_period must be >= 1");
      const double step = kPi / per_half_period;
      const double base = 0.75 * kPi;
      const auto first = static_cast<long long>(std::ceil((start - base) / step - 1e-12));
      const auto last = static_cast<long long>(std::floor((stop - base) / step + 1e-12));
      for (long long i = first; i <= last; ++i) {
        const double a = base + static_cast<double>(i) * step;
        if (a > 0.0) out.push_back(a);
      }
      if (out.size() < 2) {
        throw std::invalid_argument("phase-locked grid holds fewer than 2 points");
      }
      break;
    }
  }
  return out;
}

CurvePoint lambda_of_alpha(const ProblemSpec& spec, double alpha, const QuadratureConfig& cfg) {
  spec.validate();
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw std::invalid_argument("alpha must be positive and finite");
  }
  require_admissible(spec, alpha);
  CurvePoint pt = time_map_point(spec, alpha, cfg);
  if (!pt.converged) {
    std::ostringstream os;
    os.precision(17);
    os << "time map did not converge at alpha = " << alpha << " (error estimate "
       << pt.err_estimate << ")";
    throw QuadratureFailure(os.str());
  }
  return pt;
}

SweepResult sweep_curve(const ProblemSpec& spec, const AlphaGrid& grid,
                        const QuadratureConfig& cfg, unsigned threads) {
  spec.validate();
  cfg.validate();
  const std::vector<double> alphas = grid.points();
  require_admissible(spec, alphas.back());

  std::vector<CurvePoint> points(alphas.size());
  std::vector<std::optional<std::string>> errors(alphas.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < alphas.size(); i = next++) {
      try {
        points[i] = time_map_point(spec, alphas[i], cfg);
      } catch (const std::exception& e) {
        points[i] = CurvePoint{alphas[i], std::nan(""), std::nan(""), 0, false};
        errors[i] = e.what();
      }
    }
  };
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, alphas.size()));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  SweepResult result{spec, grid, std::move(points)};
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    if (!result.points[i].converged) {
      std::string what = describe("sweep point failed", alphas[i]);
      if (errors[i]) what += ": " + *errors[i];
      throw SweepFailure(what, alphas[i], std::move(result));
    }
  }
  return result;
}

SolutionProfile solution_profile(const ProblemSpec& spec, double alpha, double lambda,
                                 std::size_t sample_count, const QuadratureConfig& cfg) {
  spec.validate();
  if (!(alpha > 0.0) || !(lambda > 0.0)) {
    throw std::invalid_argument("solution_profile needs alpha > 0 and lambda > 0");
  }
  if (sample_count < 2) throw std::invalid_argument("sample_count must be >= 2");
  const std::size_t N = sample_count;
  const double scale = alpha / std::sqrt(2.0 * lambda);

  const SingularIntegrand f = [&](double s, double c) {
    return scale * eval_D(spec, alpha * s) / std::sqrt(delta_G(spec, alpha, s, c));
  };
  const Integrand smooth = [&](double s) { return f(s, 1.0 - s); };

  std::vector<double> s(N + 1);
  for (std::size_t j = 0; j <= N; ++j) s[j] = std::sin(kPi * j / (2.0 * N));
  s[N] = 1.0;

  // t(u) ~ u^{k+1} near 0, so the first panels are far below any absolute
  // tolerance; their relative accuracy is what the derivative sees.
  QuadratureConfig panel_cfg = cfg;
  panel_cfg.abs_tol = std::numeric_limits<double>::min();

  SolutionProfile prof;
  prof.alpha = alpha;
  prof.lambda = lambda;
  prof.samples.reserve(N + 1);
  prof.samples.push_back({0.0, 0.0});
  CompensatedSum t;
  double err = 0.0;
  for (std::size_t j = 1; j <= N; ++j) {
    QuadratureResult r;
    if (j < N) {
      const auto splits = static_cast<std::size_t>(
          std::ceil((s[j] - s[j - 1]) * alpha / kPi * cfg.osc_panel_fraction));
      r = integrate_adaptive_nothrow(smooth, s[j - 1], s[j], panel_cfg,
                                     std::max<std::size_t>(splits, 1));
    } else {
      r = integrate_endpoint_singular(f, s[N - 1], 1.0, panel_cfg);
    }
    if (!r.converged) throw QuadratureFailure(describe("profile panel did not converge", alpha));
    t.add(r.value);
    err += r.err_estimate;
    prof.samples.push_back({t.value(), alpha * s[j]});
  }
  prof.samples.back().u = alpha;
  prof.err_estimate = err;

  const double miss = std::abs(prof.samples.back().t - 0.5);
  if (miss > 10.0 * std::max(err, 1e-12)) {
    std::ostringstream os;
    os.precision(17);
    os << "t(alpha) = " << prof.samples.back().t << " misses 1/2 by " << miss
       << " (quadrature error " << err << "); (alpha, lambda) is not a solution pair";
    throw InconsistentPair(os.str());
  }
  return prof;
}

double profile_energy_drift(const ProblemSpec& spec, const SolutionProfile& prof) {
  constexpr int kWidth = 7;  // sixth-order stencils
  const std::size_t N = prof.samples.size() - 1;
  if (N < kWidth) throw std::invalid_argument("profile too short for centered differences");
  const double h = kPi / (2.0 * N);
  const double alpha = prof.alpha;
  const double t_mid = prof.samples[N].t;
  // Beyond theta = pi/2 the profile continues by t -> 2 t(1/2) - t.
  auto t_at = [&](std::size_t j) {
    return j <= N ? prof.samples[j].t : 2.0 * t_mid - prof.samples[2 * N - j].t;
  };
  // t'(theta) vanishes like a power of theta at 0, which has no symmetric
  // extension; the first samples use stencils shifted to the right.
  std::array<std::array<double, kWidth>, kWidth / 2 + 1> weights;
  for (int shift = 0; shift <= kWidth / 2; ++shift) {
    std::array<double, kWidth> offsets;
    for (int i = 0; i < kWidth; ++i) offsets[i] = i - shift;
    weights[shift] = first_derivative_weights(offsets);
  }
  const double norm = 2.0 * prof.lambda * eval_G(spec, alpha);
  double worst = 0.0;
  for (std::size_t j = 1; j < N; ++j) {
    const std::size_t shift = std::min<std::size_t>(j, kWidth / 2);
    double dt = 0.0;
    for (int i = 0; i < kWidth; ++i) dt += weights[shift][i] * t_at(j - shift + i);
    dt /= h;
    const double theta = h * static_cast<double>(j);
    const double u = prof.samples[j].u;
    const double du = alpha * std::cos(theta) / dt;
    const double phi = 0.5 * kPi - theta;
    const double c = 2.0 * std::sin(0.5 * phi) * std::sin(0.5 * phi);
    const double flux = eval_D(spec, u) * du;
    const double energy = 2.0 * prof.lambda * delta_G(spec, alpha, std::sin(theta), c);
    worst = std::max(worst, std::abs(flux * flux - energy) / norm);
  }
  return worst;
}

void write_csv(std::ostream& os, const std::vector<CurvePoint>& points, bool with_converged) {
  os << "alpha,lambda,err_estimate,nodes" << (with_converged ? ",converged" : "") << '\n';
  char buf[128];
  for (const auto& p : points) {
    std::snprintf(buf, sizeof buf, "%.16e,%.16e,%.16e,%zu", p.alpha, p.lambda, p.err_estimate,
                  p.nodes_used);
    os << buf;
    if (with_converged) os << ',' << (p.converged ? "true" : "false");
    os << '\n';
  }
}

std::vector<CurvePoint> read_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw SchemaMismatch("empty CSV");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  bool with_converged;
  if (line == "alpha,lambda,err_estimate,nodes") {
    with_converged = false;
  } else if (line == "alpha,lambda,err_estimate,nodes,converged") {
    with_converged = true;
  } else {
    throw SchemaMismatch("unexpected CSV header '" + line + "'");
  }
  std::vector<CurvePoint> out;
  std::size_t row = 1;
  while (std::getline(is, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
    if (cells.size() != (with_converged ? 5u : 4u)) {
      throw SchemaMismatch("row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
                           " fields");
    }
    CurvePoint p;
    try {
      std::size_t used = 0;
      p.alpha = std::stod(cells[0], &used);
      if (used != cells[0].size()) throw std::invalid_argument("trailing");
      p.lambda = std::stod(cells[1], &used);
      if (used != cells[1].size()) throw std::invalid_argument("trailing");
      p.err_estimate = std::stod(cells[2], &used);
      if (used != cells[2].size()) throw std::invalid_argument("trailing");
      p.nodes_used = std::stoull(cells[3], &used);
      if (used != cells[3].size()) throw std::invalid_argument("trailing");
    } catch (const std::logic_error&) {
      throw SchemaMismatch("row " + std::to_string(row) + " is not numeric");
    }
    if (with_converged) {
      if (cells[4] == "true") {
        p.converged = true;
      } else if (cells[4] == "false") {
        p.converged = false;
      } else {
        throw SchemaMismatch("row " + std::to_string(row) + ": converged must be true/false");
      }
    }
    if (!out.empty() && !(p.alpha > out.back().alpha)) {
      throw SchemaMismatch("alpha column is not strictly increasing at row " +
                           std::to_string(row));
    }
    out.push_back(p);
  }
  if (out.empty()) throw SchemaMismatch("CSV has no data rows");
  return out;
}

}  // namespace bifmap
