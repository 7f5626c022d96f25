#include "bifmap/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"

#include "bifmap/asymptotics.hpp"
#include "bifmap/errors.hpp"
#include "bifmap/oracle.hpp"
#include "bifmap/svg.hpp"
#include "bifmap/timemap.hpp"

namespace bifmap {

namespace {

using ojson = nlohmann::ordered_json;

struct Options {
  std::string config;
  // problem
  std::string family;
  int n = 1, k = 0, m = 1;
  double p = 1.0;
  // quadrature
  double rel_tol = QuadratureConfig{}.rel_tol;
  double abs_tol = QuadratureConfig{}.abs_tol;
  int max_levels = QuadratureConfig{}.max_levels;
  std::size_t max_panels = QuadratureConfig{}.max_panels;
  unsigned threads = 1;
  // eval
  double alpha = 0.0;
  // sweep
  double start = 0.0, stop = 0.0;
  std::size_t count = 64;
  std::string spacing = "linear";
  int per_half_period = 4;
  std::string out_path, svg_path;
  // fit / verify
  std::string in_path, json_path, theorem;
  double tol = 1e-6;
  long samples = 8;
};

// Thrown for bad input that CLI11 cannot see (ranges, files).
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

ojson num(double v) { return std::isfinite(v) ? ojson(v) : ojson(); }

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw UsageError("cannot open '" + path + "' for writing");
  f << text;
  f.flush();
  if (!f) throw UsageError("failed writing '" + path + "'");
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw UsageError("cannot read '" + path + "'");
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

std::vector<CurvePoint> read_curve(const std::string& path) {
  std::istringstream is(read_file(path));
  return read_csv(is);
}

QuadratureConfig quad_config(const Options& o) {
  QuadratureConfig cfg;
  cfg.rel_tol = o.rel_tol;
  cfg.abs_tol = o.abs_tol;
  cfg.max_levels = o.max_levels;
  cfg.max_panels = o.max_panels;
  cfg.validate();
  return cfg;
}

ProblemSpec spec_from(const Options& o) {
  ProblemSpec spec;
  spec.family = parse_family(o.family);
  spec.n = o.n;
  spec.p = o.p;
  spec.k = o.k;
  spec.m = o.m;
  spec.validate();
  return spec;
}

void add_problem_flags(CLI::App* sub, Options& o, bool family_required) {
  auto* fam = sub->add_option("--family", o.family,
                              "osc-diffusion | osc-reaction | osc-both | pure-power");
  if (family_required) fam->required();
  sub->add_option("--n", o.n, "diffusion power: D = p u^{2n} + sin u");
  sub->add_option("--p", o.p, "diffusion weight p > 0");
  sub->add_option("--k", o.k, "D = u^k");
  sub->add_option("--m", o.m, "g = u^{2m-k-1} (+ sin u)");
}

void add_quad_flags(CLI::App* sub, Options& o) {
  sub->add_option("--rel-tol", o.rel_tol, "relative quadrature tolerance");
  sub->add_option("--abs-tol", o.abs_tol, "absolute quadrature tolerance");
  sub->add_option("--max-levels", o.max_levels, "tanh-sinh refinement depth (<= 15)");
  sub->add_option("--max-panels", o.max_panels, "adaptive panel budget per integral");
}

// ---------------------------------------------------------------- eval

int cmd_eval(const Options& o, std::ostream& out) {
  const ProblemSpec spec = spec_from(o);
  if (!(o.alpha > 0.0) || !std::isfinite(o.alpha)) throw UsageError("--alpha must be positive");
  const CurvePoint pt = lambda_of_alpha(spec, o.alpha, quad_config(o));
  ojson j;
  j["alpha"] = pt.alpha;
  j["lambda"] = pt.lambda;
  j["err_estimate"] = pt.err_estimate;
  j["nodes_used"] = pt.nodes_used;
  j["converged"] = pt.converged;
  out << j.dump(2) << "\n";
  return pt.converged ? kExitOk : kExitQuadrature;
}

// ---------------------------------------------------------------- sweep

double leading_asymptote(const ProblemSpec& spec, double alpha) {
  if (spec.family == ProblemFamily::PurePower) return pure_power_law(spec.k, spec.m, alpha);
  return predict_large_alpha(spec, alpha).lambda_leading;
}

std::string sweep_svg(const ProblemSpec& spec, const AlphaGrid& grid,
                      const std::vector<CurvePoint>& points) {
  PlotSpec plot;
  plot.title = "bifurcation curve, " + std::string(family_name(spec.family));
  plot.x_label = "alpha";
  plot.y_label = "lambda";
  plot.log_x = plot.log_y = grid.spacing == GridSpacing::Log;
  PlotSeries num_series{"lambda (time map)", {}, {}};
  PlotSeries lead{"leading asymptote", {}, {}};
  for (const auto& pt : points) {
    num_series.x.push_back(pt.alpha);
    num_series.y.push_back(pt.converged ? pt.lambda : std::nan(""));
    lead.x.push_back(pt.alpha);
    lead.y.push_back(leading_asymptote(spec, pt.alpha));
  }
  plot.series = {std::move(num_series), std::move(lead)};
  return render_svg(plot);
}

int cmd_sweep(const Options& o, std::ostream& out, std::ostream& err) {
  const ProblemSpec spec = spec_from(o);
  AlphaGrid grid;
  grid.start = o.start;
  grid.stop = o.stop;
  grid.count = o.count;
  grid.spacing = parse_spacing(o.spacing);
  grid.per_half_period = o.per_half_period;
  if (o.count < 2) throw UsageError("--count must be at least 2");
  const QuadratureConfig cfg = quad_config(o);

  std::vector<CurvePoint> points;
  int status = kExitOk;
  try {
    points = sweep_curve(spec, grid, cfg, o.threads).points;
  } catch (const SweepFailure& e) {
    err << "sweep: " << e.what() << "\n";
    points = e.partial().points;
    status = kExitPartialSweep;
  }
  std::ostringstream csv;
  write_csv(csv, points, status != kExitOk);
  write_file(o.out_path, csv.str());
  if (!o.svg_path.empty()) write_file(o.svg_path, sweep_svg(spec, grid, points));
  std::size_t good = 0;
  for (const auto& pt : points) good += pt.converged ? 1 : 0;
  out << "wrote " << points.size() << " points (" << good << " converged) to " << o.out_path
      << "\n";
  return status;
}

// ---------------------------------------------------------------- fit

ProblemSpec fit_spec(const Options& o, Regime regime, const CLI::App* sub) {
  const auto given = [&](const char* name) { return sub->get_option(name)->count() > 0; };
  if (given("--family")) return spec_from(o);
  ProblemSpec spec;
  switch (regime) {
    case Regime::ReactionOscillation:
      spec = ProblemSpec::osc_reaction(given("--k") ? o.k : 2, given("--m") ? o.m : 2);
      break;
    case Regime::DiffusionOscillation:
      spec = ProblemSpec::osc_diffusion(o.n, o.p);
      break;
    case Regime::BothOscillation:
      spec = ProblemSpec::osc_both();
      break;
  }
  spec.validate();
  return spec;
}

int cmd_fit(const Options& o, const CLI::App* sub, std::ostream& out, std::ostream& err) {
  Regime regime;
  try {
    regime = parse_regime(o.theorem);
  } catch (const std::exception&) {
    throw UsageError("--theorem must be one of 1.1, 1.2i, 1.3i");
  }
  const ProblemSpec spec = fit_spec(o, regime, sub);
  const AsymptoticModel model = regime_model(regime, spec);
  std::vector<CurvePoint> points;
  for (const auto& pt : read_curve(o.in_path)) {
    if (pt.converged) points.push_back(pt);
  }

  ojson j;
  j["theorem"] = std::string(regime_token(regime));
  j["family"] = std::string(family_name(spec.family));
  j["model"] = {{"leading_coeff", model.leading_coeff},   {"leading_exp", model.leading_exp},
                {"second_coeff", model.second_coeff},     {"second_exp", model.second_exp},
                {"phase_shift", model.phase_shift},       {"remainder_exp", model.remainder_exp}};
  bool pass = false;
  try {
    const EnvelopeFit fit = analyze_residual(points, model);
    j["fit"] = ojson::parse(to_json(fit));
    const auto checks = check_fit(fit, model);
    pass = std::all_of(checks.begin(), checks.end(), [](const FitCheck& c) { return c.pass; });
    ojson arr = ojson::array();
    for (const auto& c : checks) {
      arr.push_back({{"name", c.name}, {"measured", num(c.measured)}, {"target", c.target},
                     {"pass", c.pass}});
    }
    j["checks"] = arr;
    std::string summary;
    if (model.second_coeff == 0.0) {
      char buf[128];
      std::snprintf(buf, sizeof buf, "second term below detection, remainder exponent <= %.1f",
                    model.remainder_exp + 0.2);
      summary = fit.below_detection ? "residual below detection" : buf;
      if (!pass) summary = "residual decays slower than the remainder bound";
    } else {
      summary = pass ? "oscillating second term matches the prediction"
                     : "oscillating second term misses the prediction";
    }
    j["summary"] = summary;
  } catch (const InsufficientCoverage& e) {
    j["fit"] = nullptr;
    j["summary"] = std::string("insufficient coverage: ") + e.what();
    err << "fit: " << e.what() << "\n";
  }
  j["pass"] = pass;
  const std::string text = j.dump(2) + "\n";
  if (!o.json_path.empty()) write_file(o.json_path, text);
  out << text;
  return pass ? kExitOk : kExitFitFail;
}

// ---------------------------------------------------------------- verify

std::vector<std::size_t> pick_rows(std::size_t rows, std::size_t samples) {
  std::vector<std::size_t> idx;
  if (rows == 0) return idx;
  if (samples >= rows) {
    for (std::size_t i = 0; i < rows; ++i) idx.push_back(i);
  } else if (samples == 1) {
    idx.push_back((rows - 1) / 2);
  } else {
    for (std::size_t i = 0; i < samples; ++i) {
      idx.push_back(static_cast<std::size_t>(
          std::llround(static_cast<double>(i) * static_cast<double>(rows - 1) /
                       static_cast<double>(samples - 1))));
    }
  }
  return idx;
}

int cmd_verify(const Options& o, std::ostream& out, std::ostream& err) {
  const ProblemSpec spec = spec_from(o);
  if (o.samples < 1) throw UsageError("--samples must be at least 1");
  if (!(o.tol > 0.0)) throw UsageError("--tol must be positive");
  std::vector<CurvePoint> rows;
  for (const auto& pt : read_curve(o.in_path)) {
    if (pt.converged) rows.push_back(pt);
  }
  const auto idx = pick_rows(rows.size(), static_cast<std::size_t>(o.samples));

  std::vector<double> residual(idx.size(), std::nan(""));
  std::vector<char> ok(idx.size(), 0);
  std::vector<std::string> why(idx.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < idx.size(); i = next++) {
      const CurvePoint& pt = rows[idx[i]];
      try {
        const VerifyReport rep = verify_pair_report(spec, pt.alpha, pt.lambda, o.tol);
        residual[i] = std::abs(rep.shot.boundary_residual);
        ok[i] = rep.ok;
      } catch (const std::exception& e) {
        why[i] = e.what();
      }
    }
  };
  unsigned threads = o.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : o.threads;
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(1, idx.size())));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  std::size_t passed = 0;
  double worst = 0.0;
  for (std::size_t i = 0; i < idx.size(); ++i) {
    passed += ok[i] ? 1 : 0;
    worst = std::isnan(residual[i]) ? std::numeric_limits<double>::infinity()
                                    : std::max(worst, residual[i]);
    if (!ok[i]) {
      err << "verify: alpha = " << rows[idx[i]].alpha << " failed";
      if (!why[i].empty()) err << " (" << why[i] << ")";
      err << "\n";
    }
  }
  ojson j;
  j["checked"] = idx.size();
  j["passed"] = passed;
  j["worst_residual"] = num(worst);
  out << j.dump(2) << "\n";
  return passed == idx.size() ? kExitOk : kExitVerifyFail;
}

// ---------------------------------------------------------------- config

std::string flag_of(std::string key) {
  std::replace(key.begin(), key.end(), '_', '-');
  return "--" + key;
}

// Config tokens go right after the subcommand, so later command-line flags
// take precedence under the take-last policy.
std::vector<std::string> merge_config(const CLI::App& app, const std::vector<std::string>& args) {
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) throw UsageError("--config needs a file");
      path = args[i + 1];
    } else if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
    }
  }
  if (path.empty() || args.empty()) return args;

  const CLI::App* sub = nullptr;
  for (const auto* s : app.get_subcommands({})) {
    if (s->get_name() == args.front()) sub = s;
  }
  if (sub == nullptr) return args;  // let the parser report it

  std::vector<std::string> tokens;
  for (const auto& [key, value] : parse_key_values(read_file(path))) {
    const std::string flag = flag_of(key);
    if (flag == "--config") throw UsageError("config files cannot include other configs");
    bool known = false;
    for (const auto* s : app.get_subcommands({})) known = known || s->get_option_no_throw(flag);
    if (!known) throw UsageError("unknown config key '" + key + "'");
    if (sub->get_option_no_throw(flag) != nullptr) {
      tokens.push_back(flag);
      tokens.push_back(value);
    }
  }
  std::vector<std::string> merged{args.front()};
  merged.insert(merged.end(), tokens.begin(), tokens.end());
  merged.insert(merged.end(), args.begin() + 1, args.end());
  return merged;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Bifurcation curves of [D(u)u']' + lambda g(u) = 0 from the time map", "bifmap"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);

  auto* eval = app.add_subcommand("eval", "lambda at one alpha, as JSON");
  add_problem_flags(eval, o, true);
  add_quad_flags(eval, o);
  eval->add_option("--alpha", o.alpha, "sup-norm of the solution")->required();
  eval->add_option("--tol", o.rel_tol, "relative quadrature tolerance");

  auto* sweep = app.add_subcommand("sweep", "lambda over a grid of alpha, as CSV");
  add_problem_flags(sweep, o, true);
  add_quad_flags(sweep, o);
  sweep->add_option("--start", o.start, "first alpha")->required();
  sweep->add_option("--stop", o.stop, "last alpha")->required();
  sweep->add_option("--count", o.count, "points on linear and log grids");
  sweep->add_option("--spacing", o.spacing, "linear | log | phase-locked");
  sweep->add_option("--per-half-period", o.per_half_period,
                    "phase-locked samples per half-period of sin(alpha)");
  sweep->add_option("--out", o.out_path, "CSV output")->required();
  sweep->add_option("--svg", o.svg_path, "SVG plot of lambda and the leading asymptote");

  auto* fit = app.add_subcommand("fit", "envelope fit of a curve against an asymptotic law");
  add_problem_flags(fit, o, false);
  fit->add_option("--in", o.in_path, "CSV from sweep")->required();
  fit->add_option("--theorem", o.theorem, "1.1 | 1.2i | 1.3i")->required();
  fit->add_option("--json", o.json_path, "write the fit summary here as well");

  auto* verify = app.add_subcommand("verify", "cross-check curve points by shooting");
  add_problem_flags(verify, o, true);
  verify->add_option("--in", o.in_path, "CSV from sweep")->required();
  verify->add_option("--tol", o.tol, "boundary residual tolerance");
  verify->add_option("--samples", o.samples, "rows to check, evenly spread");

  for (auto* sub : {eval, sweep, fit, verify}) {
    sub->add_option("--config", o.config, "flat key = value file; flags override it");
  }
  for (auto* sub : {sweep, verify}) {
    sub->add_option("--threads", o.threads, "worker threads, 0 = all cores");
  }

  try {
    std::vector<std::string> merged = merge_config(app, args);
    std::reverse(merged.begin(), merged.end());
    app.parse(merged);
  } catch (const CLI::CallForHelp&) {
    const CLI::App* target = &app;
    for (const auto* s : app.get_subcommands()) target = s;
    out << target->help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "bifmap: " << e.what() << "\n" << app.help();
    return kExitUsage;
  } catch (const UsageError& e) {
    err << "bifmap: " << e.what() << "\n";
    return kExitUsage;
  } catch (const InvalidSpec& e) {
    err << "bifmap: config: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (eval->parsed()) return cmd_eval(o, out);
    if (sweep->parsed()) return cmd_sweep(o, out, err);
    if (fit->parsed()) return cmd_fit(o, fit, out, err);
    if (verify->parsed()) return cmd_verify(o, out, err);
    return kExitUsage;
  } catch (const AdmissibilityViolation& e) {
    err << "bifmap: " << e.what() << "\n";
    return kExitAdmissibility;
  } catch (const QuadratureFailure& e) {
    err << "bifmap: " << e.what() << "\n";
    return kExitQuadrature;
  } catch (const PanelBudgetExceeded& e) {
    err << "bifmap: " << e.what() << "\n";
    return kExitQuadrature;
  } catch (const NonFinite& e) {
    err << "bifmap: " << e.what() << "\n";
    return kExitQuadrature;
  } catch (const std::exception& e) {
    // bad parameters, unreadable or malformed files, unsupported pairings
    err << "bifmap: " << e.what() << "\n";
    return kExitUsage;
  }
}

}  // namespace bifmap
