#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "bifmap/asymptotics.hpp"
#include "bifmap/cli.hpp"
#include "bifmap/svg.hpp"
#include "bifmap/timemap.hpp"
#include "doctest.h"
#include "json.hpp"

using namespace bifmap;
namespace fs = std::filesystem;

namespace {

struct Run {
  int status;
  std::string out, err;
};

Run run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int status = run_cli(args, out, err);
  return {status, out.str(), err.str()};
}

std::string tmp(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "bifmap_cli_tests";
  fs::create_directories(dir);
  return (dir / name).string();
}

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

void spit(const std::string& path, const std::string& text) {
  std::ofstream(path, std::ios::binary) << text;
}

// Tag balance of a small XML document without comments or CDATA.
bool balanced_xml(const std::string& doc) {
  std::vector<std::string> stack;
  std::size_t i = 0;
  while ((i = doc.find('<', i)) != std::string::npos) {
    const std::size_t j = doc.find('>', i);
    if (j == std::string::npos) return false;
    const std::string tag = doc.substr(i + 1, j - i - 1);
    i = j + 1;
    if (tag.empty()) return false;
    if (tag[0] == '?') continue;
    if (tag.back() == '/') continue;
    const std::size_t end = tag.find_first_of(" \n\t");
    if (tag[0] == '/') {
      if (stack.empty() || stack.back() != tag.substr(1)) return false;
      stack.pop_back();
    } else {
      stack.push_back(tag.substr(0, end));
    }
  }
  return stack.empty();
}

std::size_t count_of(const std::string& s, const std::string& what) {
  std::size_t n = 0;
  for (std::size_t i = s.find(what); i != std::string::npos; i = s.find(what, i + 1)) ++n;
  return n;
}

}  // namespace

TEST_CASE("eval prints a curve point") {
  const auto r = run({"eval", "--family", "pure-power", "--k", "0", "--m", "1", "--alpha", "1"});
  REQUIRE(r.status == kExitOk);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["lambda"].get<double>() == doctest::Approx(9.8696044010893586).epsilon(1e-10));
  CHECK(j["alpha"].get<double>() == 1.0);
  CHECK(j["converged"].get<bool>());
  CHECK(j.contains("err_estimate"));
  CHECK(j.contains("nodes_used"));
}

TEST_CASE("eval exit statuses") {
  CHECK(run({"eval", "--family", "osc-diffusion", "--n", "1", "--p", "0.01", "--alpha", "10"}).status ==
        kExitAdmissibility);
  CHECK(run({"eval", "--family", "osc-reaction", "--k", "2", "--m", "2", "--alpha", "1",
             "--max-levels", "3", "--rel-tol", "1e-14"})
            .status == kExitQuadrature);
  CHECK(run({"eval", "--family", "pure-power"}).status == kExitUsage);
  CHECK(run({"eval", "--family", "nope", "--alpha", "1"}).status == kExitUsage);
  CHECK(run({"eval", "--family", "pure-power", "--alpha", "1", "--frob", "2"}).status == kExitUsage);
  CHECK(run({"eval", "--family", "pure-power", "--alpha", "-1"}).status == kExitUsage);
  CHECK(run({"eval", "--family", "pure-power", "--k", "3", "--m", "1", "--alpha", "1"}).status ==
        kExitUsage);
  CHECK(run({"frobnicate"}).status == kExitUsage);
  CHECK(run({}).status == kExitUsage);
}

TEST_CASE("help exits cleanly") {
  const auto r = run({"--help"});
  CHECK(r.status == kExitOk);
  CHECK(r.out.find("sweep") != std::string::npos);
  CHECK(run({"sweep", "--help"}).status == kExitOk);
}

TEST_CASE("eval on both-oscillating family sits inside the predicted envelope") {
  const auto r = run({"eval", "--family", "osc-both", "--alpha", "100"});
  REQUIRE(r.status == kExitOk);
  const double lam = nlohmann::json::parse(r.out)["lambda"].get<double>();
  const auto pred = predict_large_alpha(ProblemSpec::osc_both(), 100.0);
  CHECK(std::abs(lam - pred.lambda_leading) <=
        1.2 * std::abs(pred.model.second_coeff) * std::pow(100.0, pred.model.second_exp));
}

TEST_CASE("pure power sweep has a constant ratio") {
  const std::string csv = tmp("pp.csv");
  const auto r = run({"sweep", "--family", "pure-power", "--k", "2", "--m", "2", "--start", "0.5",
                      "--stop", "50", "--count", "12", "--spacing", "log", "--out", csv});
  REQUIRE(r.status == kExitOk);
  std::istringstream is(slurp(csv));
  const auto pts = read_csv(is);
  REQUIRE(pts.size() == 12);
  const double target = 4.0 * 2.0 * std::pow(coeff_A(2, 2), 2);
  for (const auto& pt : pts) {
    CHECK(pt.lambda / std::pow(pt.alpha, 2.0) == doctest::Approx(target).epsilon(1e-8));
  }
}

TEST_CASE("sweep validation and partial output") {
  CHECK(run({"sweep", "--family", "pure-power", "--start", "1", "--stop", "10", "--count", "0",
             "--out", tmp("empty.csv")})
            .status == kExitUsage);
  CHECK(run({"sweep", "--family", "pure-power", "--start", "10", "--stop", "1", "--out",
             tmp("empty.csv")})
            .status == kExitUsage);
  CHECK(run({"sweep", "--family", "pure-power", "--start", "1", "--stop", "10", "--spacing", "cubic",
             "--out", tmp("empty.csv")})
            .status == kExitUsage);
  CHECK(run({"sweep", "--family", "osc-diffusion", "--p", "0.01", "--start", "1", "--stop", "10",
             "--out", tmp("adm.csv")})
            .status == kExitAdmissibility);

  const std::string csv = tmp("partial.csv");
  const auto r = run({"sweep", "--family", "osc-reaction", "--k", "2", "--m", "2", "--start", "1",
                      "--stop", "110", "--count", "5", "--max-levels", "3", "--out", csv});
  CHECK(r.status == kExitPartialSweep);
  const std::string text = slurp(csv);
  CHECK(text.rfind("alpha,lambda,err_estimate,nodes,converged\n", 0) == 0);
  std::istringstream is(text);
  const auto pts = read_csv(is);
  REQUIRE(pts.size() == 5);
  CHECK_FALSE(pts.front().converged);
  CHECK(pts.back().converged);
}

TEST_CASE("sweep output does not depend on the thread count") {
  std::vector<std::string> outs;
  for (const char* threads : {"1", "3", "0"}) {
    const std::string csv = tmp(std::string("det") + threads + ".csv");
    const auto r = run({"sweep", "--family", "osc-both", "--start", "1", "--stop", "120", "--count",
                        "61", "--spacing", "log", "--out", csv, "--threads", threads});
    REQUIRE(r.status == kExitOk);
    outs.push_back(slurp(csv));
  }
  CHECK(outs[0] == outs[1]);
  CHECK(outs[0] == outs[2]);
  CHECK(outs[0].find("\r") == std::string::npos);
}

TEST_CASE("sweep SVG is self-contained and well formed") {
  const std::string csv = tmp("svg.csv"), svg = tmp("curve.svg");
  for (const char* spacing : {"log", "linear"}) {
    const auto r = run({"sweep", "--family", "osc-reaction", "--k", "2", "--m", "2", "--start", "2",
                        "--stop", "60", "--count", "40", "--spacing", spacing, "--out", csv, "--svg",
                        svg});
    REQUIRE(r.status == kExitOk);
    const std::string doc = slurp(svg);
    CHECK(doc.find("viewBox=\"0 0 1200 800\"") != std::string::npos);
    CHECK(balanced_xml(doc));
    CHECK(doc.find("href") == std::string::npos);
    CHECK(doc.find("url(") == std::string::npos);
    CHECK(count_of(doc, "<polyline") >= 2);
    CHECK(doc.find("leading asymptote") != std::string::npos);
  }
}

TEST_CASE("svg writer escapes text and breaks lines at bad points") {
  PlotSpec plot;
  plot.title = "a < b & \"c\"";
  plot.log_y = true;
  plot.series = {{"s1", {1, 2, 3, 4, 5}, {1, 2, -1, 4, 5}}, {"s2", {1, 2}, {std::nan(""), 3}}};
  const std::string doc = render_svg(plot);
  CHECK(balanced_xml(doc));
  CHECK(doc.find("a &lt; b &amp; &quot;c&quot;") != std::string::npos);
  CHECK(count_of(doc, "<polyline") == 3);
  PlotSpec empty;
  CHECK(balanced_xml(render_svg(empty)));
}

TEST_CASE("fit against the regimes") {
  const std::string d1 = tmp("d1.csv"), d2 = tmp("d2.csv"), pp = tmp("ppfit.csv"), js = tmp("fit.json");
  REQUIRE(run({"sweep", "--family", "osc-diffusion", "--n", "1", "--p", "1", "--start", "50", "--stop",
               "500", "--spacing", "phase-locked", "--out", d1})
              .status == kExitOk);
  const auto r1 = run({"fit", "--in", d1, "--theorem", "1.2i", "--json", js});
  CHECK(r1.status == kExitOk);
  const auto j1 = nlohmann::json::parse(r1.out);
  CHECK(j1["summary"].get<std::string>() == "second term below detection, remainder exponent <= -0.8");
  CHECK(j1["fit"]["decay_exp"].get<double>() <= -0.8);
  CHECK(slurp(js) == r1.out);

  REQUIRE(run({"sweep", "--family", "pure-power", "--k", "0", "--m", "1", "--start", "50", "--stop",
               "150", "--spacing", "phase-locked", "--out", pp})
              .status == kExitOk);
  const auto r2 = run({"fit", "--in", pp, "--theorem", "1.1", "--family", "pure-power", "--k", "0",
                       "--m", "1"});
  CHECK(r2.status == kExitOk);
  const auto j2 = nlohmann::json::parse(r2.out);
  CHECK(j2["fit"]["sign_changes"].get<int>() <= 2);
  CHECK(std::abs(j2["fit"]["amplitude"].get<double>()) <= 1e-6);

  // wrong law for the curve
  CHECK(run({"fit", "--in", d1, "--theorem", "1.2i", "--p", "2"}).status == kExitFitFail);
  // too short to fit
  REQUIRE(run({"sweep", "--family", "osc-both", "--start", "100", "--stop", "110", "--spacing",
               "phase-locked", "--out", d2})
              .status == kExitOk);
  CHECK(run({"fit", "--in", d2, "--theorem", "1.3i"}).status == kExitFitFail);
}

TEST_CASE("fit usage errors") {
  const std::string bad = tmp("bad.csv");
  spit(bad, "alpha,mu\n1,2\n");
  CHECK(run({"fit", "--in", bad, "--theorem", "1.1"}).status == kExitUsage);
  CHECK(run({"fit", "--in", tmp("missing.csv"), "--theorem", "1.1"}).status == kExitUsage);
  CHECK(run({"fit", "--in", bad, "--theorem", "2.7"}).status == kExitUsage);
  CHECK(run({"fit", "--in", bad}).status == kExitUsage);
  CHECK(run({"fit", "--in", bad, "--theorem", "1.3i", "--family", "pure-power"}).status ==
        kExitUsage);
}

TEST_CASE("verify accepts a sweep and rejects a perturbed one") {
  const std::string csv = tmp("ver.csv"), pert = tmp("ver_pert.csv");
  REQUIRE(run({"sweep", "--family", "osc-reaction", "--k", "2", "--m", "2", "--start", "1", "--stop",
               "100", "--count", "9", "--out", csv})
              .status == kExitOk);
  const auto r = run({"verify", "--family", "osc-reaction", "--k", "2", "--m", "2", "--in", csv,
                      "--tol", "1e-6", "--samples", "5"});
  CHECK(r.status == kExitOk);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["checked"].get<int>() == 5);
  CHECK(j["passed"].get<int>() == 5);
  CHECK(j["worst_residual"].get<double>() <= 1e-6);

  std::istringstream is(slurp(csv));
  auto pts = read_csv(is);
  for (auto& pt : pts) pt.lambda *= 1.01;
  std::ostringstream os;
  write_csv(os, pts, false);
  spit(pert, os.str());
  const auto bad = run({"verify", "--family", "osc-reaction", "--k", "2", "--m", "2", "--in", pert,
                        "--samples", "3"});
  CHECK(bad.status == kExitVerifyFail);
  CHECK(nlohmann::json::parse(bad.out)["passed"].get<int>() == 0);

  CHECK(run({"verify", "--family", "osc-reaction", "--k", "2", "--m", "2", "--in", csv, "--samples",
             "0"})
            .status == kExitUsage);
}

TEST_CASE("config file with flag precedence") {
  const std::string cfg = tmp("run.cfg");
  spit(cfg, "# problem\nfamily = pure-power\nk = 0\nm = 1\nalpha = 3\nrel_tol = 1e-12\n");
  const auto r = run({"eval", "--config", cfg, "--alpha", "2"});
  REQUIRE(r.status == kExitOk);
  CHECK(nlohmann::json::parse(r.out)["alpha"].get<double>() == 2.0);
  const auto r2 = run({"eval", "--config", cfg});
  REQUIRE(r2.status == kExitOk);
  CHECK(nlohmann::json::parse(r2.out)["alpha"].get<double>() == 3.0);

  // keys meant for other subcommands are skipped, unknown ones are not
  spit(cfg, "family = pure-power\nstart = 1\nstop = 2\nalpha = 1\n");
  CHECK(run({"eval", "--config", cfg}).status == kExitOk);
  spit(cfg, "family = pure-power\nalpha = 1\ncolour = blue\n");
  CHECK(run({"eval", "--config", cfg}).status == kExitUsage);
  spit(cfg, "family pure-power\n");
  CHECK(run({"eval", "--config", cfg, "--alpha", "1"}).status == kExitUsage);
  CHECK(run({"eval", "--config", tmp("nope.cfg"), "--alpha", "1"}).status == kExitUsage);
}
