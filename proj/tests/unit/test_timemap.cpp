#include <chrono>
#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include "bifmap/errors.hpp"
#include "bifmap/timemap.hpp"
#include "doctest.h"
#include "props.hpp"

using namespace bifmap;
using std::numbers::pi;

namespace {

// A_{k,m} = B((k+1)/(2m), 1/2) / (2m), computed independently here.
double beta_A(int k, int m) {
  const double a = (k + 1.0) / (2.0 * m);
  return std::exp(std::lgamma(a) + std::lgamma(0.5) - std::lgamma(a + 0.5)) / (2.0 * m);
}

double pure_law(int k, int m, double alpha) {
  const double A = beta_A(k, m);
  return 4.0 * m * A * A * std::pow(alpha, 2.0 * k + 2.0 - 2.0 * m);
}

struct Frozen {
  ProblemSpec spec;
  double alpha;
  double lambda;
};

// Arbitrary-precision evaluation of the u-form time map, independent of the
// closed-form potentials used by the library.
const Frozen kFrozen[] = {
    {ProblemSpec::osc_diffusion(1, 1.0), 5.0, 73.517602847052857322},
    {ProblemSpec::osc_diffusion(1, 2.0), 0.3, 1.8423557565665404939},
    {ProblemSpec::osc_reaction(2, 2), 2.5, 13.740737200929493471},
    {ProblemSpec::osc_both(), 7.0, 136.30563140072509821},
    {ProblemSpec::osc_reaction(3, 3), 1.7, 4.6556695870316227044},
    {ProblemSpec::osc_diffusion(2, 0.5), 4.0, 217.96693553319533767},
    {ProblemSpec::osc_diffusion(1, 1.0), 100.0, 28710.84433883265145482},
    {ProblemSpec::osc_diffusion(1, 2.0), 250.0, 358885.0393468736613803},
    {ProblemSpec::osc_reaction(2, 2), 100.0, 28788.154087094843235},
    {ProblemSpec::osc_both(), 250.0, 179556.7860943209426484},
};

}  // namespace

TEST_CASE("linear problem gives pi^2 for every amplitude") {
  for (double alpha : {0.5, 1.0, 10.0, 100.0, 1e4}) {
    const auto pt = lambda_of_alpha(ProblemSpec::pure_power(0, 1), alpha);
    CHECK(pt.lambda == doctest::Approx(pi * pi).epsilon(1e-10));
    CHECK(pt.converged);
    CHECK(pt.alpha == alpha);
  }
}

TEST_CASE("pure power law") {
  for (auto [k, m] : {std::pair{0, 1}, {2, 2}, {4, 3}}) {
    for (double alpha : {0.5, 1.0, 10.0, 100.0}) {
      CAPTURE(k);
      CAPTURE(alpha);
      const auto pt = lambda_of_alpha(ProblemSpec::pure_power(k, m), alpha);
      CHECK(std::abs(pt.lambda - pure_law(k, m, alpha)) <= 1e-8 * pt.lambda);
    }
  }
  CHECK(lambda_of_alpha(ProblemSpec::pure_power(2, 2), 10.0).lambda ==
        doctest::Approx(287.109).epsilon(1e-5));
}

TEST_CASE("oscillating families against high-precision values") {
  for (const auto& f : kFrozen) {
    CAPTURE(family_name(f.spec.family));
    CAPTURE(f.alpha);
    const auto pt = lambda_of_alpha(f.spec, f.alpha);
    CHECK(std::abs(pt.lambda - f.lambda) <= 1e-9 * f.lambda);
    CHECK(std::abs(pt.lambda - f.lambda) <= std::max(pt.err_estimate, 1e-13 * f.lambda));
  }
}

TEST_CASE("OscDiffusion with p = 1 sits on 8 A^2 alpha^2 at alpha = 100") {
  const double A = beta_A(2, 2);
  const auto pt = lambda_of_alpha(ProblemSpec::osc_diffusion(1, 1.0), 100.0);
  CHECK(std::abs(pt.lambda - 8 * A * A * 1e4) <= 1.0);
}

TEST_CASE("inadmissible amplitudes are refused") {
  CHECK_THROWS_AS(lambda_of_alpha(ProblemSpec::osc_diffusion(1, 0.01), 10.0),
                  AdmissibilityViolation);
  CHECK_THROWS_AS(lambda_of_alpha(ProblemSpec::pure_power(0, 1), 0.0), std::invalid_argument);
}

TEST_CASE("tightening tolerances moves lambda by less than the coarse error estimate") {
  auto g = props::rng(5);
  const ProblemSpec specs[] = {ProblemSpec::osc_diffusion(1, 2.0), ProblemSpec::osc_both(),
                               ProblemSpec::osc_reaction(2, 2)};
  for (const auto& spec : specs) {
    for (int i = 0; i < 4; ++i) {
      const double alpha = props::log_uniform(g, 0.05, 300.0);
      QuadratureConfig coarse;
      coarse.rel_tol = 1e-8;
      coarse.abs_tol = 1e-10;
      QuadratureConfig fine = coarse;
      fine.rel_tol *= 1e-2;
      fine.abs_tol *= 1e-2;
      const auto a = lambda_of_alpha(spec, alpha, coarse);
      const auto b = lambda_of_alpha(spec, alpha, fine);
      CAPTURE(alpha);
      CHECK(std::abs(a.lambda - b.lambda) <= a.err_estimate);
    }
  }
}

TEST_CASE("lambda is continuous on a fine grid") {
  AlphaGrid grid{20.0, 21.0, 101, GridSpacing::Linear};
  const auto sweep = sweep_curve(ProblemSpec::osc_both(), grid);
  const auto& p = sweep.points;
  // Local slope from second neighbours; a jump would dwarf it.
  for (std::size_t i = 2; i + 2 < p.size(); ++i) {
    const double slope = std::max(std::abs(p[i + 2].lambda - p[i].lambda),
                                  std::abs(p[i].lambda - p[i - 2].lambda)) /
                         (2 * 0.01);
    CHECK(std::abs(p[i + 1].lambda - p[i].lambda) <= 2.0 * slope * 0.01);
  }
}

TEST_CASE("grids") {
  auto lin = AlphaGrid{1, 10, 10, GridSpacing::Linear}.points();
  REQUIRE(lin.size() == 10);
  CHECK(lin[3] == doctest::Approx(4.0));
  auto lg = AlphaGrid{0.01, 0.1, 20, GridSpacing::Log}.points();
  CHECK(lg.front() == 0.01);
  CHECK(lg.back() == 0.1);
  CHECK(lg[1] / lg[0] == doctest::Approx(lg[19] / lg[18]));

  const double base = 0.75 * pi;
  auto ph = AlphaGrid{base + 15 * pi, base + 150 * pi, 0, GridSpacing::PhaseLocked}.points();
  REQUIRE(ph.size() == 136);
  for (double a : ph) CHECK(std::abs(std::sin(a - pi / 4)) == doctest::Approx(1.0));
  auto ph4 = AlphaGrid{100, 110, 0, GridSpacing::PhaseLocked, 4}.points();
  CHECK(ph4[1] - ph4[0] == doctest::Approx(pi / 4));

  CHECK_THROWS_AS((AlphaGrid{1, 10, 0, GridSpacing::Linear}.points()), std::invalid_argument);
  CHECK_THROWS_AS((AlphaGrid{10, 1, 5, GridSpacing::Linear}.points()), std::invalid_argument);
  CHECK_THROWS_AS((AlphaGrid{0, 1, 5, GridSpacing::Log}.points()), std::invalid_argument);
  CHECK_THROWS_AS((AlphaGrid{10, 11, 5, GridSpacing::PhaseLocked}.points()),
                  std::invalid_argument);
}

TEST_CASE("pure power sweep is flat") {
  const auto sweep =
      sweep_curve(ProblemSpec::pure_power(0, 1), AlphaGrid{1, 10, 10, GridSpacing::Linear});
  REQUIRE(sweep.points.size() == 10);
  for (const auto& p : sweep.points) CHECK(p.lambda == doctest::Approx(pi * pi).epsilon(1e-10));
}

TEST_CASE("OscBoth at small amplitude approaches its limit from the side set by C1") {
  // C1 > 0, so lambda / (3 alpha) grows with alpha.
  const auto sweep =
      sweep_curve(ProblemSpec::osc_both(), AlphaGrid{0.01, 0.1, 20, GridSpacing::Log});
  for (std::size_t i = 1; i < sweep.points.size(); ++i) {
    const auto& a = sweep.points[i - 1];
    const auto& b = sweep.points[i];
    CHECK(b.lambda / (3 * b.alpha) > a.lambda / (3 * a.alpha));
  }
  const auto& first = sweep.points.front();
  CHECK(first.lambda / (3 * first.alpha) == doctest::Approx(0.74368176349535122890).epsilon(0.02));
}

TEST_CASE("sweeps are identical for every thread count") {
  const AlphaGrid grid{30, 60, 24, GridSpacing::Linear};
  const auto one = sweep_curve(ProblemSpec::osc_diffusion(1, 2.0), grid, {}, 1);
  const auto four = sweep_curve(ProblemSpec::osc_diffusion(1, 2.0), grid, {}, 4);
  std::ostringstream a, b;
  write_csv(a, one.points, false);
  write_csv(b, four.points, false);
  CHECK(a.str() == b.str());
}

TEST_CASE("a failing point aborts the sweep but keeps the partial curve") {
  QuadratureConfig cfg;
  cfg.max_levels = 1;
  try {
    sweep_curve(ProblemSpec::osc_both(), AlphaGrid{1, 2, 3, GridSpacing::Linear}, cfg);
    FAIL("expected SweepFailure");
  } catch (const SweepFailure& e) {
    CHECK(e.alpha() == 1.0);
    CHECK(e.partial().points.size() == 3);
    CHECK_FALSE(e.partial().points[0].converged);
  }
}

TEST_CASE("CSV round-trips every bit") {
  const auto sweep =
      sweep_curve(ProblemSpec::osc_reaction(2, 2), AlphaGrid{3, 9, 7, GridSpacing::Log});
  for (bool conv : {false, true}) {
    std::ostringstream os;
    write_csv(os, sweep.points, conv);
    const std::string text = os.str();
    CHECK(text.find('\r') == std::string::npos);
    CHECK(text.rfind(conv ? "alpha,lambda,err_estimate,nodes,converged\n"
                          : "alpha,lambda,err_estimate,nodes\n",
                     0) == 0);
    std::istringstream is(text);
    const auto back = read_csv(is);
    REQUIRE(back.size() == sweep.points.size());
    for (std::size_t i = 0; i < back.size(); ++i) {
      CHECK(back[i].alpha == sweep.points[i].alpha);
      CHECK(back[i].lambda == sweep.points[i].lambda);
      CHECK(back[i].err_estimate == sweep.points[i].err_estimate);
      CHECK(back[i].nodes_used == sweep.points[i].nodes_used);
    }
  }
  std::istringstream bad("alpha,lambda\n1,2\n");
  CHECK_THROWS_AS(read_csv(bad), SchemaMismatch);
  std::istringstream ragged("alpha,lambda,err_estimate,nodes\n1,2,3\n");
  CHECK_THROWS_AS(read_csv(ragged), SchemaMismatch);
  std::istringstream words("alpha,lambda,err_estimate,nodes\n1,x,3,4\n");
  CHECK_THROWS_AS(read_csv(words), SchemaMismatch);
}

TEST_CASE("linear profile is a sine arc") {
  for (double alpha : {0.3, 1.0, 25.0}) {
    const auto prof = solution_profile(ProblemSpec::pure_power(0, 1), alpha, pi * pi, 400);
    double worst = 0.0;
    for (const auto& smp : prof.samples) {
      worst = std::max(worst, std::abs(smp.u - alpha * std::sin(pi * smp.t)));
    }
    CHECK(worst <= 1e-8);
    CHECK(prof.samples.front().t == 0.0);
    CHECK(prof.samples.back().u == alpha);
  }
}

TEST_CASE("profiles rise monotonically and satisfy the energy identity") {
  const ProblemSpec specs[] = {ProblemSpec::osc_diffusion(1, 1.0), ProblemSpec::osc_diffusion(1, 2.0),
                               ProblemSpec::osc_reaction(2, 2), ProblemSpec::osc_both(),
                               ProblemSpec::pure_power(2, 2)};
  for (const auto& spec : specs) {
    for (double alpha : {0.2, 5.0, 30.0}) {
      CAPTURE(family_name(spec.family));
      CAPTURE(alpha);
      const auto pt = lambda_of_alpha(spec, alpha);
      const auto prof = solution_profile(spec, alpha, pt.lambda, 2000);
      REQUIRE(prof.samples.size() == 2001);
      CHECK(prof.samples.front().t == 0.0);
      CHECK(prof.samples.front().u == 0.0);
      for (std::size_t j = 1; j < prof.samples.size(); ++j) {
        CHECK(prof.samples[j].t > prof.samples[j - 1].t);
        CHECK(prof.samples[j].u > prof.samples[j - 1].u);
      }
      CHECK(std::abs(prof.samples.back().t - 0.5) <= 1e-9);
      CHECK(profile_energy_drift(spec, prof) <= 1e-6);
    }
  }
}

TEST_CASE("a wrong eigenvalue is not a solution pair") {
  const auto spec = ProblemSpec::osc_diffusion(1, 1.0);
  const auto pt = lambda_of_alpha(spec, 5.0);
  CHECK_THROWS_AS(solution_profile(spec, 5.0, 1.01 * pt.lambda, 200), InconsistentPair);
}
