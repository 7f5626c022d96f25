#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "bifmap/model.hpp"
#include "bifmap/timemap.hpp"

namespace bifmap {

// lambda ~ leading_coeff * alpha^leading_exp
//        + second_coeff * alpha^second_exp * sin(alpha + phase_shift)
//        + O(alpha^remainder_exp)
struct AsymptoticModel {
  double leading_coeff = 0.0;
  double leading_exp = 0.0;
  double second_coeff = 0.0;
  double second_exp = 0.0;
  double phase_shift = 0.0;
  double remainder_exp = 0.0;

  double leading(double alpha) const;
  double with_second(double alpha) const;
};

struct LargeAlphaPrediction {
  double lambda_leading;
  double lambda_with_second;
  AsymptoticModel model;
};

// Large-amplitude regimes; parse_regime accepts the CLI tokens "1.1" (power
// diffusion, oscillating reaction), "1.2i" (oscillating diffusion) and "1.3i"
// (both oscillating).
enum class Regime { ReactionOscillation, DiffusionOscillation, BothOscillation };
Regime parse_regime(std::string_view token);
std::string_view regime_token(Regime regime);

/// A_{k,m} = int_0^1 s^k / sqrt(1 - s^{2m}) ds = B((k+1)/(2m), 1/2) / (2m).
double coeff_A(int k, int m);

// C0 = int_0^1 s / sqrt(1-s^3) ds and
// C1 = int_0^1 (s^2 - 3s(1-s^4) / (8(1-s^3))) / sqrt(1-s^3) ds.
std::pair<double, double> coeff_C0C1();

// Throws UnsupportedFamily for PurePower (its exact law is pure_power_law).
LargeAlphaPrediction predict_large_alpha(const ProblemSpec& spec, double alpha);

// lambda = 4m A_{k,m}^2 alpha^{2k+2-2m}, exact for PurePower(k, m).
double pure_power_law(int k, int m, double alpha);

/// Two-term expansion as alpha -> 0:
///   OscDiffusion(n = 1): 6 alpha (C0^2 + 2 p C0 C1 alpha)
///   OscBoth:             3 alpha (C0^2 + 2 C0 C1 alpha)
/// Requires 0 < alpha <= 0.5; anything else is UnsupportedFamily.
double predict_small_alpha(const ProblemSpec& spec, double alpha);

// The model a regime prescribes for a spec. ReactionOscillation accepts
// OscReaction and PurePower (whose second term then vanishes),
// DiffusionOscillation accepts OscDiffusion, BothOscillation accepts OscBoth.
AsymptoticModel regime_model(Regime regime, const ProblemSpec& spec);

struct EnvelopeFit {
  double amplitude = 0.0;     // second_coeff-comparable envelope constant
  double decay_exp = 0.0;     // slope of log|R| at the extrema against log alpha
  double phase_offset = 0.0;  // mean shift of the extrema from the model's, radians
  int sign_changes = 0;
  double rms_misfit = 0.0;    // rms of the log-log fit residuals
  int extrema = 0;
  bool below_detection = false;  // residual indistinguishable from quadrature noise
};

/// Envelope of R(alpha) = lambda(alpha) - leading term.
///
/// Each window alpha in 3pi/4 + j pi +- pi/4 contributes its largest |R|,
/// refined by a parabola through the three nearest samples. A least-squares
/// line through (log alpha_j, log |R_j|) gives decay_exp; amplitude is the
/// envelope at the geometric mean of the alpha_j divided by
/// alpha^second_exp (or alpha^decay_exp when the model has no second term).
/// Residuals below max(10 err_estimate, 64 eps lambda) count as zero. Throws
/// InsufficientCoverage with fewer than 10 usable windows.
EnvelopeFit analyze_residual(const std::vector<CurvePoint>& points, const AsymptoticModel& model);

std::string to_json(const EnvelopeFit& fit);

struct FitCheck {
  std::string name;
  double measured;
  std::string target;
  bool pass;
};

// Tolerances shared by the CLI and the acceptance suite: with a second term,
// exponent within 0.05, amplitude within 10%, phase within 0.1 rad and a sign
// change at all but two extrema; without one, exponent <= remainder_exp + 0.2
// or a residual below detection.
std::vector<FitCheck> check_fit(const EnvelopeFit& fit, const AsymptoticModel& model);

}  // namespace bifmap
