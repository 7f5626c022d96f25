#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace bifmap {

// Coefficient families of [D(u)u']' + lambda*g(u) = 0.
//   OscDiffusion: D = p*u^{2n} + sin u,  g = u
//   OscReaction:  D = u^k,               g = u^{2m-k-1} + sin u
//   OscBoth:      D = u^2 + sin u,       g = u + sin u
//   PurePower:    D = u^k,               g = u^{2m-k-1}
enum class ProblemFamily { OscDiffusion, OscReaction, OscBoth, PurePower };

std::string_view family_name(ProblemFamily family);
ProblemFamily parse_family(std::string_view name);

struct ProblemSpec {
  ProblemFamily family = ProblemFamily::PurePower;
  int n = 1;
  double p = 1.0;
  int k = 0;
  int m = 1;

  static ProblemSpec osc_diffusion(int n, double p);
  static ProblemSpec osc_reaction(int k, int m);
  static ProblemSpec osc_both();
  static ProblemSpec pure_power(int k, int m);

  // Throws InvalidSpec when the parameters leave the family's domain.
  void validate() const;

  bool operator==(const ProblemSpec&) const = default;
};

// Flat "key = value" record (family, n, p, k, m). Unknown keys are rejected.
std::string to_record(const ProblemSpec& spec);
ProblemSpec parse_record(std::string_view text);

// Splits "key = value" lines; '#' starts a comment. Throws InvalidSpec on a
// line without '='.
std::vector<std::pair<std::string, std::string>> parse_key_values(std::string_view text);

double eval_D(const ProblemSpec& spec, double u);
double eval_g(const ProblemSpec& spec, double u);

// G(u) = int_0^u D(x) g(x) dx, closed form.
double eval_G(const ProblemSpec& spec, double u);

// W(u) = int_0^u D(x) dx, closed form.
double eval_W(const ProblemSpec& spec, double u);

/// G(alpha) - G(alpha*s) for s in [0,1], given one_minus_s = 1 - s exactly.
///
/// Every term of the closed form is rewritten so that it carries an explicit
/// factor (1 - s): power differences through 1 - s^N = (1-s)(1 + s + ... +
/// s^{N-1}), trigonometric differences through sum-to-product identities,
/// and small arguments through power series. The result keeps full relative
/// accuracy as s -> 1, where the naive difference of two O(alpha^{2m})
/// numbers would leave only noise.
double delta_G(const ProblemSpec& spec, double alpha, double s, double one_minus_s);

struct AdmissibilityReport {
  bool ok = false;
  double worst_u = 0.0;
  double min_D = 0.0;
  bool lambda_set_ok = false;
};

std::size_t default_admissibility_grid(double u_max);

// Scans D and g on a uniform grid over (0, u_max] and refines every discrete
// local minimum of D by golden-section search.
AdmissibilityReport validate_admissibility(const ProblemSpec& spec, double u_max,
                                           std::size_t grid_points);

// Same scan with the default grid; throws AdmissibilityViolation on failure.
AdmissibilityReport require_admissible(const ProblemSpec& spec, double u_max);

}  // namespace bifmap
