#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace bifmap {

struct QuadratureConfig {
  double rel_tol = 1e-10;
  double abs_tol = 1e-12;
  int max_levels = 12;           // tanh-sinh refinement depth
  std::size_t max_panels = 1000000;
  int osc_panel_fraction = 4;    // initial panels per oscillation half-period

  // Throws std::invalid_argument for nonpositive tolerances or max_levels > 15.
  void validate() const;
};

struct QuadratureResult {
  double value = 0.0;
  double err_estimate = 0.0;
  std::size_t nodes_used = 0;
  bool converged = false;
};

using Integrand = std::function<double(double)>;

// Integrand on a subinterval of (0,1) that also receives 1 - s, computed
// without cancellation. Integrands with a (1-s)^{-beta} factor must build it
// from the second argument.
using SingularIntegrand = std::function<double(double s, double one_minus_s)>;

// Neumaier compensated sum.
class CompensatedSum {
 public:
  void add(double x);
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

/// Tanh-sinh (double exponential) rule on (0,1).
///
/// Nodes are never placed at the endpoints; near s = 1 the exact distance is
/// handed to the integrand, so algebraic endpoint singularities of any
/// exponent > -1 converge geometrically in the level. The error estimate is
/// the difference of the last two levels. Hitting max_levels yields
/// converged = false. Throws NonFinite if f returns inf or nan.
QuadratureResult integrate_endpoint_singular(const SingularIntegrand& f,
                                             const QuadratureConfig& cfg);

// Same rule on [a, b] subset of [0, 1]; f still receives (s, 1 - s).
QuadratureResult integrate_endpoint_singular(const SingularIntegrand& f, double a, double b,
                                             const QuadratureConfig& cfg);

/// Globally adaptive bisection with an embedded Gauss 7 / Kronrod 15 pair.
/// Throws PanelBudgetExceeded when cfg.max_panels is reached first.
QuadratureResult integrate_adaptive(const Integrand& f, double a, double b,
                                    const QuadratureConfig& cfg);

// Non-throwing variant: reports converged = false instead. initial_panels
// splits [a, b] uniformly before adaptation starts.
QuadratureResult integrate_adaptive_nothrow(const Integrand& f, double a, double b,
                                            const QuadratureConfig& cfg,
                                            std::size_t initial_panels = 1);

/// Integral over (0,1) of an integrand oscillating like sin(frequency * s)
/// and carrying an endpoint singularity at s = 1.
///
/// [0, 1 - delta] is cut at the zeros j*pi/frequency and each half-period is
/// integrated adaptively; the tail (1 - delta, 1), delta =
/// min(pi/frequency, 1e-2), goes to the tanh-sinh rule. Panel values are
/// summed with compensation. For frequency*1 < pi there is nothing to split
/// and the whole interval is handed to integrate_endpoint_singular.
QuadratureResult integrate_oscillatory_singular(const SingularIntegrand& f, double frequency,
                                                const QuadratureConfig& cfg);

// Adaptive integration over consecutive panels [cuts[i], cuts[i+1]].
QuadratureResult integrate_panels(const Integrand& f, const std::vector<double>& cuts,
                                  const QuadratureConfig& cfg);

}  // namespace bifmap
