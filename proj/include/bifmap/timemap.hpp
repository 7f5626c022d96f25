#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "bifmap/errors.hpp"
#include "bifmap/model.hpp"
#include "bifmap/quadrature.hpp"

namespace bifmap {

struct CurvePoint {
  double alpha = 0.0;   // sup-norm of the solution
  double lambda = 0.0;  // eigenvalue
  double err_estimate = 0.0;
  std::size_t nodes_used = 0;
  bool converged = true;
};

enum class GridSpacing { Linear, Log, PhaseLocked };

std::string_view spacing_name(GridSpacing spacing);
GridSpacing parse_spacing(std::string_view name);

// Linear and log grids take `count` points on [start, stop]. The phase-locked
// grid ignores `count` and takes every alpha = 3pi/4 + i*pi/per_half_period
// inside [start, stop]; with per_half_period = 1 these are exactly the
// extrema of sin(alpha - pi/4).
struct AlphaGrid {
  double start = 1.0;
  double stop = 10.0;
  std::size_t count = 10;
  GridSpacing spacing = GridSpacing::Linear;
  int per_half_period = 1;

  std::vector<double> points() const;  // throws std::invalid_argument
};

struct SweepResult {
  ProblemSpec spec;
  AlphaGrid grid;
  std::vector<CurvePoint> points;  // strictly increasing alpha
};

class SweepFailure : public Error {
 public:
  SweepFailure(const std::string& what, double alpha, SweepResult partial)
      : Error(what), alpha_(alpha), partial_(std::move(partial)) {}
  double alpha() const { return alpha_; }
  const SweepResult& partial() const { return partial_; }

 private:
  double alpha_;
  SweepResult partial_;
};

struct ProfileSample {
  double t;
  double u;
};

// Samples j = 0..N sit at u_j = alpha*sin(theta_j), theta_j = j*pi/(2N).
struct SolutionProfile {
  double alpha = 0.0;
  double lambda = 0.0;
  double err_estimate = 0.0;
  std::vector<ProfileSample> samples;
};

/// lambda(alpha) from the time map
///   sqrt(lambda/2) = T(alpha) = int_0^1 alpha D(alpha s) / sqrt(G(alpha) - G(alpha s)) ds.
/// Throws AdmissibilityViolation or QuadratureFailure.
CurvePoint lambda_of_alpha(const ProblemSpec& spec, double alpha,
                           const QuadratureConfig& cfg = {});

// Admissibility is checked once on (0, max alpha]. Points are evaluated on
// `threads` workers (0 = hardware concurrency) and assembled in grid order.
// Throws SweepFailure carrying every computed point if one does not converge.
SweepResult sweep_curve(const ProblemSpec& spec, const AlphaGrid& grid,
                        const QuadratureConfig& cfg = {}, unsigned threads = 1);

/// Solution profile on [0, 1/2] from
///   t(u) = (1/sqrt(2 lambda)) int_0^u D(x) / sqrt(G(alpha) - G(x)) dx.
/// Throws InconsistentPair when t(alpha) misses 1/2 by more than ten times
/// the quadrature error estimate (floored at 1e-12).
SolutionProfile solution_profile(const ProblemSpec& spec, double alpha, double lambda,
                                 std::size_t sample_count, const QuadratureConfig& cfg = {});

// Largest |(D(u) u')^2 - 2 lambda (G(alpha) - G(u))| / (2 lambda G(alpha)) over
// interior samples, with u' from centered differences in theta.
double profile_energy_drift(const ProblemSpec& spec, const SolutionProfile& profile);

// CSV: alpha,lambda,err_estimate,nodes[,converged]; %.16e numbers, LF endings.
void write_csv(std::ostream& os, const std::vector<CurvePoint>& points, bool with_converged);
std::vector<CurvePoint> read_csv(std::istream& is);  // throws SchemaMismatch

}  // namespace bifmap
