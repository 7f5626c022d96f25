#pragma once

#include <cstddef>

#include "bifmap/model.hpp"
#include "bifmap/timemap.hpp"

namespace bifmap {

struct ShootResult {
  double boundary_residual = 0.0;  // w(0) / W(alpha)
  double energy_drift = 0.0;       // max |v^2 - 2 lambda (G(alpha) - G(u))| / (2 lambda G(alpha))
  std::size_t steps = 0;
};

/// u with W(u) = w, for w >= 0.
///
/// Safeguarded Newton on a bracket [0, u_hi] where u_hi inverts the leading
/// power of W (a lower bound of W on the families handled here); near w = 0
/// the seed is sqrt(2w) when D(u) ~ u. Stops when |W(u) - w| <= 1e-13 (1 + w)
/// or the bracket collapses to rounding level. Throws NoConvergence after
/// 200 iterations.
double invert_W(const ProblemSpec& spec, double w);

/// Integrates w'' = -lambda g(W^{-1}(w)) from t = 1/2 (w = W(alpha), w' = 0)
/// back to t = 0 with step_count classical RK4 steps. When the trajectory
/// overshoots into w < 0 the right-hand side continues oddly, so the
/// residual stays monotone in lambda. Throws NonFinite if the state blows up.
ShootResult shoot_halfinterval(const ProblemSpec& spec, double alpha, double lambda,
                               std::size_t step_count);

struct VerifyReport {
  bool ok = false;
  ShootResult shot;
  double integrator_error = 0.0;  // |r_N - r_2N| at the accepted N
};

// Doubles the step count from 1000 until |r_N - r_2N| <= tol/10 and the
// energy drift is <= 10 tol (at most 2^22 steps); passes iff both hold and
// |r_2N| <= tol.
VerifyReport verify_pair_report(const ProblemSpec& spec, double alpha, double lambda, double tol);
bool verify_pair(const ProblemSpec& spec, double alpha, double lambda, double tol);

// Re-integrates the ODE through every sample time of a profile and returns
// max_j |u_shoot(t_j) - u_j| / alpha, using steps no longer than max_step.
double replay_profile(const ProblemSpec& spec, const SolutionProfile& profile, double max_step);

}  // namespace bifmap
