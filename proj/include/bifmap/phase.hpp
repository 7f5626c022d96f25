#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "bifmap/quadrature.hpp"

namespace bifmap {

enum class TrigKind { Cos, Sin };

// sqrt(2/(mu pi)) f0 cos(mu - pi/4), or with sin.
double lemma21_leading(double f0, double mu, TrigKind kind);

/// int_0^1 f(r) trig(mu cos(pi r / 2)) dr, cut where the phase crosses a
/// multiple of pi. The stationary point r = 0 stays inside the first panel.
double lemma21_exact(const std::function<double(double)>& f, double mu, TrigKind kind,
                     const QuadratureConfig& cfg = {});

// 1 / sqrt(1 + cos^2(pi r/2) + ... + cos^{2n}(pi r/2)); the amplitude that
// int_0^1 sin(mu s) / sqrt(1 - s^{2n+2}) ds takes after s = cos(pi r / 2).
std::function<double(double)> sine_transform_profile(int n);

struct RateScan {
  std::vector<double> mu_values;
  std::vector<double> errors;  // |exact - leading|
  double fitted_exponent = 0.0;
};

// Needs >= 5 strictly increasing frequencies spanning a factor of 64;
// throws InsufficientRange otherwise.
RateScan lemma21_rate_scan(const std::function<double(double)>& f,
                           const std::vector<double>& mu_list, TrigKind kind,
                           const QuadratureConfig& cfg = {});

void write_csv(std::ostream& os, const RateScan& scan);  // mu,error
std::string to_json(const RateScan& scan);

/// Pieces of the time map of the oscillating-diffusion family,
///   sqrt(lambda/2) ~ sqrt((2n+2)/p) alpha^{-n} (J1 + J2 + J3 + J4 + J5),
/// from expanding 1/sqrt(G(alpha) - G(alpha s)) to first order in the trig
/// part of the potential:
///   J1 = p A_{2n,n+1} alpha^{2n}
///   J2 = int sin(alpha s) / sqrt(1 - s^{2n+2})
///   J3 = (n+1)/alpha   int s^{2n} (cos alpha - s cos(alpha s)) / (1 - s^{2n+2})^{3/2}
///   J4 = -(n+1)/alpha^2 int s^{2n} (sin alpha - sin(alpha s)) / (1 - s^{2n+2})^{3/2}
///   J5 = (n+1)/(p alpha^{2n+2}) int sin(alpha s) (M1 - M2) / (1 - s^{2n+2})^{3/2}
/// with M1 = alpha cos alpha - alpha s cos(alpha s), M2 = sin alpha - sin(alpha s).
/// L4 is the matching term for the oscillating-reaction family with k = m = 2:
///   L4 = 4/alpha int s^2 (cos alpha - s^2 cos(alpha s)) / (1 - s^4)^{3/2}.
/// All integrals run in phi = pi/2 - arcsin s, where the (1-s)^{-3/2}
/// weights cancel against their numerators analytically.
struct ProofDiagnostics {
  double J1 = 0.0, J2 = 0.0, J3 = 0.0, J4 = 0.0, J5 = 0.0, L4 = 0.0;

  double sum() const { return J1 + J2 + J3 + J4 + J5; }
};

ProofDiagnostics proof_diagnostics(int n, double p, double alpha, const QuadratureConfig& cfg = {});

// sqrt((2n+2)/p) alpha^{-n} (J1 + ... + J5)
double reassembled_time_map(int n, double p, double alpha, const ProofDiagnostics& d);

}  // namespace bifmap
