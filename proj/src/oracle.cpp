#include "bifmap/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "bifmap/errors.hpp"

namespace bifmap {

namespace {

// Upper bound for W^{-1}(w) from the leading power of W.
double leading_inverse(const ProblemSpec& spec, double w) {
  switch (spec.family) {
    case ProblemFamily::OscDiffusion: {
      const double e = 2.0 * spec.n + 1.0;
      return std::pow(e * w / spec.p, 1.0 / e);
    }
    case ProblemFamily::OscBoth: return std::cbrt(3.0 * w);
    case ProblemFamily::OscReaction:
    case ProblemFamily::PurePower: return std::pow((spec.k + 1.0) * w, 1.0 / (spec.k + 1.0));
  }
  return w;
}

bool linear_at_origin(const ProblemSpec& spec) {
  return spec.family == ProblemFamily::OscDiffusion || spec.family == ProblemFamily::OscBoth;
}

struct State {
  double w, v;
};

class Shooter {
 public:
  Shooter(const ProblemSpec& spec, double alpha, double lambda)
      : spec_(spec), alpha_(alpha), lambda_(lambda), G_alpha_(eval_G(spec, alpha)) {}

  // -lambda g(W^{-1}(w)), continued oddly below w = 0.
  double accel(double w) const {
    const double u = invert_W(spec_, std::abs(w));
    const double g = eval_g(spec_, u);
    return -lambda_ * (w < 0.0 ? -g : g);
  }

  State step(State y, double dt) const {
    const double k1w = y.v, k1v = accel(y.w);
    const double k2w = y.v + 0.5 * dt * k1v, k2v = accel(y.w + 0.5 * dt * k1w);
    const double k3w = y.v + 0.5 * dt * k2v, k3v = accel(y.w + 0.5 * dt * k2w);
    const double k4w = y.v + dt * k3v, k4v = accel(y.w + dt * k3w);
    State out{y.w + dt / 6.0 * (k1w + 2 * k2w + 2 * k3w + k4w),
              y.v + dt / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v)};
    if (!std::isfinite(out.w) || !std::isfinite(out.v)) {
      std::ostringstream os;
      os.precision(17);
      os << "shooting state blew up (alpha = " << alpha_ << ", lambda = " << lambda_ << ")";
      throw NonFinite(os.str());
    }
    return out;
  }

  double u_of(double w) const {
    const double u = invert_W(spec_, std::abs(w));
    return w < 0.0 ? -u : u;
  }

  double drift(const State& y) const {
    const double u = std::min(std::abs(u_of(y.w)), alpha_);
    const double s = u / alpha_;
    const double energy = 2.0 * lambda_ * delta_G(spec_, alpha_, s, 1.0 - s);
    return std::abs(y.v * y.v - energy) / (2.0 * lambda_ * G_alpha_);
  }

  State start() const { return {eval_W(spec_, alpha_), 0.0}; }

 private:
  const ProblemSpec& spec_;
  double alpha_, lambda_, G_alpha_;
};

}  // namespace

double invert_W(const ProblemSpec& spec, double w) {
  if (!(w >= 0.0)) throw std::invalid_argument("invert_W needs w >= 0");
  if (w == 0.0) return 0.0;
  if (spec.family == ProblemFamily::PurePower || spec.family == ProblemFamily::OscReaction) {
    return leading_inverse(spec, w);  // W is exactly the leading power
  }
  double lo = 0.0;
  double hi = leading_inverse(spec, w);
  // The leading power bounds W from below only where the sin part is
  // nonnegative; widen until the bracket really holds.
  while (eval_W(spec, hi) < w) hi *= 2.0;
  double u = hi;
  if (linear_at_origin(spec)) u = std::min(u, std::sqrt(2.0 * w));
  const double tol = 1e-13 * (1.0 + w);
  for (int it = 0; it < 200; ++it) {
    const double f = eval_W(spec, u) - w;
    if (std::abs(f) <= tol) return u;
    if (f > 0.0) {
      hi = u;
    } else {
      lo = u;
    }
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * hi) return u;
    const double d = eval_D(spec, u);
    double next = d > 0.0 ? u - f / d : lo - 1.0;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    u = next;
  }
  std::ostringstream os;
  os.precision(17);
  os << "invert_W did not converge for w = " << w;
  throw NoConvergence(os.str());
}

ShootResult shoot_halfinterval(const ProblemSpec& spec, double alpha, double lambda,
                               std::size_t step_count) {
  spec.validate();
  if (!(alpha > 0.0) || !(lambda > 0.0)) {
    throw std::invalid_argument("shoot_halfinterval needs alpha > 0 and lambda > 0");
  }
  if (step_count < 100) throw std::invalid_argument("step_count must be >= 100");
  const Shooter sh(spec, alpha, lambda);
  const double dt = -0.5 / static_cast<double>(step_count);
  State y = sh.start();
  const double W_alpha = y.w;
  ShootResult res;
  res.steps = step_count;
  for (std::size_t i = 0; i < step_count; ++i) {
    y = sh.step(y, dt);
    res.energy_drift = std::max(res.energy_drift, sh.drift(y));
  }
  res.boundary_residual = y.w / W_alpha;
  return res;
}

VerifyReport verify_pair_report(const ProblemSpec& spec, double alpha, double lambda,
                                double tol) {
  if (!(tol > 0.0)) throw std::invalid_argument("verify_pair needs tol > 0");
  constexpr std::size_t kMaxSteps = std::size_t{1} << 22;
  ShootResult coarse = shoot_halfinterval(spec, alpha, lambda, 1000);
  VerifyReport rep;
  for (std::size_t n = 2000;; n *= 2) {
    const ShootResult fine = shoot_halfinterval(spec, alpha, lambda, n);
    rep.shot = fine;
    rep.integrator_error = std::abs(fine.boundary_residual - coarse.boundary_residual);
    // Drift shrinks slower than the residual where g(W^{-1}(w)) has a
    // fractional power at w = 0, so it gets its own say in stopping.
    const bool settled = rep.integrator_error <= tol / 10.0 && fine.energy_drift <= 10.0 * tol;
    if (settled || n >= kMaxSteps) break;
    coarse = fine;
  }
  rep.ok = rep.integrator_error <= tol / 10.0 && std::abs(rep.shot.boundary_residual) <= tol &&
           rep.shot.energy_drift <= 10.0 * tol;
  return rep;
}

bool verify_pair(const ProblemSpec& spec, double alpha, double lambda, double tol) {
  return verify_pair_report(spec, alpha, lambda, tol).ok;
}

double replay_profile(const ProblemSpec& spec, const SolutionProfile& profile, double max_step) {
  spec.validate();
  if (!(max_step > 0.0)) throw std::invalid_argument("replay_profile needs max_step > 0");
  if (profile.samples.empty()) return 0.0;
  const Shooter sh(spec, profile.alpha, profile.lambda);
  State y = sh.start();
  double t = 0.5;
  double worst = 0.0;
  for (auto it = profile.samples.rbegin(); it != profile.samples.rend(); ++it) {
    const double span = it->t - t;
    const auto pieces = static_cast<std::size_t>(std::ceil(std::abs(span) / max_step));
    for (std::size_t i = 0; i < pieces; ++i) y = sh.step(y, span / static_cast<double>(pieces));
    t = it->t;
    worst = std::max(worst, std::abs(sh.u_of(y.w) - it->u) / profile.alpha);
  }
  return worst;
}

}  // namespace bifmap
