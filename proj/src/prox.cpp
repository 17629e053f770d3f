#include "anisoflow/prox.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "anisoflow/error.hpp"

namespace anisoflow {

void ProxParams::validate() const {
  std::vector<std::string> problems;
  if (!(sigma > 0.0)) problems.emplace_back("sigma must be > 0");
  if (!(tau > 0.0)) problems.emplace_back("tau must be > 0");
  if (!(newton_tol > 0.0)) problems.emplace_back("newton_tol must be > 0");
  if (newton_max_iter < 1) problems.emplace_back("newton_max_iter must be >= 1");
  if (!problems.empty()) throw InvalidInput(std::move(problems));
}

void project_ball(std::span<double> v, double radius) {
  double sq = 0.0;
  for (double x : v) sq += x * x;
  if (sq <= radius * radius) return;
  const double scale = radius / std::sqrt(sq);
  for (double& x : v) x *= scale;
}

void project_box(std::span<double> v, double radius) {
  for (double& x : v) x = x < -radius ? -radius : (x > radius ? radius : x);
}

double prox_power_conj(double v, double sigma, double p_conj, const ProxParams& params) {
  const double target = std::abs(v);
  if (target == 0.0) return 0.0;
  const double sign = v < 0.0 ? -1.0 : 1.0;
  if (p_conj == 2.0) return v / (1.0 + sigma);

  const double q = p_conj - 1.0;
  const double tol = params.newton_tol * (1.0 + target);

  if (q < 1.0) {
    // For q < 1 the root x ~ (|v|/sigma)^(1/q) can be far below any bisection
    // reach of |v|. Solve for s = x^q instead: psi(s) = s^(1/q) + sigma s - |v|
    // is convex and increasing, so Newton from the right end stays bracketed.
    const double e = 1.0 / q;
    double s_lo = 0.0;
    // psi > 0 at both |v|/sigma and |v|^q; the smaller one starts Newton closest.
    double s_hi = std::min(target / sigma, std::pow(target, q));
    double s = s_hi;
    double r = std::pow(s, e) + sigma * s - target;
    for (int it = 0; it < params.newton_max_iter; ++it) {
      if (std::abs(r) <= tol) return sign * std::pow(s, e);
      if (r > 0.0) {
        s_hi = s;
      } else {
        s_lo = s;
      }
      double next = s - r / (e * std::pow(s, e - 1.0) + sigma);
      if (!(next > s_lo && next < s_hi) || !std::isfinite(next)) next = 0.5 * (s_lo + s_hi);
      if (next == s) break;
      s = next;
      r = std::pow(s, e) + sigma * s - target;
    }
    if (std::abs(r) <= tol) return sign * std::pow(s, e);
    throw NumericalFailure("prox_power_conj: Newton did not converge (|v| = " +
                               std::to_string(target) + ", p' = " + std::to_string(p_conj) + ")",
                           std::abs(r));
  }

  auto residual = [&](double x) { return x + sigma * std::pow(x, q) - target; };

  // phi(x) = x + sigma x^q is strictly increasing on [0, |v|], phi(0) < |v| <= phi(|v|).
  double lo = 0.0;
  double hi = target;
  double x = target / (1.0 + sigma);
  double r = residual(x);
  for (int it = 0; it < params.newton_max_iter; ++it) {
    if (std::abs(r) <= tol) return sign * x;
    if (r > 0.0) {
      hi = x;
    } else {
      lo = x;
    }
    const double slope = 1.0 + sigma * q * std::pow(x, q - 1.0);
    double next = x - r / slope;
    if (!(next > lo && next < hi) || !std::isfinite(next)) next = 0.5 * (lo + hi);
    x = next;
    r = residual(x);
  }
  if (std::abs(r) <= tol) return sign * x;
  throw NumericalFailure("prox_power_conj: Newton did not converge (|v| = " +
                             std::to_string(target) + ", p' = " + std::to_string(p_conj) + ")",
                         std::abs(r));
}

void prox_power_conj_vector(std::span<double> v, double sigma, double p_conj,
                            const ProxParams& params) {
  if (v.size() == 1) {
    v[0] = prox_power_conj(v[0], sigma, p_conj, params);
    return;
  }
  double sq = 0.0;
  for (double x : v) sq += x * x;
  if (sq == 0.0) return;
  const double mag = std::sqrt(sq);
  const double scale = prox_power_conj(mag, sigma, p_conj, params) / mag;
  for (double& x : v) x *= scale;
}

ScalarField prox_primal_quadratic(const ScalarField& u, double tau, const ScalarField& g,
                                  double tau_time) {
  if (!(tau > 0.0) || !(tau_time > 0.0)) {
    throw InvalidInput("prox_primal_quadratic: steps must be > 0");
  }
  if (u.dims() != g.dims()) throw InvalidInput("prox_primal_quadratic: shape mismatch");
  ScalarField out = u;
  const double denom = tau_time + tau;
  for (std::size_t c = 0; c < out.size(); ++c) out[c] = (tau_time * u[c] + tau * g[c]) / denom;
  return out;
}

ScalarField prox_primal_linear(const ScalarField& u, double tau, const ScalarField& f) {
  if (!(tau > 0.0)) throw InvalidInput("prox_primal_linear: tau must be > 0");
  if (u.dims() != f.dims()) throw InvalidInput("prox_primal_linear: shape mismatch");
  ScalarField out = u;
  for (std::size_t c = 0; c < out.size(); ++c) out[c] += tau * f[c];
  return out;
}

}  // namespace anisoflow
