#pragma once

#include <span>

#include "anisoflow/grid.hpp"

namespace anisoflow {

struct ProxParams {
  double sigma = 1.0;  // dual step
  double tau = 1.0;    // primal step
  double newton_tol = 1e-12;
  int newton_max_iter = 50;

  void validate() const;
};

// Euclidean projection onto the ball of the given radius, in place.
void project_ball(std::span<double> v, double radius = 1.0);

// Componentwise clamp to [-radius, radius]; the dual ball of the l1 norm.
void project_box(std::span<double> v, double radius = 1.0);

inline double project_interval(double v0) { return v0 < -1.0 ? -1.0 : (v0 > 1.0 ? 1.0 : v0); }

// Unique x >= 0 with x + sigma * x^(p_conj - 1) = |v|, returned with the sign of
// v. This is the prox of sigma * |.|^p' / p' on the real line; the vector prox
// is the same map applied to the magnitude. Throws NumericalFailure when the
// root finder does not reach newton_tol * (1 + |v|).
double prox_power_conj(double v, double sigma, double p_conj, const ProxParams& params = {});

// Radial version for a vector of components, in place.
void prox_power_conj_vector(std::span<double> v, double sigma, double p_conj,
                            const ProxParams& params = {});

// Prox of (1/(2 tau_time)) ||. - g||^2 with step tau: (tau_time u + tau g)/(tau_time + tau).
ScalarField prox_primal_quadratic(const ScalarField& u, double tau, const ScalarField& g,
                                  double tau_time);

// Prox of -<f, .> with step tau: u + tau f.
ScalarField prox_primal_linear(const ScalarField& u, double tau, const ScalarField& f);

}  // namespace anisoflow
