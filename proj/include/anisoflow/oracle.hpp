#pragma once

// Slow reference minimiser for small grids: the nonsmooth norms are replaced
// by sqrt(s^2 + eps^2) - eps and the smoothed problem is solved by damped
// Newton for a decreasing sequence of eps, each stage warm-started from the
// previous one. Independent of the primal-dual machinery.

#include <cstddef>
#include <vector>

#include "anisoflow/grid.hpp"
#include "anisoflow/pd_solver.hpp"

namespace anisoflow {

struct OracleOptions {
  std::vector<double> eps_schedule{1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8};
  double grad_tol = 1e-11;  // stage stops when the Newton decrement^2 / 2 <= grad_tol * (1 + |value|)
  int max_inner = 500;
  std::size_t max_cells = 256;

  void validate() const;
};

struct OracleProblem {
  ProblemKind kind = ProblemKind::elliptic;
  ScalarField data;       // f or g
  double tau_time = 1.0;  // resolvent only
};

// Smoothed objective (energy plus the f or g term) and its gradient.
double smoothed_energy(const ScalarField& u, const GridSpec& spec, double eps,
                       const OracleProblem& problem);
std::vector<double> smoothed_gradient(const ScalarField& u, const GridSpec& spec, double eps,
                                      const OracleProblem& problem);

// Exact (unsmoothed) objective: J for elliptic, F + ||u - g||^2/(2 tau) for resolvent.
double exact_objective(const ScalarField& u, const GridSpec& spec, const OracleProblem& problem);

struct OracleStage {
  double eps = 0.0;
  int iterations = 0;
  double smoothed_value = 0.0;
  double decrement = 0.0;
};

struct OracleResult {
  ScalarField u_ref;
  double value_ref = 0.0;  // exact objective at u_ref
  std::vector<OracleStage> stages;
};

// Throws InvalidInput above max_cells and NumericalFailure (naming the stage)
// when a stage does not reach grad_tol.
OracleResult oracle_minimize(const OracleProblem& problem, const GridSpec& spec,
                             const OracleOptions& opts = {});

}  // namespace anisoflow
