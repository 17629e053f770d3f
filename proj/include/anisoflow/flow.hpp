#pragma once

// Implicit Euler for u_t = div z: u^{n+1} = resolvent(u^n), each step a
// certified primal-dual solve.

#include <cstddef>
#include <vector>

#include "anisoflow/certificates.hpp"
#include "anisoflow/pd_solver.hpp"

namespace anisoflow {

struct FlowOptions {
  SolveOptions solve;
  std::size_t stride = 1;  // keep every stride-th state (the last one is always kept)
};

struct FlowStep {
  int index = 0;  // 1-based
  double time = 0.0;
  double energy_before = 0.0;  // F(u^n)
  double energy_after = 0.0;   // F(u^{n+1})
  double movement = 0.0;       // ||u^{n+1} - u^n||^2 / (2 tau)
  double gap = 0.0;
  double scale = 1.0;
  // energy_after + movement - energy_before - gap; <= 0 when the step
  // dissipates energy as implicit Euler must.
  double dissipation_excess = 0.0;
  SolveReport report;
  Certificate certificate;
};

struct Trajectory {
  double tau_time = 0.0;
  std::vector<double> times;
  std::vector<ScalarField> states;
  std::vector<double> energies;  // F at each stored state
  std::vector<FlowStep> steps;   // every step, regardless of stride
  ScalarField final_state;
  // v = (u^{n-1} - u^n)/tau = -div z^n of the last step, with its z and trace;
  // (final_state, last_v) lies in the graph of the operator up to the gap.
  ScalarField last_v;
  BlockVectorField last_z;
  BoundaryField last_trace;
};

// Non-convergence of any step is rethrown as NonConvergence with the step
// index in the message.
Trajectory evolve(const ScalarField& u0, const GridSpec& spec, double tau_time, int n_steps,
                  const FlowOptions& opts = {});

// ||(x)^+||_r with the volume weight; r = infinity gives the max.
double positive_part_norm(std::span<const double> x, double r, const GridSpec& spec);

struct ComparisonResult {
  double max_violation = 0.0;  // max_n (||(u1^n - u2^n)^+||_r - ||(u1^0 - u2^0)^+||_r)^+
  double initial = 0.0;
  std::vector<double> norms;   // per stored time
  double gap_slack = 0.0;      // sum of step gaps of both runs
};

// Compares two trajectories with the same stored times.
ComparisonResult comparison_from(const Trajectory& t1, const Trajectory& t2, const GridSpec& spec,
                                 double r);

ComparisonResult comparison_test(const ScalarField& u10, const ScalarField& u20,
                                 const GridSpec& spec, double tau_time, int n_steps, double r,
                                 const FlowOptions& opts = {});

// T(s) = clamp(s, a, b) - a for 0 < a < b, clamp(s, a, b) - b for a < b < 0,
// so T vanishes on a neighbourhood of 0.
double truncation(double s, double a, double b);

// sum |cell| T(u1 - u2)(v1 - v2). Throws InvalidInput unless 0 < a < b or a < b < 0.
double accretivity_probe(const ScalarField& u1, const ScalarField& v1, const ScalarField& u2,
                         const ScalarField& v2, const GridSpec& spec, double a, double b);

}  // namespace anisoflow
