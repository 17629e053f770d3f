#pragma once

// First-order primal-dual solver for
//
//   min_u  E(A u) + G(u),   A u = (u on dOmega_1 x Omega_2, grad_1 u, ..., grad_k u),
//
// where E is the boundary L1 term, the block-0 total variation and the power
// terms, and G is either the resolvent penalty (1/(2 tau_time)) ||u - g||^2 or
// the elliptic source term -<f, u>. Every solve returns a duality-gap
// certificate: convergence is declared only when the certified gap
// primal - dual falls below gap_tol * (1 + |primal|).

#include <cstdint>
#include <string>
#include <vector>

#include "anisoflow/error.hpp"
#include "anisoflow/grid.hpp"

namespace anisoflow {

enum class ProblemKind { elliptic, resolvent };

std::string to_string(ProblemKind kind);

struct SolveOptions {
  int max_iter = 50000;
  double gap_tol = 1e-8;
  int residual_check_every = 50;
  double theta_relax = 1.0;
  int opnorm_iters = 1000;
  // tau = step_ratio / L and sigma = 1 / (step_ratio L), so sigma tau L^2 = 1.
  double step_ratio = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct GapCheck {
  int iteration = 0;
  double gap = 0.0;
  double primal = 0.0;
  double dual = 0.0;
};

struct SolveReport {
  ProblemKind kind = ProblemKind::elliptic;
  int iterations = 0;
  bool converged = false;
  double final_gap = 0.0;
  double primal_value = 0.0;
  double dual_value = 0.0;
  double scale = 1.0;  // 1 + |primal_value|
  // Fenchel-Young excess of E and of G at the returned pair; they sum to the gap.
  double bracket_e = 0.0;
  double bracket_g = 0.0;
  // Largest amount by which either bracket left [0, gap] at any check.
  double subdiff_violation = 0.0;
  // ||A^* y - f|| (elliptic) or ||A^* y - (g - u)/tau_time|| (resolvent).
  double divergence_residual = 0.0;
  double coercivity_radius = 0.0;  // elliptic only
  double opnorm = 0.0;
  double sigma = 0.0;
  double tau = 0.0;
  double theta_relax = 1.0;
  double tau_time = 0.0;  // resolvent only
  std::uint64_t seed = 0;
  std::string primal_source = "iterate";  // or "dual_recovery"
  std::vector<GapCheck> history;
  double wall_time_seconds = 0.0;
};

// Dual variable in the sign convention of the Fenchel-Rockafellar dual:
// v0 = [z_1, nu] on dOmega_1 x Omega_2 and v_blocks = -z.
struct DualState {
  BoundaryField v0;
  BlockVectorField v_blocks;
  double sigma = 0.0;
  double tau = 0.0;
  double theta_relax = 1.0;
};

struct SolveResult {
  ScalarField u;
  BlockVectorField z;     // z = -(v_1*, ..., v_k*)
  BoundaryField trace;    // [z_1, nu]; zero under neumann_block1
  DualState dual;
  SolveReport report;
};

class NonConvergence : public Error {
 public:
  NonConvergence(const std::string& message, SolveReport report)
      : Error("non_convergence", message), report_(std::move(report)) {}

  const SolveReport& report() const noexcept { return report_; }

 private:
  SolveReport report_;
};

// Power-iteration estimate of ||A|| in the volume/face weighted norms, times
// 1.01, capped by the analytic bound sqrt(sum_a 4/h_a^2 + sum_{a in block 0} 1/h_a).
double estimate_opnorm(const GridSpec& spec, int iters, std::uint64_t seed = 0);

SolveResult solve_elliptic(const ScalarField& f, const GridSpec& spec, const SolveOptions& opts = {});

// u = argmin F(u) + (1/(2 tau_time)) ||u - g||^2, i.e. g in u + tau_time A(u).
SolveResult solve_resolvent(const ScalarField& g, double tau_time, const GridSpec& spec,
                            const SolveOptions& opts = {});

struct GapBreakdown {
  double primal = 0.0;
  double dual = 0.0;
  double gap = 0.0;
  double bracket_e = 0.0;
  double bracket_g = 0.0;
  double divergence_residual = 0.0;
  double coercivity_radius = 0.0;
};

// Certified gap of a primal-dual pair. `data` is f (elliptic) or g
// (resolvent). Throws InvalidState if the dual violates |v0| <= 1 or the
// block-0 bound by more than roundoff.
GapBreakdown duality_gap(const ScalarField& u, const DualState& dual, const ScalarField& data,
                         const GridSpec& spec, ProblemKind kind, double tau_time = 1.0);

// Radius R with ||u*||_{p_k} <= R for the elliptic minimiser, from J(u*) <= J(0)
// and the discrete Poincare inequality.
double coercivity_radius(const ScalarField& f, const GridSpec& spec);

// Volume-weighted L^q norm.
double lp_norm(std::span<const double> v, double q, const GridSpec& spec);

}  // namespace anisoflow
