#pragma once

// Residual checks of the weak-solution conditions for a pair (u, z):
//
//   ||z_1||_* <= 1,   z_1 . grad_1 u = ||grad_1 u||,
//   z_i = |grad_i u|^{p_i - 2} grad_i u  (i >= 1),
//   -div z = rhs,     [z_1, nu] in sign(-u) on dOmega_1 x Omega_2,
//
// plus the discrete pairing diagnostics (measure bound, normal trace,
// Gauss-Green, theta density). Nothing here throws on large residuals.

#include <optional>
#include <string>
#include <vector>

#include "anisoflow/grid.hpp"

namespace anisoflow {

// elliptic: rhs = f. parabolic: rhs = (u^n - u^{n+1}) / tau_time.
// In both cases the condition checked is -div z = rhs.
enum class CertificateMode { elliptic, parabolic };

std::string to_string(CertificateMode mode);

struct Certificate {
  CertificateMode mode = CertificateMode::elliptic;
  BoundaryMode boundary_mode = BoundaryMode::dirichlet_penalized;
  TvNorm tv_norm = TvNorm::euclidean;

  double sup_norm_z1 = 0.0;  // in the dual of the block-0 norm
  double trace_sup = 0.0;    // max |[z_1, nu]|
  double tv_block1 = 0.0;
  double pairing = 0.0;      // <z_1, grad_1 u>
  // |tv_block1 - pairing|; the difference is already >= 0 when sup_norm_z1 <= 1.
  double pairing_residual = 0.0;
  // Per block i >= 1: L^{p_i'} norm of z_i - |grad_i u|^{p_i-2} grad_i u.
  std::vector<double> constitutive_residuals;
  // Per block i >= 1: integrated Fenchel-Young excess
  // |grad_i u|^{p_i}/p_i + |z_i|^{p_i'}/p_i' - z_i . grad_i u >= 0.
  std::vector<double> constitutive_excess;
  double divergence_residual = 0.0;  // L^2 norm of -div z - rhs
  // max over faces of |[z_1, nu] u + |u||.
  double boundary_sign_residual = 0.0;
  // sum over faces of w_f (|u_f| + [z_1, nu]_f u_f).
  double boundary_sign_excess = 0.0;
  double gauss_green_residual = 0.0;
  std::optional<double> gap;

  // pairing_residual + sum constitutive_excess + boundary_sign_excess. For a
  // solver output this equals the E-part of the duality gap.
  double total_excess() const;
};

// `trace` defaults to weak_normal_trace(z); solver outputs pass their own
// boundary flux. `gap` is copied into the certificate when given.
Certificate check_weak_solution(const ScalarField& u, const BlockVectorField& z,
                                const ScalarField& rhs, const GridSpec& spec, CertificateMode mode,
                                const BoundaryField* trace = nullptr,
                                std::optional<double> gap = std::nullopt);

// Per-cell |cell| * z_1 . grad_1 u.
std::vector<double> pairing_measure(const BlockVectorField& z, const ScalarField& u,
                                    const GridSpec& spec);

// Per-cell |cell| * ||grad_1 u|| in the block-0 norm.
std::vector<double> tv_density(const ScalarField& u, const GridSpec& spec);

// Per-cell dual norm of z_1 (Euclidean for the Euclidean TV, max-abs for l1).
std::vector<double> z1_dual_norms(const BlockVectorField& z, const GridSpec& spec);

BoundaryField weak_normal_trace(const BlockVectorField& z, const GridSpec& spec);

struct GaussGreen {
  double lhs = 0.0;       // <u, div z> + <grad u, z>
  double rhs = 0.0;       // sum_faces w_f u_f [z_1, nu]_f
  double residual = 0.0;  // |lhs - rhs|
  double scale = 0.0;     // sum of absolute values of all summands
};

GaussGreen gauss_green(const ScalarField& u, const BlockVectorField& z, const GridSpec& spec,
                       const BoundaryField* trace = nullptr);

inline double gauss_green_residual(const ScalarField& u, const BlockVectorField& z,
                                   const GridSpec& spec) {
  return gauss_green(u, z, spec).residual;
}

// 1e-10 * max ||grad_1 u||, never below the smallest normal double.
double default_grad_floor(const ScalarField& u, const GridSpec& spec);

// theta = z_1 . grad_1 u / |grad_1 u| (Euclidean) where |grad_1 u| > grad_floor.
std::vector<std::optional<double>> theta_density(const BlockVectorField& z, const ScalarField& u,
                                                 const GridSpec& spec, double grad_floor);

struct TruncationReport {
  double max_deviation = 0.0;           // over all cells where both thetas exist
  double max_deviation_unstraddled = 0.0;
  std::size_t straddle_count = 0;       // stencils with values on both sides of a or b
  std::size_t compared_count = 0;
};

// Compares theta(z, u) with theta(z, clamp(u, a, b)).
TruncationReport theta_truncation_invariance(const BlockVectorField& z, const ScalarField& u,
                                             const GridSpec& spec, double a, double b,
                                             double grad_floor);

}  // namespace anisoflow
