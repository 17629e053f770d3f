#pragma once

#include <vector>

#include "anisoflow/grid.hpp"

namespace anisoflow {

struct EnergyBreakdown {
  double tv_block1 = 0.0;
  std::vector<double> power_terms;  // one entry per block i >= 1
  double boundary_term = 0.0;
  double source_term = 0.0;
  double total = 0.0;
};

// sum_cells |cell| * ||grad_1 u||, with the per-cell norm over the block-0
// components (Euclidean or l1).
double tv_block1(const ScalarField& u, const GridSpec& spec, TvNorm norm);
inline double tv_block1(const ScalarField& u, const GridSpec& spec) {
  return tv_block1(u, spec, spec.tv_norm());
}

// (1/p_i) sum_cells |cell| * ||grad_i u||_2^{p_i}, block >= 1.
double power_term(const ScalarField& u, const GridSpec& spec, std::size_t block);

// sum_faces w_f |u_f| under dirichlet_penalized, 0 under neumann_block1.
double boundary_term(const ScalarField& u, const GridSpec& spec);

// Parabolic energy F.
EnergyBreakdown eval_F(const ScalarField& u, const GridSpec& spec);

// Elliptic energy J = F - <f, u>.
EnergyBreakdown eval_J(const ScalarField& u, const ScalarField& f, const GridSpec& spec);

struct CoareaResult {
  double lhs = 0.0;  // tv_block1(u)
  double rhs = 0.0;  // integral over t of tv_block1(1_{u > t})
  double gap = 0.0;  // |lhs - rhs|
};

// Level sets are strict superlevel sets {u > t}, enumerated at the distinct
// values of u; the integral over t is then an exact finite sum.
CoareaResult coarea_check(const ScalarField& u, const GridSpec& spec, TvNorm norm);

struct PoincareSides {
  double lhs = 0.0;       // sum |cell| |u|^{p_k}
  double rhs = 0.0;       // L^{p_k} sum |cell| ||grad_k u||^{p_k}
  double constant = 0.0;  // L^{p_k}, L the domain length along the last axis
};

// Discrete Poincare inequality in the last block. Requires block_count() >= 2.
PoincareSides poincare_sides(const ScalarField& u, const GridSpec& spec);

}  // namespace anisoflow
