#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "anisoflow/grid.hpp"

namespace testing {

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline std::size_t pick(Rng& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

inline anisoflow::ScalarField random_field(const anisoflow::GridSpec& spec, Rng& rng,
                                           double lo = -1.0, double hi = 1.0) {
  anisoflow::ScalarField u(spec);
  for (std::size_t c = 0; c < u.size(); ++c) u[c] = uniform(rng, lo, hi);
  return u;
}

inline anisoflow::BlockVectorField random_vector(const anisoflow::GridSpec& spec, Rng& rng,
                                                 double lo = -1.0, double hi = 1.0) {
  anisoflow::BlockVectorField z(spec);
  for (double& v : z.values()) v = uniform(rng, lo, hi);
  return z;
}

// Random valid grid in 2 or 3 dimensions with a mix of block layouts.
inline anisoflow::GridSpec random_spec(Rng& rng) {
  using anisoflow::BoundaryMode;
  using anisoflow::TvNorm;
  const bool three = rng() & 1U;
  std::vector<std::size_t> dims;
  std::vector<double> spacing;
  for (int a = 0; a < (three ? 3 : 2); ++a) {
    dims.push_back(pick(rng, 2, three ? 4 : 6));
    spacing.push_back(uniform(rng, 0.5, 2.0));
  }
  std::vector<std::size_t> blocks;
  std::vector<double> exps;
  if (!three) {
    blocks = {1, 1};
    exps = {1.0, uniform(rng, 1.3, 4.0)};
  } else {
    switch (rng() % 3) {
      case 0: blocks = {1, 1, 1}; exps = {1.0, 2.0, 3.0}; break;
      case 1: blocks = {2, 1}; exps = {1.0, 2.5}; break;
      default: blocks = {1, 2}; exps = {1.0, 1.5}; break;
    }
  }
  const auto mode = (rng() & 1U) ? BoundaryMode::dirichlet_penalized : BoundaryMode::neumann_block1;
  const auto norm = (rng() & 1U) ? TvNorm::euclidean : TvNorm::l1;
  return anisoflow::GridSpec(dims, spacing, blocks, exps, mode, norm);
}

inline double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace testing
