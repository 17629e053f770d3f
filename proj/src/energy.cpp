#include "anisoflow/energy.hpp"

#include <algorithm>
#include <cmath>

#include "anisoflow/error.hpp"

namespace anisoflow {

namespace {

// Per-cell norm over the components of one block.
double block_cell_norm(const BlockVectorField& g, std::span<const std::size_t> axes, std::size_t c,
                       TvNorm norm) {
  if (norm == TvNorm::l1) {
    double acc = 0.0;
    for (std::size_t a : axes) acc += std::abs(g.component(a)[c]);
    return acc;
  }
  if (axes.size() == 1) return std::abs(g.component(axes[0])[c]);
  double acc = 0.0;
  for (std::size_t a : axes) acc += g.component(a)[c] * g.component(a)[c];
  return std::sqrt(acc);
}

}  // namespace

double tv_block1(const ScalarField& u, const GridSpec& spec, TvNorm norm) {
  require_conforming(u, spec, "tv_block1");
  const auto axes = spec.block_axes(0);
  if (axes.empty()) return 0.0;
  const BlockVectorField g = grad_block(u, spec, 0);
  double acc = 0.0;
  for (std::size_t c = 0; c < spec.cell_count(); ++c) acc += block_cell_norm(g, axes, c, norm);
  return acc * spec.cell_volume();
}

double power_term(const ScalarField& u, const GridSpec& spec, std::size_t block) {
  require_conforming(u, spec, "power_term");
  if (block == 0 || block >= spec.block_count()) {
    throw InvalidInput("power_term: block index must be in [1, k)");
  }
  const auto axes = spec.block_axes(block);
  const double p = spec.exponent(block);
  const BlockVectorField g = grad_block(u, spec, block);
  double acc = 0.0;
  for (std::size_t c = 0; c < spec.cell_count(); ++c) {
    acc += std::pow(block_cell_norm(g, axes, c, TvNorm::euclidean), p);
  }
  return acc * spec.cell_volume() / p;
}

double boundary_term(const ScalarField& u, const GridSpec& spec) {
  require_conforming(u, spec, "boundary_term");
  if (!spec.has_boundary_term()) return 0.0;
  double acc = 0.0;
  for (const Face& f : spec.faces()) acc += f.weight * std::abs(u[f.cell]);
  return acc;
}

EnergyBreakdown eval_F(const ScalarField& u, const GridSpec& spec) {
  EnergyBreakdown out;
  out.tv_block1 = tv_block1(u, spec);
  out.boundary_term = boundary_term(u, spec);
  out.total = out.tv_block1 + out.boundary_term;
  for (std::size_t b = 1; b < spec.block_count(); ++b) {
    out.power_terms.push_back(power_term(u, spec, b));
    out.total += out.power_terms.back();
  }
  return out;
}

EnergyBreakdown eval_J(const ScalarField& u, const ScalarField& f, const GridSpec& spec) {
  require_conforming(f, spec, "eval_J");
  EnergyBreakdown out = eval_F(u, spec);
  out.source_term = -cell_inner(f, u, spec);
  out.total += out.source_term;
  return out;
}

CoareaResult coarea_check(const ScalarField& u, const GridSpec& spec, TvNorm norm) {
  require_conforming(u, spec, "coarea_check");
  CoareaResult out;
  out.lhs = tv_block1(u, spec, norm);

  std::vector<double> levels(u.values().begin(), u.values().end());
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());

  // For t in [levels[l], levels[l+1]) the set {u > t} equals {u > levels[l]}.
  // Below the minimum the set is everything, above the maximum it is empty;
  // both have zero interior variation with the no-flux closure of block 0.
  ScalarField indicator(spec);
  for (std::size_t l = 0; l + 1 < levels.size(); ++l) {
    for (std::size_t c = 0; c < u.size(); ++c) indicator[c] = u[c] > levels[l] ? 1.0 : 0.0;
    out.rhs += (levels[l + 1] - levels[l]) * tv_block1(indicator, spec, norm);
  }
  out.gap = std::abs(out.lhs - out.rhs);
  return out;
}

PoincareSides poincare_sides(const ScalarField& u, const GridSpec& spec) {
  require_conforming(u, spec, "poincare_sides");
  if (spec.block_count() < 2) throw InvalidInput("poincare_sides: needs a power-growth block");
  const std::size_t last = spec.block_count() - 1;
  const double p = spec.exponent(last);
  PoincareSides out;
  out.constant = std::pow(spec.domain_length(spec.poincare_axis()), p);
  double lhs = 0.0;
  for (double v : u.values()) lhs += std::pow(std::abs(v), p);
  out.lhs = lhs * spec.cell_volume();
  out.rhs = out.constant * p * power_term(u, spec, last);
  return out;
}

}  // namespace anisoflow
