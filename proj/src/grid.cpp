#include "anisoflow/grid.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "anisoflow/error.hpp"
#include "anisoflow/parallel.hpp"

namespace anisoflow {

std::string to_string(BoundaryMode mode) {
  return mode == BoundaryMode::dirichlet_penalized ? "dirichlet_penalized" : "neumann_block1";
}

std::string to_string(TvNorm norm) { return norm == TvNorm::euclidean ? "euclidean" : "l1"; }

BoundaryMode parse_boundary_mode(std::string_view text) {
  if (text == "dirichlet_penalized") return BoundaryMode::dirichlet_penalized;
  if (text == "neumann_block1") return BoundaryMode::neumann_block1;
  throw InvalidInput("unknown boundary mode '" + std::string(text) + "'");
}

TvNorm parse_tv_norm(std::string_view text) {
  if (text == "euclidean") return TvNorm::euclidean;
  if (text == "l1") return TvNorm::l1;
  throw InvalidInput("unknown tv norm '" + std::string(text) + "'");
}

// ---------------------------------------------------------------------------
// GridSpec

GridSpec::GridSpec(std::vector<std::size_t> dims, std::vector<double> spacing,
                   std::vector<std::size_t> block_sizes, std::vector<double> exponents,
                   BoundaryMode mode, TvNorm tv_norm)
    : dims_(std::move(dims)),
      spacing_(std::move(spacing)),
      block_sizes_(std::move(block_sizes)),
      exponents_(std::move(exponents)),
      mode_(mode),
      tv_norm_(tv_norm) {
  auto problems = violations(dims_, spacing_, block_sizes_, exponents_);
  if (!problems.empty()) throw InvalidInput(std::move(problems));
  build();
}

std::vector<std::string> GridSpec::violations(const std::vector<std::size_t>& dims,
                                              const std::vector<double>& spacing,
                                              const std::vector<std::size_t>& block_sizes,
                                              const std::vector<double>& exponents) {
  std::vector<std::string> out;
  if (dims.empty()) out.emplace_back("grid must have at least one axis");
  for (std::size_t a = 0; a < dims.size(); ++a) {
    if (dims[a] < 2) out.push_back("dims[" + std::to_string(a) + "] must be >= 2");
  }
  std::size_t total = 1;
  for (auto d : dims) {
    if (d != 0 && total > std::numeric_limits<std::size_t>::max() / 8 / d) {
      out.emplace_back("cell count overflows");
      break;
    }
    total *= d;
  }
  if (spacing.size() != dims.size()) {
    out.push_back("spacing has " + std::to_string(spacing.size()) + " entries, expected " +
                  std::to_string(dims.size()));
  }
  for (std::size_t a = 0; a < spacing.size(); ++a) {
    if (!(spacing[a] > 0.0) || !std::isfinite(spacing[a])) {
      out.push_back("spacing[" + std::to_string(a) + "] must be finite and > 0");
    }
  }
  if (block_sizes.empty()) out.emplace_back("at least one block is required");
  const std::size_t axis_sum = std::accumulate(block_sizes.begin(), block_sizes.end(), std::size_t{0});
  if (!block_sizes.empty() && axis_sum != dims.size()) {
    out.push_back("block sizes sum to " + std::to_string(axis_sum) + ", expected " +
                  std::to_string(dims.size()));
  }
  for (std::size_t i = 1; i < block_sizes.size(); ++i) {
    if (block_sizes[i] == 0) out.push_back("block " + std::to_string(i + 1) + " is empty");
  }
  if (exponents.size() != block_sizes.size()) {
    out.push_back("got " + std::to_string(exponents.size()) + " exponents for " +
                  std::to_string(block_sizes.size()) + " blocks");
  }
  if (!exponents.empty() && exponents[0] != 1.0) out.emplace_back("p1 must equal 1");
  for (std::size_t i = 1; i < exponents.size(); ++i) {
    const double p = exponents[i];
    const std::string name = "p" + std::to_string(i + 1);
    if (!std::isfinite(p) || !(p > 1.0)) {
      out.push_back(name + " must be > 1");
      continue;
    }
    // p' = p/(p-1) >= 1 + 1e-6
    if (p / (p - 1.0) < 1.0 + 1e-6) out.push_back(name + " is too large (p' < 1 + 1e-6)");
    if (i >= 2 && p < exponents[i - 1]) out.push_back("exponents must be nondecreasing from p2 on");
  }
  return out;
}

void GridSpec::build() {
  const std::size_t n = dims_.size();
  strides_.assign(n, 1);
  for (std::size_t a = n; a-- > 1;) strides_[a - 1] = strides_[a] * dims_[a];
  cell_count_ = strides_[0] * dims_[0];
  cell_volume_ = 1.0;
  for (double h : spacing_) cell_volume_ *= h;

  axis_block_.assign(n, 0);
  block_offsets_.assign(block_sizes_.size() + 1, 0);
  axes_.resize(n);
  std::iota(axes_.begin(), axes_.end(), std::size_t{0});
  std::size_t axis = 0;
  for (std::size_t b = 0; b < block_sizes_.size(); ++b) {
    block_offsets_[b] = axis;
    for (std::size_t j = 0; j < block_sizes_[b]; ++j) axis_block_[axis++] = b;
  }
  block_offsets_[block_sizes_.size()] = axis;

  faces_.clear();
  for (std::size_t a : block_axes(0)) {
    const double weight = cell_volume_ / spacing_[a];
    for (bool high : {false, true}) {
      const std::size_t want = high ? dims_[a] - 1 : 0;
      for (std::size_t c = 0; c < cell_count_; ++c) {
        if (coordinate(c, a) == want) faces_.push_back(Face{c, a, high, weight});
      }
    }
  }
}

std::span<const std::size_t> GridSpec::block_axes(std::size_t block) const {
  const std::size_t begin = block_offsets_[block];
  const std::size_t end = block_offsets_[block + 1];
  return std::span<const std::size_t>(axes_).subspan(begin, end - begin);
}

double GridSpec::conjugate_exponent(std::size_t block) const {
  const double p = exponents_[block];
  if (p == 1.0) return std::numeric_limits<double>::infinity();
  return p / (p - 1.0);
}

GridSpec GridSpec::with_mode(BoundaryMode mode) const {
  GridSpec out = *this;
  out.mode_ = mode;
  return out;
}

GridSpec GridSpec::with_tv_norm(TvNorm norm) const {
  GridSpec out = *this;
  out.tv_norm_ = norm;
  return out;
}

bool GridSpec::operator==(const GridSpec& other) const {
  return dims_ == other.dims_ && spacing_ == other.spacing_ &&
         block_sizes_ == other.block_sizes_ && exponents_ == other.exponents_ &&
         mode_ == other.mode_ && tv_norm_ == other.tv_norm_;
}

// ---------------------------------------------------------------------------
// Fields

ScalarField::ScalarField(const GridSpec& spec, double fill)
    : dims_(spec.dims()), spacing_(spec.spacing()), values_(spec.cell_count(), fill) {}

ScalarField::ScalarField(std::vector<std::size_t> dims, std::vector<double> spacing,
                         std::vector<double> values)
    : dims_(std::move(dims)), spacing_(std::move(spacing)), values_(std::move(values)) {
  std::size_t n = dims_.empty() ? 0 : 1;
  for (auto d : dims_) n *= d;
  if (n != values_.size() || spacing_.size() != dims_.size()) {
    throw InvalidInput("scalar field: value count does not match dims");
  }
}

bool ScalarField::conforms(const GridSpec& spec) const {
  return dims_ == spec.dims() && spacing_ == spec.spacing() && values_.size() == spec.cell_count();
}

bool ScalarField::all_finite() const {
  for (double v : values_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

BlockVectorField::BlockVectorField(const GridSpec& spec)
    : ndim_(spec.ndim()), cells_(spec.cell_count()), values_(ndim_ * cells_, 0.0) {}

bool BlockVectorField::conforms(const GridSpec& spec) const {
  return ndim_ == spec.ndim() && cells_ == spec.cell_count() && values_.size() == ndim_ * cells_;
}

bool BlockVectorField::all_finite() const {
  for (double v : values_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

BoundaryField::BoundaryField(const GridSpec& spec, double fill) : values_(spec.face_count(), fill) {}

void require_conforming(const ScalarField& u, const GridSpec& spec, std::string_view what) {
  if (!u.conforms(spec)) throw InvalidInput(std::string(what) + ": field shape does not match grid");
}

void require_conforming(const BlockVectorField& z, const GridSpec& spec, std::string_view what) {
  if (!z.conforms(spec)) {
    throw InvalidInput(std::string(what) + ": vector field shape does not match grid");
  }
}

void require_conforming(const BoundaryField& b, const GridSpec& spec, std::string_view what) {
  if (!b.conforms(spec)) {
    throw InvalidInput(std::string(what) + ": boundary field has " + std::to_string(b.size()) +
                       " entries, expected " + std::to_string(spec.face_count()));
  }
}

// ---------------------------------------------------------------------------
// Operators

void grad_axis(std::span<const double> u, const GridSpec& spec, std::size_t axis,
               std::span<double> out) {
  const std::size_t stride = spec.stride(axis);
  const double inv_h = 1.0 / spec.h(axis);
  const bool ghost_zero = spec.block_of_axis(axis) != 0;
  parallel_for(spec.cell_count(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t c = begin; c < end; ++c) {
      if (!spec.is_last(c, axis)) {
        out[c] = (u[c + stride] - u[c]) * inv_h;
      } else {
        out[c] = ghost_zero ? -u[c] * inv_h : 0.0;
      }
    }
  });
}

BlockVectorField grad(const ScalarField& u, const GridSpec& spec) {
  require_conforming(u, spec, "grad");
  BlockVectorField out(spec);
  for (std::size_t a = 0; a < spec.ndim(); ++a) grad_axis(u.values(), spec, a, out.component(a));
  return out;
}

BlockVectorField grad_block(const ScalarField& u, const GridSpec& spec, std::size_t block) {
  require_conforming(u, spec, "grad_block");
  if (block >= spec.block_count()) throw InvalidInput("grad_block: block index out of range");
  BlockVectorField out(spec);
  for (std::size_t a : spec.block_axes(block)) grad_axis(u.values(), spec, a, out.component(a));
  return out;
}

ScalarField grad_adjoint(const BlockVectorField& z, const GridSpec& spec) {
  require_conforming(z, spec, "grad_adjoint");
  ScalarField out(spec);
  grad_adjoint_into(z, spec, out.values());
  return out;
}

void grad_adjoint_into(const BlockVectorField& z, const GridSpec& spec, std::span<double> dst) {
  parallel_for(spec.cell_count(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t c = begin; c < end; ++c) {
      double acc = 0.0;
      for (std::size_t a = 0; a < spec.ndim(); ++a) {
        const auto za = z.component(a);
        const double inv_h = 1.0 / spec.h(a);
        if (spec.coordinate(c, a) > 0) acc += za[c - spec.stride(a)] * inv_h;
        if (!spec.is_last(c, a) || spec.block_of_axis(a) != 0) acc -= za[c] * inv_h;
      }
      dst[c] = acc;
    }
  });
}

BoundaryField boundary_restriction(const ScalarField& u, const GridSpec& spec) {
  require_conforming(u, spec, "boundary_restriction");
  BoundaryField out(spec);
  const auto& faces = spec.faces();
  for (std::size_t f = 0; f < faces.size(); ++f) out[f] = u[faces[f].cell];
  return out;
}

ScalarField boundary_adjoint(const BoundaryField& b, const GridSpec& spec) {
  require_conforming(b, spec, "boundary_adjoint");
  ScalarField out(spec);
  boundary_adjoint_add(b, spec, out.values());
  return out;
}

void boundary_adjoint_add(const BoundaryField& b, const GridSpec& spec, std::span<double> out) {
  const auto& faces = spec.faces();
  const double inv_vol = 1.0 / spec.cell_volume();
  for (std::size_t f = 0; f < faces.size(); ++f) out[faces[f].cell] += b[f] * faces[f].weight * inv_vol;
}

BoundaryField normal_trace(const BlockVectorField& z, const GridSpec& spec) {
  require_conforming(z, spec, "normal_trace");
  BoundaryField out(spec);
  if (spec.mode() == BoundaryMode::neumann_block1) return out;
  const auto& faces = spec.faces();
  for (std::size_t f = 0; f < faces.size(); ++f) {
    const double zn = z.component(faces[f].axis)[faces[f].cell];
    out[f] = faces[f].high ? zn : -zn;
  }
  return out;
}

ScalarField div_with_trace(const BlockVectorField& z, const BoundaryField& trace,
                           const GridSpec& spec) {
  ScalarField out = grad_adjoint(z, spec);
  const ScalarField flux = boundary_adjoint(trace, spec);
  for (std::size_t c = 0; c < out.size(); ++c) out[c] = flux[c] - out[c];
  return out;
}

ScalarField div_blocks(const BlockVectorField& z, const GridSpec& spec) {
  return div_with_trace(z, normal_trace(z, spec), spec);
}

double cell_inner(std::span<const double> a, std::span<const double> b, const GridSpec& spec) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc * spec.cell_volume();
}

double cell_inner(const ScalarField& a, const ScalarField& b, const GridSpec& spec) {
  require_conforming(a, spec, "cell_inner");
  require_conforming(b, spec, "cell_inner");
  return cell_inner(a.values(), b.values(), spec);
}

double vector_inner(const BlockVectorField& a, const BlockVectorField& b, const GridSpec& spec) {
  require_conforming(a, spec, "vector_inner");
  require_conforming(b, spec, "vector_inner");
  return cell_inner(a.values(), b.values(), spec);
}

double face_inner(const BoundaryField& a, const BoundaryField& b, const GridSpec& spec) {
  require_conforming(a, spec, "face_inner");
  require_conforming(b, spec, "face_inner");
  double acc = 0.0;
  const auto& faces = spec.faces();
  for (std::size_t f = 0; f < faces.size(); ++f) acc += faces[f].weight * a[f] * b[f];
  return acc;
}

double cell_norm(const ScalarField& a, const GridSpec& spec) {
  return std::sqrt(cell_inner(a, a, spec));
}

double vector_norm(const BlockVectorField& a, const GridSpec& spec) {
  return std::sqrt(vector_inner(a, a, spec));
}

}  // namespace anisoflow
