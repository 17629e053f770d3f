#pragma once

// Uniform product grids over Omega = Omega_1 x Omega_2 and the discrete
// gradient / divergence / trace operators used everywhere else.
//
// Cells are ordered row-major (last axis fastest). Axes are grouped into
// consecutive blocks; block 0 holds the linear-growth (total variation)
// directions, blocks 1..k-1 carry power growth with exponent p_i > 1.
//
// Gradient components are forward differences stored at the cell where the
// difference originates. Along an axis of block i >= 1 the far neighbour of
// the last cell is a ghost with value 0 (zero trace on Omega_1 x dOmega_2).
// Along a block-0 axis the last component is identically 0 (no flux); the
// jump to the exterior on dOmega_1 x Omega_2 is accounted for by the trace
// operator instead, which restricts u to the boundary-adjacent cells.

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace anisoflow {

enum class BoundaryMode { dirichlet_penalized, neumann_block1 };
enum class TvNorm { euclidean, l1 };

std::string to_string(BoundaryMode mode);
std::string to_string(TvNorm norm);
BoundaryMode parse_boundary_mode(std::string_view text);
TvNorm parse_tv_norm(std::string_view text);

// A cell face on dOmega_1 x Omega_2.
struct Face {
  std::size_t cell = 0;  // boundary-adjacent cell
  std::size_t axis = 0;  // block-0 axis the face is normal to
  bool high = false;     // outward normal is +e_axis when true, -e_axis otherwise
  double weight = 0.0;   // (N-1)-dimensional face measure
};

class GridSpec {
 public:
  GridSpec() = default;

  // Throws InvalidInput listing every violated invariant.
  GridSpec(std::vector<std::size_t> dims, std::vector<double> spacing,
           std::vector<std::size_t> block_sizes, std::vector<double> exponents,
           BoundaryMode mode = BoundaryMode::dirichlet_penalized,
           TvNorm tv_norm = TvNorm::euclidean);

  static std::vector<std::string> violations(const std::vector<std::size_t>& dims,
                                             const std::vector<double>& spacing,
                                             const std::vector<std::size_t>& block_sizes,
                                             const std::vector<double>& exponents);

  std::size_t ndim() const { return dims_.size(); }
  std::size_t cell_count() const { return cell_count_; }
  const std::vector<std::size_t>& dims() const { return dims_; }
  const std::vector<double>& spacing() const { return spacing_; }
  std::size_t dim(std::size_t axis) const { return dims_[axis]; }
  double h(std::size_t axis) const { return spacing_[axis]; }
  std::size_t stride(std::size_t axis) const { return strides_[axis]; }
  double cell_volume() const { return cell_volume_; }
  double domain_length(std::size_t axis) const { return h(axis) * static_cast<double>(dim(axis)); }

  std::size_t block_count() const { return block_sizes_.size(); }
  const std::vector<std::size_t>& block_sizes() const { return block_sizes_; }
  std::size_t block_of_axis(std::size_t axis) const { return axis_block_[axis]; }
  std::span<const std::size_t> block_axes(std::size_t block) const;
  double exponent(std::size_t block) const { return exponents_[block]; }
  // p' = p / (p - 1); infinite for block 0.
  double conjugate_exponent(std::size_t block) const;
  const std::vector<double>& exponents() const { return exponents_; }

  BoundaryMode mode() const { return mode_; }
  TvNorm tv_norm() const { return tv_norm_; }
  bool has_boundary_term() const {
    return mode_ == BoundaryMode::dirichlet_penalized && !faces_.empty();
  }

  std::size_t coordinate(std::size_t cell, std::size_t axis) const {
    return (cell / strides_[axis]) % dims_[axis];
  }
  bool is_last(std::size_t cell, std::size_t axis) const {
    return coordinate(cell, axis) + 1 == dims_[axis];
  }

  // Faces on dOmega_1 x Omega_2: for every block-0 axis, low side then high
  // side, cells in row-major order.
  const std::vector<Face>& faces() const { return faces_; }
  std::size_t face_count() const { return faces_.size(); }

  // Last axis of the last block; the Poincare direction.
  std::size_t poincare_axis() const { return ndim() - 1; }

  GridSpec with_mode(BoundaryMode mode) const;
  GridSpec with_tv_norm(TvNorm norm) const;

  bool operator==(const GridSpec& other) const;

 private:
  void build();

  std::vector<std::size_t> dims_;
  std::vector<double> spacing_;
  std::vector<std::size_t> block_sizes_;
  std::vector<double> exponents_;
  BoundaryMode mode_ = BoundaryMode::dirichlet_penalized;
  TvNorm tv_norm_ = TvNorm::euclidean;

  std::vector<std::size_t> strides_;
  std::vector<std::size_t> axis_block_;
  std::vector<std::size_t> block_offsets_;
  std::vector<std::size_t> axes_;
  std::vector<Face> faces_;
  std::size_t cell_count_ = 0;
  double cell_volume_ = 0.0;
};

// Cell-centred scalar field (u, u0, f, g, v). Carries its own shape so a
// field read from disk can be checked against a GridSpec.
class ScalarField {
 public:
  ScalarField() = default;
  explicit ScalarField(const GridSpec& spec, double fill = 0.0);
  ScalarField(std::vector<std::size_t> dims, std::vector<double> spacing,
              std::vector<double> values);

  const std::vector<std::size_t>& dims() const { return dims_; }
  const std::vector<double>& spacing() const { return spacing_; }
  std::size_t size() const { return values_.size(); }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  bool conforms(const GridSpec& spec) const;
  bool all_finite() const;

  friend bool operator==(const ScalarField&, const ScalarField&) = default;

 private:
  std::vector<std::size_t> dims_;
  std::vector<double> spacing_;
  std::vector<double> values_;
};

// One component per axis per cell; block i owns the components of its axes.
class BlockVectorField {
 public:
  BlockVectorField() = default;
  explicit BlockVectorField(const GridSpec& spec);

  std::size_t ndim() const { return ndim_; }
  std::size_t cell_count() const { return cells_; }

  std::span<double> component(std::size_t axis) {
    return std::span<double>(values_).subspan(axis * cells_, cells_);
  }
  std::span<const double> component(std::size_t axis) const {
    return std::span<const double>(values_).subspan(axis * cells_, cells_);
  }
  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  bool conforms(const GridSpec& spec) const;
  bool all_finite() const;

  friend bool operator==(const BlockVectorField&, const BlockVectorField&) = default;

 private:
  std::size_t ndim_ = 0;
  std::size_t cells_ = 0;
  std::vector<double> values_;
};

// One value per face of dOmega_1 x Omega_2, in GridSpec::faces() order.
class BoundaryField {
 public:
  BoundaryField() = default;
  explicit BoundaryField(const GridSpec& spec, double fill = 0.0);
  explicit BoundaryField(std::vector<double> values) : values_(std::move(values)) {}

  std::size_t size() const { return values_.size(); }
  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  bool conforms(const GridSpec& spec) const { return values_.size() == spec.face_count(); }

  friend bool operator==(const BoundaryField&, const BoundaryField&) = default;

 private:
  std::vector<double> values_;
};

void require_conforming(const ScalarField& u, const GridSpec& spec, std::string_view what);
void require_conforming(const BlockVectorField& z, const GridSpec& spec, std::string_view what);
void require_conforming(const BoundaryField& b, const GridSpec& spec, std::string_view what);

// Forward differences of u along one axis, written to `out` (size cell_count).
void grad_axis(std::span<const double> u, const GridSpec& spec, std::size_t axis,
               std::span<double> out);

BlockVectorField grad(const ScalarField& u, const GridSpec& spec);
// Only the components of `block` are populated; the rest stay zero.
BlockVectorField grad_block(const ScalarField& u, const GridSpec& spec, std::size_t block);

// Adjoint of grad with respect to the volume-weighted inner products,
// i.e. the plain transpose D^T z.
ScalarField grad_adjoint(const BlockVectorField& z, const GridSpec& spec);
void grad_adjoint_into(const BlockVectorField& z, const GridSpec& spec, std::span<double> out);

// Value of the boundary-adjacent cell at each face of dOmega_1 x Omega_2.
BoundaryField boundary_restriction(const ScalarField& u, const GridSpec& spec);

// Adjoint of boundary_restriction: face-weighted values scattered back into
// cells, divided by the cell volume.
ScalarField boundary_adjoint(const BoundaryField& b, const GridSpec& spec);
// out += T^* b
void boundary_adjoint_add(const BoundaryField& b, const GridSpec& spec, std::span<double> out);

// Discrete normal trace [z_1, nu] on dOmega_1 x Omega_2: the block-0 component
// normal to the face, signed by the outward normal, taken in the
// boundary-adjacent cell. Identically zero under neumann_block1.
BoundaryField normal_trace(const BlockVectorField& z, const GridSpec& spec);

// div(z) = -D^T z + T^*[z_1, nu]. With this definition
//   <grad u, z> + <u, div z> = sum_faces w_f u_f [z_1, nu]_f
// holds exactly for every u and z.
ScalarField div_blocks(const BlockVectorField& z, const GridSpec& spec);

// Same identity with an externally supplied normal trace, e.g. the boundary
// flux of a primal-dual solve.
ScalarField div_with_trace(const BlockVectorField& z, const BoundaryField& trace,
                           const GridSpec& spec);

// Volume-weighted inner products.
double cell_inner(std::span<const double> a, std::span<const double> b, const GridSpec& spec);
double cell_inner(const ScalarField& a, const ScalarField& b, const GridSpec& spec);
double vector_inner(const BlockVectorField& a, const BlockVectorField& b, const GridSpec& spec);
double face_inner(const BoundaryField& a, const BoundaryField& b, const GridSpec& spec);

double cell_norm(const ScalarField& a, const GridSpec& spec);
double vector_norm(const BlockVectorField& a, const GridSpec& spec);

}  // namespace anisoflow
