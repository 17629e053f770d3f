#include <cmath>

#include "anisoflow/error.hpp"
#include "anisoflow/grid.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace anisoflow;
using testing::Rng;

namespace {

GridSpec square(std::size_t n, BoundaryMode mode = BoundaryMode::dirichlet_penalized) {
  return GridSpec({n, n}, {1.0, 1.0}, {1, 1}, {1.0, 2.0}, mode);
}

GridSpec line(std::size_t n, double h) { return GridSpec({n}, {h}, {0, 1}, {1.0, 2.0}); }

}  // namespace

TEST_SUITE("grid") {

TEST_CASE("spec validation reports every violation") {
  const auto problems = GridSpec::violations({0, 4}, {1.0, -1.0}, {1, 2}, {2.0, 2.0});
  CHECK(problems.size() >= 4);
  bool p1 = false;
  for (const auto& p : problems) p1 = p1 || p.find("p1 must equal 1") != std::string::npos;
  CHECK(p1);
  CHECK_THROWS_AS(GridSpec({4, 4}, {1.0, 1.0}, {1, 1}, {1.0, 0.9}), InvalidInput);
  CHECK_THROWS_AS(GridSpec({4, 4}, {1.0, 1.0}, {1, 1, 1}, {1.0, 2.0, 3.0}), InvalidInput);
  CHECK_NOTHROW(GridSpec({4, 4, 2}, {1.0, 0.5, 2.0}, {1, 1, 1}, {1.0, 2.0, 2.0}));
}

TEST_CASE("constant field has zero interior differences") {
  const auto spec = GridSpec({3, 4, 2}, {1.0, 0.5, 2.0}, {1, 1, 1}, {1.0, 2.0, 3.0});
  const auto z = grad(ScalarField(spec, 3.5), spec);
  for (std::size_t a = 0; a < spec.ndim(); ++a) {
    for (std::size_t c = 0; c < spec.cell_count(); ++c) {
      if (!spec.is_last(c, a)) CHECK(z.component(a)[c] == 0.0);
    }
  }
}

TEST_CASE("1D ramp with zero far ghost") {
  const auto spec = line(4, 1.0);
  const ScalarField u({4}, {1.0}, {1.0, 2.0, 3.0, 4.0});
  const auto z = grad(u, spec);
  const auto d = z.component(0);
  CHECK(d[0] == 1.0);
  CHECK(d[1] == 1.0);
  CHECK(d[2] == 1.0);
  CHECK(d[3] == -4.0);
}

TEST_CASE("3x3 forward differences match enumeration") {
  Rng rng(11);
  const auto spec = square(3);
  const auto u = testing::random_field(spec, rng);
  const auto z = grad(u, spec);
  auto at = [&](std::size_t i, std::size_t j) { return u[3 * i + j]; };
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      // Block 0 (axis 0): no flux past the last row. Block 1 (axis 1): ghost 0.
      const double d0 = i + 1 < 3 ? at(i + 1, j) - at(i, j) : 0.0;
      const double d1 = (j + 1 < 3 ? at(i, j + 1) : 0.0) - at(i, j);
      CHECK(z.component(0)[3 * i + j] == doctest::Approx(d0).epsilon(1e-15));
      CHECK(z.component(1)[3 * i + j] == doctest::Approx(d1).epsilon(1e-15));
    }
  }
}

TEST_CASE("grad_block only fills the requested block") {
  Rng rng(3);
  const auto spec = GridSpec({3, 3, 3}, {1.0, 1.0, 1.0}, {1, 1, 1}, {1.0, 2.0, 3.0});
  const auto u = testing::random_field(spec, rng);
  const auto full = grad(u, spec);
  const auto only = grad_block(u, spec, 1);
  CHECK(testing::max_abs(only.component(0)) == 0.0);
  CHECK(testing::max_abs(only.component(2)) == 0.0);
  CHECK(testing::max_abs_diff(only.component(1), full.component(1)) == 0.0);
}

TEST_CASE("divergence of zero and of a unit interior flux") {
  const auto spec2 = square(4);
  CHECK(testing::max_abs(div_blocks(BlockVectorField(spec2), spec2).values()) == 0.0);

  const double h = 0.5;
  const auto spec = line(8, h);
  BlockVectorField z(spec);
  for (std::size_t c = 0; c + 1 < 8; ++c) z.component(0)[c] = 1.0;
  const auto d = div_blocks(z, spec);
  CHECK(d[0] == doctest::Approx(1.0 / h));
  CHECK(d[7] == doctest::Approx(-1.0 / h));
  for (std::size_t c = 1; c < 7; ++c) CHECK(d[c] == 0.0);
}

TEST_CASE("Gauss-Green identity on random pairs") {
  Rng rng(2024);
  for (int trial = 0; trial < 100; ++trial) {
    const auto spec = trial == 0 ? GridSpec({3, 4}, {1.0, 1.0}, {1, 1}, {1.0, 2.0}) : testing::random_spec(rng);
    const auto u = testing::random_field(spec, rng);
    const auto z = testing::random_vector(spec, rng);
    const auto dz = div_blocks(z, spec);
    const double lhs = vector_inner(grad(u, spec), z, spec) + cell_inner(u, dz, spec);
    const double flux = face_inner(boundary_restriction(u, spec), normal_trace(z, spec), spec);
    const double scale = cell_norm(u, spec) * vector_norm(z, spec) * 10.0 + 1.0;
    CHECK(std::abs(lhs - flux) <= 1e-12 * scale);
    if (spec.mode() == BoundaryMode::neumann_block1) CHECK(flux == 0.0);
  }
}

TEST_CASE("adjoint pairs") {
  Rng rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    const auto spec = testing::random_spec(rng);
    const auto u = testing::random_field(spec, rng);
    const auto z = testing::random_vector(spec, rng);
    const double a = vector_inner(grad(u, spec), z, spec);
    const double b = cell_inner(u, grad_adjoint(z, spec), spec);
    CHECK(a == doctest::Approx(b).epsilon(1e-12));

    BoundaryField t(spec);
    for (double& v : t.values()) v = testing::uniform(rng, -1.0, 1.0);
    const double c = face_inner(boundary_restriction(u, spec), t, spec);
    const double d = cell_inner(u, boundary_adjoint(t, spec), spec);
    CHECK(c == doctest::Approx(d).epsilon(1e-12));

    const auto with_trace = div_with_trace(z, normal_trace(z, spec), spec);
    CHECK(testing::max_abs_diff(with_trace.values(), div_blocks(z, spec).values()) <= 1e-13);
  }
}

TEST_CASE("linearity of grad and div") {
  Rng rng(8);
  const auto spec = testing::random_spec(rng);
  const auto u = testing::random_field(spec, rng);
  const auto w = testing::random_field(spec, rng);
  const double s = 1.7, t = -0.4;
  ScalarField comb(spec);
  for (std::size_t c = 0; c < comb.size(); ++c) comb[c] = s * u[c] + t * w[c];
  const auto gu = grad(u, spec), gw = grad(w, spec), gc = grad(comb, spec);
  for (std::size_t i = 0; i < gc.values().size(); ++i) {
    CHECK(gc.values()[i] == doctest::Approx(s * gu.values()[i] + t * gw.values()[i]).epsilon(1e-14));
  }
  const auto z = testing::random_vector(spec, rng);
  BlockVectorField zs(spec);
  for (std::size_t i = 0; i < zs.values().size(); ++i) zs.values()[i] = s * z.values()[i];
  const auto dz = div_blocks(z, spec), dzs = div_blocks(zs, spec);
  for (std::size_t c = 0; c < dz.size(); ++c) CHECK(dzs[c] == doctest::Approx(s * dz[c]).epsilon(1e-14));
}

TEST_CASE("changing one cell only touches its stencil") {
  Rng rng(21);
  const auto spec = GridSpec({4, 5, 3}, {1.0, 1.0, 1.0}, {1, 1, 1}, {1.0, 2.0, 2.0});
  const auto u = testing::random_field(spec, rng);
  for (std::size_t cell : {std::size_t{0}, std::size_t{17}, spec.cell_count() - 1}) {
    auto v = u;
    v[cell] += 1.0;
    const auto gu = grad(u, spec), gv = grad(v, spec);
    for (std::size_t a = 0; a < spec.ndim(); ++a) {
      for (std::size_t c = 0; c < spec.cell_count(); ++c) {
        const bool own = c == cell;
        const bool behind = spec.coordinate(cell, a) > 0 && c + spec.stride(a) == cell;
        if (!own && !behind) CHECK(gu.component(a)[c] == gv.component(a)[c]);
      }
    }
  }
}

TEST_CASE("boundary restriction gathers boundary-adjacent cells") {
  Rng rng(13);
  const auto spec = GridSpec({3, 4}, {0.5, 2.0}, {1, 1}, {1.0, 2.0});
  CHECK(spec.face_count() == 8);
  const auto c = boundary_restriction(ScalarField(spec, 2.5), spec);
  for (double v : c.values()) CHECK(v == 2.5);

  const auto u = testing::random_field(spec, rng);
  const auto b = boundary_restriction(u, spec);
  for (std::size_t j = 0; j < 4; ++j) {
    CHECK(b[j] == u[j]);              // low faces: row 0
    CHECK(b[4 + j] == u[2 * 4 + j]);  // high faces: row 2
    CHECK(spec.faces()[j].weight == doctest::Approx(2.0));
    CHECK_FALSE(spec.faces()[j].high);
    CHECK(spec.faces()[4 + j].high);
  }

  ScalarField inner(spec, 0.0);
  inner[4 + 1] = 7.0;
  inner[4 + 2] = -1.0;
  const auto restricted = boundary_restriction(inner, spec);
  for (double v : restricted.values()) CHECK(v == 0.0);
}

TEST_CASE("empty block 0 has no faces") {
  const auto spec = line(8, 1.0);
  CHECK(spec.face_count() == 0);
  CHECK_FALSE(spec.has_boundary_term());
  CHECK(spec.block_axes(0).empty());
}

TEST_CASE("normal trace of a unit field") {
  const auto spec = GridSpec({3, 3, 2}, {1.0, 1.0, 1.0}, {2, 1}, {1.0, 2.0});
  BlockVectorField z(spec);
  for (auto& v : z.component(1)) v = 1.0;
  const auto t = normal_trace(z, spec);
  for (std::size_t f = 0; f < spec.face_count(); ++f) {
    const auto& face = spec.faces()[f];
    if (face.axis == 1) {
      CHECK(t[f] == (face.high ? 1.0 : -1.0));
    } else {
      CHECK(t[f] == 0.0);
    }
  }
  const auto neumann = spec.with_mode(BoundaryMode::neumann_block1);
  const auto none = normal_trace(z, neumann);
  for (double v : none.values()) CHECK(v == 0.0);
}

TEST_CASE("shape mismatches are rejected") {
  const auto spec = square(4);
  const auto other = square(3);
  CHECK_THROWS_AS(grad(ScalarField(other), spec), InvalidInput);
  CHECK_THROWS_AS(div_blocks(BlockVectorField(other), spec), InvalidInput);
  CHECK_THROWS_AS(boundary_restriction(ScalarField(other), spec), InvalidInput);
}

}  // TEST_SUITE
