#include <cmath>

#include "anisoflow/energy.hpp"
#include "anisoflow/grid.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace anisoflow;
using testing::Rng;

namespace {

GridSpec grid4(BoundaryMode mode) { return GridSpec({4, 4}, {1.0, 1.0}, {1, 1}, {1.0, 2.0}, mode); }

// Sum over cells of |cell| * ||(grad_1 u)(cell)|| recomputed from forward
// differences, independent of grad().
double tv_by_hand(const ScalarField& u, const GridSpec& spec, TvNorm norm) {
  double total = 0.0;
  for (std::size_t c = 0; c < spec.cell_count(); ++c) {
    double acc = 0.0;
    for (std::size_t a : spec.block_axes(0)) {
      const double d = spec.is_last(c, a) ? 0.0 : (u[c + spec.stride(a)] - u[c]) / spec.h(a);
      acc += norm == TvNorm::l1 ? std::abs(d) : d * d;
    }
    total += spec.cell_volume() * (norm == TvNorm::l1 ? acc : std::sqrt(acc));
  }
  return total;
}

}  // namespace

TEST_SUITE("energy") {

TEST_CASE("zero field has zero energy") {
  const auto spec = grid4(BoundaryMode::dirichlet_penalized);
  const ScalarField zero(spec);
  const auto e = eval_F(zero, spec);
  CHECK(e.total == 0.0);
  CHECK(e.tv_block1 == 0.0);
  CHECK(e.boundary_term == 0.0);
  CHECK(e.power_terms.at(0) == 0.0);
  CHECK(eval_J(zero, ScalarField(spec, 3.0), spec).total == 0.0);
}

TEST_CASE("TV of a two-column indicator is 4") {
  const auto spec = grid4(BoundaryMode::neumann_block1);
  ScalarField u(spec);
  for (std::size_t c = 0; c < u.size(); ++c) u[c] = spec.coordinate(c, 0) < 2 ? 1.0 : 0.0;
  CHECK(tv_block1(u, spec) == doctest::Approx(4.0));
}

TEST_CASE("euclidean TV is at most l1 TV") {
  const auto spec = GridSpec({4, 4, 2}, {1.0, 1.0, 1.0}, {2, 1}, {1.0, 2.0});
  ScalarField u(spec);
  for (std::size_t c = 0; c < u.size(); ++c) {
    u[c] = spec.coordinate(c, 0) < 2 && spec.coordinate(c, 1) < 2 ? 1.0 : 0.0;
  }
  const double e = tv_block1(u, spec, TvNorm::euclidean);
  const double l = tv_block1(u, spec, TvNorm::l1);
  CHECK(e > 0.0);
  CHECK(e <= l);
  CHECK(e < l);  // the corner cell has two nonzero differences
}

TEST_CASE("TV matches direct enumeration") {
  Rng rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    const auto spec = testing::random_spec(rng);
    const auto u = testing::random_field(spec, rng);
    for (auto norm : {TvNorm::euclidean, TvNorm::l1}) {
      CHECK(tv_block1(u, spec, norm) == doctest::Approx(tv_by_hand(u, spec, norm)).epsilon(1e-13));
    }
  }
}

TEST_CASE("power term of a 1D ramp") {
  const auto spec = GridSpec({4}, {1.0}, {0, 1}, {1.0, 2.0});
  const ScalarField u({4}, {1.0}, {1.0, 2.0, 3.0, 4.0});
  // differences 1, 1, 1 and the ghost jump 0 - 4
  CHECK(power_term(u, spec, 1) == doctest::Approx(0.5 * (1 + 1 + 1 + 16)));
}

TEST_CASE("homogeneity") {
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const auto spec = testing::random_spec(rng);
    const auto u = testing::random_field(spec, rng);
    const double c = testing::uniform(rng, -3.0, 3.0);
    ScalarField cu = u;
    for (std::size_t i = 0; i < cu.size(); ++i) cu[i] *= c;
    CHECK(tv_block1(cu, spec) == doctest::Approx(std::abs(c) * tv_block1(u, spec)).epsilon(1e-12));
    CHECK(boundary_term(cu, spec) == doctest::Approx(std::abs(c) * boundary_term(u, spec)).epsilon(1e-12));
    for (std::size_t b = 1; b < spec.block_count(); ++b) {
      const double p = spec.exponent(b);
      CHECK(power_term(cu, spec, b) == doctest::Approx(std::pow(std::abs(c), p) * power_term(u, spec, b)).epsilon(1e-12));
    }
  }
}

TEST_CASE("boundary term") {
  const auto spec = grid4(BoundaryMode::dirichlet_penalized);
  CHECK(boundary_term(ScalarField(spec, 1.0), spec) == doctest::Approx(8.0));
  CHECK(boundary_term(ScalarField(spec, 0.0), spec) == 0.0);
  Rng rng(1);
  const auto neumann = grid4(BoundaryMode::neumann_block1);
  CHECK(boundary_term(testing::random_field(neumann, rng), neumann) == 0.0);
}

TEST_CASE("breakdown sums and matches its pieces") {
  Rng rng(77);
  for (int trial = 0; trial < 20; ++trial) {
    const auto spec = testing::random_spec(rng);
    const auto u = testing::random_field(spec, rng);
    const auto f = testing::random_field(spec, rng);
    const auto e = eval_F(u, spec);
    double sum = e.tv_block1 + e.boundary_term;
    for (double p : e.power_terms) sum += p;
    CHECK(e.total == doctest::Approx(sum).epsilon(1e-14));
    CHECK(e.source_term == 0.0);
    CHECK(e.tv_block1 == doctest::Approx(tv_by_hand(u, spec, spec.tv_norm())).epsilon(1e-13));
    CHECK(e.boundary_term == doctest::Approx(boundary_term(u, spec)).epsilon(1e-14));
    REQUIRE(e.power_terms.size() == spec.block_count() - 1);
    for (std::size_t b = 1; b < spec.block_count(); ++b) CHECK(e.power_terms[b - 1] == power_term(u, spec, b));

    double inner = 0.0;
    for (std::size_t c = 0; c < u.size(); ++c) inner += spec.cell_volume() * f[c] * u[c];
    const auto j = eval_J(u, f, spec);
    CHECK(j.source_term == doctest::Approx(-inner).epsilon(1e-13));
    CHECK(j.total == doctest::Approx(e.total - inner).epsilon(1e-13));
  }
}

TEST_CASE("convexity along segments") {
  Rng rng(90);
  for (int trial = 0; trial < 50; ++trial) {
    const auto spec = testing::random_spec(rng);
    const auto u = testing::random_field(spec, rng, -2.0, 2.0);
    const auto w = testing::random_field(spec, rng, -2.0, 2.0);
    const double t = testing::uniform(rng, 0.0, 1.0);
    ScalarField m(spec);
    for (std::size_t c = 0; c < m.size(); ++c) m[c] = t * u[c] + (1 - t) * w[c];
    const double fu = eval_F(u, spec).total, fw = eval_F(w, spec).total;
    CHECK(eval_F(m, spec).total <= t * fu + (1 - t) * fw + 1e-10 * (1 + fu + fw));
  }
}

TEST_CASE("co-area for binary fields") {
  Rng rng(6);
  const auto spec = GridSpec({4, 4, 3}, {1.0, 0.5, 1.0}, {2, 1}, {1.0, 2.0});
  for (int trial = 0; trial < 10; ++trial) {
    ScalarField u(spec);
    for (std::size_t c = 0; c < u.size(); ++c) u[c] = (rng() & 1U) ? 2.5 : -1.0;
    for (auto norm : {TvNorm::euclidean, TvNorm::l1}) {
      const auto r = coarea_check(u, spec, norm);
      CHECK(r.gap <= 1e-12 * (1 + r.lhs));
    }
  }
}

TEST_CASE("co-area is exact for l1 on integer fields") {
  Rng rng(12);
  const auto spec = GridSpec({5, 4, 3}, {1.0, 1.0, 1.0}, {2, 1}, {1.0, 2.0});
  for (int trial = 0; trial < 20; ++trial) {
    ScalarField u(spec);
    for (std::size_t c = 0; c < u.size(); ++c) u[c] = static_cast<double>(testing::pick(rng, 0, 6)) - 3.0;
    const auto r = coarea_check(u, spec, TvNorm::l1);
    CHECK(r.lhs == doctest::Approx(tv_block1(u, spec, TvNorm::l1)));
    CHECK(r.gap <= 1e-10 * r.lhs);
  }
}

TEST_CASE("co-area gap for the euclidean norm with two block-0 axes") {
  const auto spec = GridSpec({4, 4, 2}, {1.0, 1.0, 1.0}, {2, 1}, {1.0, 2.0});
  ScalarField u(spec);
  for (std::size_t c = 0; c < u.size(); ++c) {
    // Along axis 1 levels are crossed one at a time, along axis 0 two at a
    // time, so the per-level jumps do not line up as they do for i + j.
    u[c] = static_cast<double>(2 * spec.coordinate(c, 0) + spec.coordinate(c, 1));
  }
  const auto r = coarea_check(u, spec, TvNorm::euclidean);
  CHECK(r.gap > 1e-3);
  CHECK(r.rhs > r.lhs);
}

TEST_CASE("Poincare inequality on random fields") {
  Rng rng(19);
  for (int trial = 0; trial < 50; ++trial) {
    const auto spec = testing::random_spec(rng);
    const auto u = testing::random_field(spec, rng, -5.0, 5.0);
    const auto s = poincare_sides(u, spec);
    CHECK(s.lhs <= s.rhs * (1 + 1e-12));
  }
}

TEST_CASE("TV is continuous under entrywise convergence") {
  Rng rng(23);
  const auto spec = GridSpec({5, 5}, {1.0, 1.0}, {1, 1}, {1.0, 2.0});
  const auto u = testing::random_field(spec, rng);
  const auto noise = testing::random_field(spec, rng);
  const double base = tv_block1(u, spec);
  double prev = std::numeric_limits<double>::infinity();
  for (double eps = 1e-1; eps > 1e-9; eps *= 0.1) {
    ScalarField un = u;
    for (std::size_t c = 0; c < un.size(); ++c) un[c] += eps * noise[c];
    const double diff = std::abs(tv_block1(un, spec) - base);
    CHECK(diff <= 2.0 * eps * 2.0 * static_cast<double>(spec.cell_count()));
    CHECK(diff <= prev + 1e-15);
    prev = diff;
  }
}

}  // TEST_SUITE
