#include <cmath>

#include "anisoflow/certificates.hpp"
#include "anisoflow/energy.hpp"
#include "anisoflow/error.hpp"
#include "anisoflow/pd_solver.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace anisoflow;
using testing::Rng;

namespace {

GridSpec grid8() { return GridSpec({8, 8}, {1.0, 1.0}, {1, 1}, {1.0, 2.0}); }

// z_1 = grad_1 u / |grad_1 u| where the gradient is nonzero, other blocks 0.
BlockVectorField aligned(const ScalarField& u, const GridSpec& spec) {
  const auto g = grad_block(u, spec, 0);
  BlockVectorField z(spec);
  for (std::size_t c = 0; c < spec.cell_count(); ++c) {
    double sq = 0.0;
    for (std::size_t a : spec.block_axes(0)) sq += g.component(a)[c] * g.component(a)[c];
    if (sq == 0.0) continue;
    for (std::size_t a : spec.block_axes(0)) z.component(a)[c] = g.component(a)[c] / std::sqrt(sq);
  }
  return z;
}

}  // namespace

TEST_SUITE("certificates") {

TEST_CASE("zero elliptic solve certifies") {
  const auto spec = grid8();
  const ScalarField f(spec);
  const auto res = solve_elliptic(f, spec);
  const auto cert = check_weak_solution(res.u, res.z, f, spec, CertificateMode::elliptic, &res.trace,
                                        res.report.final_gap);
  CHECK(cert.pairing_residual <= 1e-8);
  CHECK(cert.divergence_residual <= 1e-8);
  CHECK(cert.boundary_sign_residual <= 1e-8);
  CHECK(cert.sup_norm_z1 <= 1.0);
  REQUIRE(cert.gap.has_value());
}

TEST_CASE("converged solve: excess equals the E-part of the gap") {
  const auto spec = grid8();
  const ScalarField f(spec, 1.0);
  const auto res = solve_elliptic(f, spec);
  const auto cert = check_weak_solution(res.u, res.z, f, spec, CertificateMode::elliptic, &res.trace,
                                        res.report.final_gap);
  CHECK(cert.sup_norm_z1 <= 1 + 1e-9);
  CHECK(cert.trace_sup <= 1 + 1e-9);
  CHECK(cert.total_excess() <= res.report.final_gap + 1e-9 * res.report.scale);
  CHECK(cert.total_excess() == doctest::Approx(res.report.bracket_e).epsilon(1e-6));
  CHECK(cert.gauss_green_residual <= 1e-11 * (1 + cert.tv_block1));
}

TEST_CASE("corrupted z is reported") {
  const auto spec = grid8();
  const ScalarField f(spec, 1.0);
  const auto res = solve_elliptic(f, spec);
  auto z = res.z;
  for (std::size_t a : spec.block_axes(0)) {
    for (auto& v : z.component(a)) v *= 2.0;
  }
  const auto good = check_weak_solution(res.u, res.z, f, spec, CertificateMode::elliptic, &res.trace);
  const auto cert = check_weak_solution(res.u, z, f, spec, CertificateMode::elliptic, &res.trace);
  CHECK(cert.sup_norm_z1 == doctest::Approx(2.0 * good.sup_norm_z1).epsilon(1e-12));
  CHECK(cert.pairing_residual > 0.0);
  CHECK(cert.divergence_residual > 1e-3);
  CHECK_FALSE(cert.gap.has_value());
}

TEST_CASE("pairing of aligned and orthogonal fields") {
  const auto spec = GridSpec({5, 4, 3}, {1.0, 0.5, 1.0}, {2, 1}, {1.0, 2.0});
  Rng rng(3);
  const auto u = testing::random_field(spec, rng);
  const auto z = aligned(u, spec);
  const auto pm = pairing_measure(z, u, spec);
  const auto tv = tv_density(u, spec);
  for (std::size_t c = 0; c < pm.size(); ++c) CHECK(pm[c] == doctest::Approx(tv[c]).epsilon(1e-13));

  // rotate the block-0 part by 90 degrees
  BlockVectorField perp(spec);
  const auto g = grad_block(u, spec, 0);
  for (std::size_t c = 0; c < spec.cell_count(); ++c) {
    perp.component(0)[c] = -g.component(1)[c];
    perp.component(1)[c] = g.component(0)[c];
  }
  for (double v : pairing_measure(perp, u, spec)) CHECK(std::abs(v) <= 1e-14);
}

TEST_CASE("subset pairing bound") {
  Rng rng(99);
  for (int trial = 0; trial < 10; ++trial) {
    const auto spec = testing::random_spec(rng);
    const auto u = testing::random_field(spec, rng);
    const auto z = testing::random_vector(spec, rng);
    const auto dual = z1_dual_norms(z, spec);
    const double sup = *std::max_element(dual.begin(), dual.end());
    const auto pm = pairing_measure(z, u, spec);
    const auto tv = tv_density(u, spec);
    for (int s = 0; s < 100; ++s) {
      double lhs = 0.0, mass = 0.0;
      for (std::size_t c = 0; c < pm.size(); ++c) {
        if (rng() & 1U) {
          lhs += pm[c];
          mass += tv[c];
        }
      }
      CHECK(std::abs(lhs) <= sup * mass + 1e-12);
    }
  }
}

TEST_CASE("normal trace bounds") {
  Rng rng(7);
  const auto spec = GridSpec({4, 4}, {1.0, 1.0}, {1, 1}, {1.0, 2.0});
  const auto zero = weak_normal_trace(BlockVectorField(spec), spec);
  for (double v : zero.values()) CHECK(v == 0.0);
  for (int trial = 0; trial < 30; ++trial) {
    const auto s = testing::random_spec(rng);
    const auto z = testing::random_vector(s, rng, -3.0, 3.0);
    const auto dual = z1_dual_norms(z, s);
    const double sup = dual.empty() ? 0.0 : *std::max_element(dual.begin(), dual.end());
    const auto t = weak_normal_trace(z, s);
    CHECK(testing::max_abs(t.values()) <= sup + 1e-12);
  }
}

TEST_CASE("Gauss-Green residual") {
  Rng rng(5);
  const auto spec = GridSpec({3, 3}, {1.0, 1.0}, {1, 1}, {1.0, 2.0});
  for (int trial = 0; trial < 20; ++trial) {
    const auto u = testing::random_field(spec, rng);
    const auto z = testing::random_vector(spec, rng);
    const auto gg = gauss_green(u, z, spec);
    CHECK(gg.residual <= 1e-12 * gg.scale);
  }
  const auto u = testing::random_field(spec, rng);
  const auto zero = gauss_green(u, BlockVectorField(spec), spec);
  CHECK(zero.lhs == 0.0);
  CHECK(zero.rhs == 0.0);

  // u vanishing on the boundary-adjacent cells: no boundary contribution
  ScalarField inner(spec);
  inner[4] = 1.5;
  const auto gi = gauss_green(inner, testing::random_vector(spec, rng), spec);
  CHECK(gi.rhs == 0.0);
  CHECK(std::abs(gi.lhs) <= 1e-14);
}

TEST_CASE("theta density") {
  const auto spec = GridSpec({5, 4, 3}, {1.0, 0.5, 1.0}, {2, 1}, {1.0, 2.0});
  Rng rng(12);
  const auto u = testing::random_field(spec, rng);
  const double floor = default_grad_floor(u, spec);
  for (const auto& t : theta_density(aligned(u, spec), u, spec, floor)) {
    if (t) CHECK(*t == doctest::Approx(1.0).epsilon(1e-13));
  }
  const auto z = testing::random_vector(spec, rng);
  const auto dual = z1_dual_norms(z, spec);
  const auto theta = theta_density(z, u, spec, floor);
  for (std::size_t c = 0; c < theta.size(); ++c) {
    if (theta[c]) CHECK(std::abs(*theta[c]) <= dual[c] + 1e-12);
  }
  CHECK_THROWS_AS(theta_density(z, u, spec, 0.0), InvalidInput);
}

TEST_CASE("theta truncation invariance") {
  const auto spec = GridSpec({6, 5}, {1.0, 1.0}, {1, 1}, {1.0, 2.0});
  Rng rng(14);
  const auto u = testing::random_field(spec, rng, 0.2, 0.8);
  const auto z = testing::random_vector(spec, rng);
  const double floor = default_grad_floor(u, spec);

  const auto inside = theta_truncation_invariance(z, u, spec, 0.0, 1.0, floor);
  CHECK(inside.max_deviation == 0.0);
  CHECK(inside.straddle_count == 0);

  ScalarField binary(spec);
  for (std::size_t c = 0; c < binary.size(); ++c) binary[c] = (rng() & 1U) ? 0.7 : 0.3;
  CHECK(theta_truncation_invariance(z, binary, spec, 0.1, 0.9, floor).max_deviation == 0.0);

  const auto cut = theta_truncation_invariance(z, u, spec, 0.4, 0.6, floor);
  CHECK(cut.straddle_count > 0);
  CHECK(cut.max_deviation_unstraddled <= 1e-10);
  CHECK_THROWS_AS(theta_truncation_invariance(z, u, spec, 0.6, 0.4, floor), InvalidInput);
}

}  // TEST_SUITE
