#include <cmath>

#include "anisoflow/energy.hpp"
#include "anisoflow/error.hpp"
#include "anisoflow/flow.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace anisoflow;
using testing::Rng;

namespace {

GridSpec grid8() { return GridSpec({8, 8}, {1.0, 1.0}, {1, 1}, {1.0, 2.0}); }

}  // namespace

TEST_SUITE("flow") {

TEST_CASE("zero is an equilibrium") {
  const auto spec = grid8();
  const auto traj = evolve(ScalarField(spec), spec, 0.1, 3);
  REQUIRE(traj.states.size() == 4);
  for (const auto& s : traj.states) CHECK(testing::max_abs(s.values()) == 0.0);
  CHECK(traj.times.front() == 0.0);
  CHECK(traj.times.back() == doctest::Approx(0.3));
}

TEST_CASE("two steps equal one step twice") {
  const auto spec = grid8();
  Rng rng(17);
  const auto u0 = testing::random_field(spec, rng);
  const auto two = evolve(u0, spec, 0.1, 2);
  const auto first = evolve(u0, spec, 0.1, 1);
  const auto second = evolve(first.final_state, spec, 0.1, 1);
  CHECK(two.states[1] == first.final_state);
  CHECK(two.final_state == second.final_state);
  CHECK(two.last_z == second.last_z);
}

TEST_CASE("energy dissipates and the L2 norm decays") {
  const auto spec = GridSpec({8, 6}, {1.0, 1.0}, {1, 1}, {1.0, 3.0});
  Rng rng(5);
  const auto u0 = testing::random_field(spec, rng, -2.0, 2.0);
  const auto traj = evolve(u0, spec, 0.2, 8);
  REQUIRE(traj.steps.size() == 8);
  double slack = 0.0;
  double prev = cell_norm(u0, spec);
  for (std::size_t n = 0; n < traj.steps.size(); ++n) {
    const auto& s = traj.steps[n];
    CHECK(s.index == static_cast<int>(n) + 1);
    CHECK(s.dissipation_excess <= 1e-12 * s.scale);
    CHECK(s.energy_after == doctest::Approx(eval_F(traj.states[n + 1], spec).total).epsilon(1e-12));
    CHECK(s.certificate.gap.has_value());
    slack += std::sqrt(2 * 0.2 * s.gap);
    const double norm = cell_norm(traj.states[n + 1], spec);
    CHECK(norm <= prev + slack);
    prev = norm;
  }
  for (std::size_t n = 1; n < traj.energies.size(); ++n) {
    CHECK(traj.energies[n] <= traj.energies[n - 1] + traj.steps[n - 1].gap);
  }
}

TEST_CASE("stride keeps every k-th state and the last") {
  const auto spec = grid8();
  Rng rng(6);
  FlowOptions opts;
  opts.stride = 2;
  const auto traj = evolve(testing::random_field(spec, rng), spec, 0.1, 5, opts);
  CHECK(traj.steps.size() == 5);
  REQUIRE(traj.times.size() == 4);  // 0, 2, 4, 5
  CHECK(traj.times[1] == doctest::Approx(0.2));
  CHECK(traj.times[3] == doctest::Approx(0.5));
  CHECK(traj.states.back() == traj.final_state);
}

TEST_CASE("invalid evolution arguments") {
  const auto spec = grid8();
  CHECK_THROWS_AS(evolve(ScalarField(spec), spec, 0.0, 2), InvalidInput);
  CHECK_THROWS_AS(evolve(ScalarField(spec), spec, 0.1, 0), InvalidInput);
}

TEST_CASE("non-convergence names the step") {
  const auto spec = grid8();
  Rng rng(1);
  FlowOptions opts;
  opts.solve.max_iter = 20;
  try {
    evolve(testing::random_field(spec, rng), spec, 0.1, 3, opts);
    FAIL("expected NonConvergence");
  } catch (const NonConvergence& e) {
    CHECK(std::string(e.what()).find("step 1") != std::string::npos);
  }
}

TEST_CASE("comparison principle on an ordered pair") {
  const auto spec = grid8();
  Rng rng(44);
  const auto lo = testing::random_field(spec, rng);
  auto hi = lo;
  for (std::size_t c = 0; c < hi.size(); ++c) hi[c] += testing::uniform(rng, 0.0, 1.0);
  for (double r : {1.0, 2.0, std::numeric_limits<double>::infinity()}) {
    const auto same = comparison_test(lo, lo, spec, 0.1, 3, r);
    CHECK(same.max_violation == 0.0);
    const auto res = comparison_test(hi, lo, spec, 0.1, 5, r);
    CHECK(res.max_violation <= 1e-6);
    const auto rev = comparison_test(lo, hi, spec, 0.1, 5, r);
    CHECK(rev.initial == 0.0);
    CHECK(rev.max_violation <= 1e-6);
  }
}

TEST_CASE("positive part norms") {
  const auto spec = GridSpec({2, 2}, {1.0, 2.0}, {1, 1}, {1.0, 2.0});
  const std::vector<double> x{1.0, -3.0, 2.0, 0.0};
  CHECK(positive_part_norm(x, 1.0, spec) == doctest::Approx(2.0 * 3.0));
  CHECK(positive_part_norm(x, 2.0, spec) == doctest::Approx(std::sqrt(2.0 * 5.0)));
  CHECK(positive_part_norm(x, std::numeric_limits<double>::infinity(), spec) == 2.0);
}

TEST_CASE("truncation vanishes near zero") {
  CHECK(truncation(0.0, 0.5, 2.0) == 0.0);
  CHECK(truncation(1.0, 0.5, 2.0) == 0.5);
  CHECK(truncation(5.0, 0.5, 2.0) == 1.5);
  CHECK(truncation(-5.0, 0.5, 2.0) == 0.0);
  CHECK(truncation(0.0, -2.0, -0.5) == 0.0);
  CHECK(truncation(-1.0, -2.0, -0.5) == -0.5);
  CHECK(truncation(-5.0, -2.0, -0.5) == -1.5);
}

TEST_CASE("accretivity probe") {
  const auto spec = grid8();
  Rng rng(8);
  const auto u = testing::random_field(spec, rng);
  const auto v1 = testing::random_field(spec, rng);
  const auto v2 = testing::random_field(spec, rng);
  CHECK(accretivity_probe(u, v1, u, v2, spec, 0.1, 0.5) == 0.0);
  CHECK_THROWS_AS(accretivity_probe(u, v1, u, v2, spec, 0.5, 0.5), InvalidInput);
  CHECK_THROWS_AS(accretivity_probe(u, v1, u, v2, spec, -0.5, 0.5), InvalidInput);

  // operator pairs from two resolvent solves
  const double tau = 0.2;
  const auto g1 = testing::random_field(spec, rng, -2.0, 2.0);
  const auto g2 = testing::random_field(spec, rng, -2.0, 2.0);
  const auto r1 = solve_resolvent(g1, tau, spec);
  const auto r2 = solve_resolvent(g2, tau, spec);
  ScalarField w1(spec), w2(spec);
  const auto d1 = div_with_trace(r1.z, r1.trace, spec);
  const auto d2 = div_with_trace(r2.z, r2.trace, spec);
  for (std::size_t c = 0; c < w1.size(); ++c) {
    w1[c] = -d1[c];
    w2[c] = -d2[c];
  }
  for (auto [a, b] : {std::pair{0.01, 0.3}, std::pair{0.2, 1.0}, std::pair{-1.0, -0.05}}) {
    CHECK(accretivity_probe(r1.u, w1, r2.u, w2, spec, a, b) >= -1e-8);
  }
}

}  // TEST_SUITE
