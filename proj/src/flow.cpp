#include "anisoflow/flow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "anisoflow/energy.hpp"
#include "anisoflow/error.hpp"

namespace anisoflow {

Trajectory evolve(const ScalarField& u0, const GridSpec& spec, double tau_time, int n_steps,
                  const FlowOptions& opts) {
  require_conforming(u0, spec, "evolve");
  std::vector<std::string> problems;
  if (!(tau_time > 0.0 && std::isfinite(tau_time))) problems.emplace_back("tau_time must be > 0");
  if (n_steps < 1) problems.emplace_back("steps must be >= 1");
  if (opts.stride < 1) problems.emplace_back("stride must be >= 1");
  if (!problems.empty()) throw InvalidInput(std::move(problems));

  Trajectory traj;
  traj.tau_time = tau_time;
  ScalarField current = u0;
  double energy = eval_F(current, spec).total;
  traj.times.push_back(0.0);
  traj.states.push_back(current);
  traj.energies.push_back(energy);

  for (int n = 1; n <= n_steps; ++n) {
    SolveResult res;
    try {
      res = solve_resolvent(current, tau_time, spec, opts.solve);
    } catch (const NonConvergence& e) {
      throw NonConvergence("step " + std::to_string(n) + ": " + e.what(), e.report());
    }
    ScalarField v(spec);
    double moved = 0.0;
    for (std::size_t c = 0; c < v.size(); ++c) {
      const double d = res.u[c] - current[c];
      v[c] = -d / tau_time;
      moved += d * d;
    }

    FlowStep step;
    step.index = n;
    step.time = n * tau_time;
    step.energy_before = energy;
    energy = eval_F(res.u, spec).total;
    step.energy_after = energy;
    step.movement = spec.cell_volume() * moved / (2.0 * tau_time);
    step.gap = res.report.final_gap;
    step.scale = res.report.scale;
    step.dissipation_excess = step.energy_after + step.movement - step.energy_before - step.gap;
    step.certificate = check_weak_solution(res.u, res.z, v, spec, CertificateMode::parabolic,
                                           &res.trace, res.report.final_gap);
    step.report = std::move(res.report);
    traj.steps.push_back(std::move(step));

    current = std::move(res.u);
    if (n % static_cast<int>(opts.stride) == 0 || n == n_steps) {
      traj.times.push_back(n * tau_time);
      traj.states.push_back(current);
      traj.energies.push_back(energy);
    }
    if (n == n_steps) {
      traj.last_v = std::move(v);
      traj.last_z = std::move(res.z);
      traj.last_trace = std::move(res.trace);
    }
  }
  traj.final_state = std::move(current);
  return traj;
}

double positive_part_norm(std::span<const double> x, double r, const GridSpec& spec) {
  if (!(r >= 1.0)) throw InvalidInput("norm order must be >= 1");
  if (std::isinf(r)) {
    double m = 0.0;
    for (double v : x) m = std::max(m, v);
    return m;
  }
  double acc = 0.0;
  for (double v : x) {
    if (v > 0.0) acc += std::pow(v, r);
  }
  return std::pow(spec.cell_volume() * acc, 1.0 / r);
}

ComparisonResult comparison_from(const Trajectory& t1, const Trajectory& t2, const GridSpec& spec,
                                 double r) {
  if (t1.times != t2.times) throw InvalidInput("comparison: trajectories have different times");
  ComparisonResult out;
  std::vector<double> diff(spec.cell_count());
  for (std::size_t k = 0; k < t1.states.size(); ++k) {
    for (std::size_t c = 0; c < diff.size(); ++c) diff[c] = t1.states[k][c] - t2.states[k][c];
    out.norms.push_back(positive_part_norm(diff, r, spec));
  }
  out.initial = out.norms.front();
  for (double v : out.norms) out.max_violation = std::max(out.max_violation, v - out.initial);
  for (const auto& s : t1.steps) out.gap_slack += s.gap;
  for (const auto& s : t2.steps) out.gap_slack += s.gap;
  return out;
}

ComparisonResult comparison_test(const ScalarField& u10, const ScalarField& u20,
                                 const GridSpec& spec, double tau_time, int n_steps, double r,
                                 const FlowOptions& opts) {
  require_conforming(u10, spec, "comparison_test");
  require_conforming(u20, spec, "comparison_test");
  const Trajectory t1 = evolve(u10, spec, tau_time, n_steps, opts);
  const Trajectory t2 = evolve(u20, spec, tau_time, n_steps, opts);
  return comparison_from(t1, t2, spec, r);
}

double truncation(double s, double a, double b) {
  const double shift = a > 0.0 ? a : b;
  return std::clamp(s, a, b) - shift;
}

double accretivity_probe(const ScalarField& u1, const ScalarField& v1, const ScalarField& u2,
                         const ScalarField& v2, const GridSpec& spec, double a, double b) {
  for (const ScalarField* f : {&u1, &v1, &u2, &v2}) require_conforming(*f, spec, "accretivity_probe");
  if (!(a < b)) throw InvalidInput("accretivity_probe: truncation needs a < b");
  if (a <= 0.0 && b >= 0.0) {
    throw InvalidInput("accretivity_probe: truncation interval must not contain 0");
  }
  double acc = 0.0;
  for (std::size_t c = 0; c < spec.cell_count(); ++c) {
    acc += truncation(u1[c] - u2[c], a, b) * (v1[c] - v2[c]);
  }
  return acc * spec.cell_volume();
}

}  // namespace anisoflow
