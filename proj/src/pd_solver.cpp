#include "anisoflow/pd_solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>

#include "anisoflow/parallel.hpp"
#include "anisoflow/prox.hpp"

namespace anisoflow {

std::string to_string(ProblemKind kind) {
  return kind == ProblemKind::elliptic ? "elliptic" : "resolvent";
}

void SolveOptions::validate() const {
  std::vector<std::string> problems;
  if (max_iter < 1) problems.emplace_back("max_iter must be >= 1");
  if (!(gap_tol > 0.0)) problems.emplace_back("gap_tol must be > 0");
  if (residual_check_every < 1) problems.emplace_back("residual_check_every must be >= 1");
  if (!(theta_relax >= 0.0 && theta_relax <= 1.0)) problems.emplace_back("theta_relax must lie in [0, 1]");
  if (opnorm_iters < 10) problems.emplace_back("opnorm_iters must be >= 10");
  if (!(step_ratio > 0.0) || !std::isfinite(step_ratio)) problems.emplace_back("step_ratio must be > 0");
  if (!problems.empty()) throw InvalidInput(std::move(problems));
}

double lp_norm(std::span<const double> v, double q, const GridSpec& spec) {
  if (std::isinf(q)) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
  }
  double acc = 0.0;
  for (double x : v) acc += std::pow(std::abs(x), q);
  return std::pow(acc * spec.cell_volume(), 1.0 / q);
}

double coercivity_radius(const ScalarField& f, const GridSpec& spec) {
  require_conforming(f, spec, "coercivity_radius");
  const std::size_t last = spec.block_count() - 1;
  const double p = spec.exponent(last);
  const double fnorm = lp_norm(f.values(), spec.conjugate_exponent(last), spec);
  if (fnorm == 0.0) return 0.0;
  const double len = spec.domain_length(spec.poincare_axis());
  return std::pow(p * std::pow(len, p) * fnorm, 1.0 / (p - 1.0));
}

namespace {

// A u = (T u, D u); the block-0 trace part only under dirichlet_penalized.
void apply_a(std::span<const double> u, const GridSpec& spec, BlockVectorField& du,
             BoundaryField& tu) {
  for (std::size_t a = 0; a < spec.ndim(); ++a) grad_axis(u, spec, a, du.component(a));
  if (spec.has_boundary_term()) {
    const auto& faces = spec.faces();
    for (std::size_t f = 0; f < faces.size(); ++f) tu[f] = u[faces[f].cell];
  }
}

void apply_a_adjoint(const BlockVectorField& y, const BoundaryField& y0, const GridSpec& spec,
                     std::span<double> out) {
  grad_adjoint_into(y, spec, out);
  if (spec.has_boundary_term()) boundary_adjoint_add(y0, spec, out);
}

double block_norm(const BlockVectorField& v, std::span<const std::size_t> axes, std::size_t c,
                  TvNorm norm) {
  double acc = 0.0;
  if (norm == TvNorm::l1) {
    for (std::size_t a : axes) acc += std::abs(v.component(a)[c]);
    return acc;
  }
  for (std::size_t a : axes) acc += v.component(a)[c] * v.component(a)[c];
  return std::sqrt(acc);
}

double block_dot(const BlockVectorField& x, const BlockVectorField& y,
                 std::span<const std::size_t> axes, std::size_t c) {
  double acc = 0.0;
  for (std::size_t a : axes) acc += x.component(a)[c] * y.component(a)[c];
  return acc;
}

// Fenchel-Young excess E(Au) + E*(y) - <y, Au>, term by term so that each
// contribution is nonnegative up to roundoff.
struct EParts {
  double energy = 0.0;  // E(Au)
  double excess = 0.0;
};

EParts e_parts(const BlockVectorField& du, const BoundaryField& tu, const BlockVectorField& y,
               const BoundaryField& y0, const GridSpec& spec) {
  EParts out;
  const double vol = spec.cell_volume();
  if (spec.has_boundary_term()) {
    const auto& faces = spec.faces();
    for (std::size_t f = 0; f < faces.size(); ++f) {
      const double mag = std::abs(tu[f]);
      out.energy += faces[f].weight * mag;
      out.excess += faces[f].weight * (mag - y0[f] * tu[f]);
    }
  }
  for (std::size_t b = 0; b < spec.block_count(); ++b) {
    const auto axes = spec.block_axes(b);
    if (axes.empty()) continue;
    double energy = 0.0;
    double excess = 0.0;
    if (b == 0) {
      for (std::size_t c = 0; c < spec.cell_count(); ++c) {
        const double mag = block_norm(du, axes, c, spec.tv_norm());
        energy += mag;
        excess += mag - block_dot(du, y, axes, c);
      }
    } else {
      const double p = spec.exponent(b);
      const double q = spec.conjugate_exponent(b);
      for (std::size_t c = 0; c < spec.cell_count(); ++c) {
        const double a = std::pow(block_norm(du, axes, c, TvNorm::euclidean), p) / p;
        const double s = std::pow(block_norm(y, axes, c, TvNorm::euclidean), q) / q;
        energy += a;
        excess += a + s - block_dot(du, y, axes, c);
      }
    }
    out.energy += vol * energy;
    out.excess += vol * excess;
  }
  return out;
}

double weighted_l2(std::span<const double> v, const GridSpec& spec) {
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return std::sqrt(acc * spec.cell_volume());
}

// Adds delta to the last-axis component of y so that A^* y = f exactly:
// D_last^T is lower bidiagonal with a nonzero diagonal, so the correction is
// a running sum along each line of the last axis.
void correct_divergence(BlockVectorField& y, std::span<const double> residual,
                        const GridSpec& spec) {
  const std::size_t axis = spec.poincare_axis();
  const std::size_t n = spec.dim(axis);
  const double h = spec.h(axis);
  auto comp = y.component(axis);
  for (std::size_t line = 0; line < spec.cell_count(); line += n) {
    double delta = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      delta += h * residual[line + j];
      comp[line + j] += delta;
    }
  }
}

struct Evaluation {
  GapBreakdown gap;
  std::vector<double> u;
  BlockVectorField y;  // dual actually certified (may be divergence-corrected)
  BoundaryField y0;
  bool recovered = false;
};

class Problem {
 public:
  Problem(const GridSpec& spec, ProblemKind kind, const ScalarField& data, double tau_time)
      : spec_(spec), kind_(kind), data_(data), tau_time_(tau_time),
        du_(spec), tu_(spec), aty_(spec.cell_count()) {
    if (kind_ == ProblemKind::elliptic) radius_ = coercivity_radius(data_, spec_);
  }

  double radius() const { return radius_; }

  // Certified gap for the pair (u, y). For the resolvent the dual-recovered
  // primal g - tau_time A^* y is tried as well and the better one kept.
  Evaluation evaluate(std::span<const double> u, const BlockVectorField& y, const BoundaryField& y0,
                      bool allow_recovery = true) {
    apply_a_adjoint(y, y0, spec_, aty_);
    if (kind_ == ProblemKind::resolvent) {
      Evaluation best = evaluate_resolvent(u, y, y0);
      if (!allow_recovery) return best;
      std::vector<double> rec(u.size());
      for (std::size_t c = 0; c < rec.size(); ++c) rec[c] = data_[c] - tau_time_ * aty_[c];
      Evaluation alt = evaluate_resolvent(rec, y, y0);
      alt.recovered = true;
      return alt.gap.gap < best.gap.gap ? alt : best;
    }
    return evaluate_elliptic(u, y, y0);
  }

 private:
  Evaluation evaluate_resolvent(std::span<const double> u, const BlockVectorField& y,
                                const BoundaryField& y0) {
    Evaluation out{{}, std::vector<double>(u.begin(), u.end()), y, y0, false};
    apply_a(u, spec_, du_, tu_);
    const EParts e = e_parts(du_, tu_, y, y0, spec_);
    const double vol = spec_.cell_volume();
    double g_value = 0.0;
    double g_excess = 0.0;
    double div_res = 0.0;
    for (std::size_t c = 0; c < u.size(); ++c) {
      const double d = u[c] - data_[c];
      g_value += d * d;
      const double r = d + tau_time_ * aty_[c];
      g_excess += r * r;
      div_res += (r / tau_time_) * (r / tau_time_);
    }
    auto& gap = out.gap;
    gap.primal = e.energy + vol * g_value / (2.0 * tau_time_);
    gap.bracket_e = e.excess;
    gap.bracket_g = vol * g_excess / (2.0 * tau_time_);
    gap.gap = gap.bracket_e + gap.bracket_g;
    gap.dual = gap.primal - gap.gap;
    gap.divergence_residual = std::sqrt(vol * div_res);
    return out;
  }

  Evaluation evaluate_elliptic(std::span<const double> u, const BlockVectorField& y,
                               const BoundaryField& y0) {
    apply_a(u, spec_, du_, tu_);
    const double source = -cell_inner(data_.values(), u, spec_);
    std::vector<double> residual(u.size());
    for (std::size_t c = 0; c < u.size(); ++c) residual[c] = aty_[c] - data_[c];

    // Bound 1: feasible dual obtained by correcting the last-axis component.
    BlockVectorField corrected = y;
    correct_divergence(corrected, residual, spec_);
    const EParts ec = e_parts(du_, tu_, corrected, y0, spec_);
    GapBreakdown feasible;
    feasible.primal = ec.energy + source;
    feasible.bracket_e = ec.excess;
    feasible.bracket_g = 0.0;
    feasible.gap = ec.excess;
    feasible.dual = feasible.primal - feasible.gap;
    feasible.coercivity_radius = radius_;

    // Bound 2: Lagrangian value minus R ||A^* y - f||_{p_k'}.
    const EParts e = e_parts(du_, tu_, y, y0, spec_);
    const std::size_t last = spec_.block_count() - 1;
    const double rnorm = lp_norm(residual, spec_.conjugate_exponent(last), spec_);
    GapBreakdown lagr;
    lagr.primal = e.energy + source;
    lagr.bracket_e = e.excess;
    lagr.bracket_g = cell_inner(residual, u, spec_) + radius_ * rnorm;
    lagr.gap = lagr.bracket_e + lagr.bracket_g;
    lagr.dual = lagr.primal - lagr.gap;
    lagr.coercivity_radius = radius_;
    lagr.divergence_residual = weighted_l2(residual, spec_);

    Evaluation out{{}, std::vector<double>(u.begin(), u.end()), y, y0, false};
    if (feasible.gap <= lagr.gap) {
      apply_a_adjoint(corrected, y0, spec_, aty_);
      for (std::size_t c = 0; c < u.size(); ++c) residual[c] = aty_[c] - data_[c];
      feasible.divergence_residual = weighted_l2(residual, spec_);
      out.gap = feasible;
      out.y = std::move(corrected);
    } else {
      out.gap = lagr;
    }
    return out;
  }

  const GridSpec& spec_;
  ProblemKind kind_;
  const ScalarField& data_;
  double tau_time_;
  double radius_ = 0.0;
  BlockVectorField du_;
  BoundaryField tu_;
  std::vector<double> aty_;
};

void dual_prox(BlockVectorField& y, BoundaryField& y0, double sigma, const GridSpec& spec) {
  if (spec.has_boundary_term()) {
    for (double& v : y0.values()) v = project_interval(v);
  }
  const ProxParams params;
  for (std::size_t b = 0; b < spec.block_count(); ++b) {
    const auto axes = spec.block_axes(b);
    if (axes.empty()) continue;
    if (b == 0 && spec.tv_norm() == TvNorm::l1) {
      for (std::size_t a : axes) project_box(y.component(a));
      continue;
    }
    const double q = spec.conjugate_exponent(b);
    if (axes.size() == 1) {
      auto comp = y.component(axes[0]);
      if (b == 0) {
        for (double& v : comp) v = project_interval(v);
      } else {
        parallel_for(comp.size(), [&](std::size_t begin, std::size_t end) {
          for (std::size_t c = begin; c < end; ++c) comp[c] = prox_power_conj(comp[c], sigma, q, params);
        });
      }
      continue;
    }
    parallel_for(spec.cell_count(), [&](std::size_t begin, std::size_t end) {
      std::vector<double> buf(axes.size());
      for (std::size_t c = begin; c < end; ++c) {
        for (std::size_t j = 0; j < axes.size(); ++j) buf[j] = y.component(axes[j])[c];
        if (b == 0) {
          project_ball(buf);
        } else {
          prox_power_conj_vector(buf, sigma, q, params);
        }
        for (std::size_t j = 0; j < axes.size(); ++j) y.component(axes[j])[c] = buf[j];
      }
    });
  }
}

SolveResult run(const ScalarField& data, double tau_time, const GridSpec& spec, ProblemKind kind,
                const SolveOptions& opts) {
  const auto start = std::chrono::steady_clock::now();
  opts.validate();
  require_conforming(data, spec, kind == ProblemKind::elliptic ? "solve_elliptic" : "solve_resolvent");
  if (!data.all_finite()) throw InvalidInput("input field contains non-finite values");
  if (spec.block_count() < 2) {
    throw InvalidInput("at least one power-growth block is required (zero trace on Omega_1 x dOmega_2)");
  }
  if (kind == ProblemKind::resolvent && !(tau_time > 0.0 && std::isfinite(tau_time))) {
    throw InvalidInput("tau_time must be finite and > 0");
  }

  SolveReport report;
  report.kind = kind;
  report.seed = opts.seed;
  report.theta_relax = opts.theta_relax;
  report.tau_time = kind == ProblemKind::resolvent ? tau_time : 0.0;
  report.opnorm = estimate_opnorm(spec, opts.opnorm_iters, opts.seed);
  report.tau = opts.step_ratio / report.opnorm;
  report.sigma = 1.0 / (opts.step_ratio * report.opnorm);
  const double tau = report.tau;
  const double sigma = report.sigma;
  const double theta = opts.theta_relax;

  Problem problem(spec, kind, data, tau_time);
  report.coercivity_radius = problem.radius();

  const std::size_t n = spec.cell_count();
  std::vector<double> u(n, 0.0);
  if (kind == ProblemKind::resolvent) u.assign(data.values().begin(), data.values().end());
  std::vector<double> ubar = u;
  std::vector<double> u_old(n);
  std::vector<double> aty(n);
  BlockVectorField y(spec);
  BoundaryField y0(spec);
  BlockVectorField du(spec);
  BoundaryField tu(spec);

  Evaluation best;
  bool have_best = false;
  auto check = [&](int iteration) {
    Evaluation ev = problem.evaluate(u, y, y0);
    const GapBreakdown& g = ev.gap;
    report.history.push_back(GapCheck{iteration, g.gap, g.primal, g.dual});
    report.subdiff_violation = std::max({report.subdiff_violation, -g.bracket_e, -g.bracket_g});
    if (!have_best || g.gap < best.gap.gap) {
      best = std::move(ev);
      have_best = true;
    }
    return g.gap <= opts.gap_tol * (1.0 + std::abs(g.primal));
  };

  int iteration = 0;
  bool converged = check(0);
  while (!converged && iteration < opts.max_iter) {
    apply_a(ubar, spec, du, tu);
    {
      auto yv = y.values();
      const auto dv = du.values();
      for (std::size_t i = 0; i < yv.size(); ++i) yv[i] += sigma * dv[i];
      if (spec.has_boundary_term()) {
        for (std::size_t f = 0; f < y0.size(); ++f) y0[f] += sigma * tu[f];
      }
    }
    dual_prox(y, y0, sigma, spec);

    apply_a_adjoint(y, y0, spec, aty);
    u_old = u;
    if (kind == ProblemKind::resolvent) {
      const double denom = tau_time + tau;
      for (std::size_t c = 0; c < n; ++c) {
        u[c] = (tau_time * (u[c] - tau * aty[c]) + tau * data[c]) / denom;
      }
    } else {
      for (std::size_t c = 0; c < n; ++c) u[c] = u[c] - tau * aty[c] + tau * data[c];
    }
    for (std::size_t c = 0; c < n; ++c) ubar[c] = u[c] + theta * (u[c] - u_old[c]);
    ++iteration;

    bool finite = true;
    for (double v : u) finite = finite && std::isfinite(v);
    if (!finite) throw NumericalFailure("primal iterate became non-finite", 0.0);

    if (iteration % opts.residual_check_every == 0 || iteration == opts.max_iter) {
      converged = check(iteration);
    }
  }

  const GapBreakdown& g = best.gap;
  report.iterations = iteration;
  report.converged = converged;
  report.final_gap = g.gap;
  report.primal_value = g.primal;
  report.dual_value = g.dual;
  report.scale = 1.0 + std::abs(g.primal);
  report.bracket_e = g.bracket_e;
  report.bracket_g = g.bracket_g;
  report.divergence_residual = g.divergence_residual;
  report.primal_source = best.recovered ? "dual_recovery" : "iterate";
  report.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  if (!converged) {
    throw NonConvergence(to_string(kind) + " solve did not reach gap tolerance in " +
                             std::to_string(opts.max_iter) + " iterations (gap " +
                             std::to_string(g.gap) + ")",
                         std::move(report));
  }

  SolveResult out;
  out.u = ScalarField(spec.dims(), spec.spacing(), std::move(best.u));
  out.z = best.y;
  out.trace = BoundaryField(spec);
  if (spec.has_boundary_term()) {
    for (std::size_t f = 0; f < out.trace.size(); ++f) out.trace[f] = -best.y0[f];
  }
  out.dual.v0 = out.trace;
  out.dual.v_blocks = best.y;
  for (double& v : out.dual.v_blocks.values()) v = -v;
  out.dual.sigma = sigma;
  out.dual.tau = tau;
  out.dual.theta_relax = theta;
  out.report = std::move(report);
  return out;
}

}  // namespace

double estimate_opnorm(const GridSpec& spec, int iters, std::uint64_t seed) {
  if (iters < 10) throw InvalidInput("estimate_opnorm: iters must be >= 10");
  double cap_sq = 0.0;
  for (std::size_t a = 0; a < spec.ndim(); ++a) cap_sq += 4.0 / (spec.h(a) * spec.h(a));
  if (spec.has_boundary_term()) {
    for (std::size_t a : spec.block_axes(0)) cap_sq += 1.0 / spec.h(a);
  }
  const double cap = std::sqrt(cap_sq);

  const std::size_t n = spec.cell_count();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<double> x(n);
  for (double& v : x) v = dist(rng);
  std::vector<double> next(n);
  BlockVectorField du(spec);
  BoundaryField tu(spec);

  auto normalize = [&](std::vector<double>& v) {
    const double norm = weighted_l2(v, spec);
    if (norm == 0.0) return false;
    for (double& e : v) e /= norm;
    return true;
  };
  if (!normalize(x)) return cap;
  double rayleigh = 0.0;
  for (int it = 0; it < iters; ++it) {
    apply_a(x, spec, du, tu);
    apply_a_adjoint(du, tu, spec, next);
    rayleigh = cell_inner(x, next, spec);  // ||A x||^2 with ||x|| = 1
    x.swap(next);
    if (!normalize(x)) break;
  }
  return std::min(1.01 * std::sqrt(std::max(rayleigh, 0.0)), cap);
}

SolveResult solve_elliptic(const ScalarField& f, const GridSpec& spec, const SolveOptions& opts) {
  return run(f, 0.0, spec, ProblemKind::elliptic, opts);
}

SolveResult solve_resolvent(const ScalarField& g, double tau_time, const GridSpec& spec,
                            const SolveOptions& opts) {
  return run(g, tau_time, spec, ProblemKind::resolvent, opts);
}

GapBreakdown duality_gap(const ScalarField& u, const DualState& dual, const ScalarField& data,
                         const GridSpec& spec, ProblemKind kind, double tau_time) {
  require_conforming(u, spec, "duality_gap");
  require_conforming(data, spec, "duality_gap");
  require_conforming(dual.v_blocks, spec, "duality_gap");
  if (spec.block_count() < 2) throw InvalidInput("duality_gap: a power-growth block is required");
  if (kind == ProblemKind::resolvent && !(tau_time > 0.0)) {
    throw InvalidInput("duality_gap: tau_time must be > 0");
  }
  constexpr double slack = 1e-12;
  BoundaryField y0(spec);
  if (spec.has_boundary_term()) {
    require_conforming(dual.v0, spec, "duality_gap");
    for (std::size_t f = 0; f < y0.size(); ++f) {
      if (std::abs(dual.v0[f]) > 1.0 + slack) {
        throw InvalidState("duality_gap: |v0| exceeds 1 at face " + std::to_string(f));
      }
      y0[f] = -dual.v0[f];
    }
  }
  BlockVectorField y = dual.v_blocks;
  for (double& v : y.values()) v = -v;
  const auto axes = spec.block_axes(0);
  if (!axes.empty()) {
    for (std::size_t c = 0; c < spec.cell_count(); ++c) {
      double bound = 0.0;
      if (spec.tv_norm() == TvNorm::l1) {
        for (std::size_t a : axes) bound = std::max(bound, std::abs(y.component(a)[c]));
      } else {
        bound = block_norm(y, axes, c, TvNorm::euclidean);
      }
      if (bound > 1.0 + slack) {
        throw InvalidState("duality_gap: block-0 dual bound violated at cell " + std::to_string(c));
      }
    }
  }
  Problem problem(spec, kind, data, tau_time);
  return problem.evaluate(u.values(), y, y0, false).gap;
}

}  // namespace anisoflow
