#include "anisoflow/oracle.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <string>

#include "anisoflow/energy.hpp"
#include "anisoflow/error.hpp"

namespace anisoflow {

void OracleOptions::validate() const {
  std::vector<std::string> problems;
  if (eps_schedule.empty()) problems.emplace_back("eps_schedule must not be empty");
  for (std::size_t i = 0; i < eps_schedule.size(); ++i) {
    if (!(eps_schedule[i] > 0.0)) problems.emplace_back("eps_schedule entries must be > 0");
    if (i > 0 && !(eps_schedule[i] < eps_schedule[i - 1])) {
      problems.emplace_back("eps_schedule must be strictly decreasing");
    }
  }
  if (!eps_schedule.empty() && eps_schedule.back() > 1e-8) {
    problems.emplace_back("eps_schedule must end at or below 1e-8");
  }
  if (!(grad_tol > 0.0)) problems.emplace_back("grad_tol must be > 0");
  if (max_inner < 1) problems.emplace_back("max_inner must be >= 1");
  if (!problems.empty()) throw InvalidInput(std::move(problems));
}

namespace {

struct Tap {
  std::size_t index;
  double coef;
};

// One nonlinear term weight * psi(g), g_j = sum over taps of coef * u[index].
struct Term {
  bool linear_growth = true;  // sqrt(|g|^2 + eps^2) - eps, else power
  double p = 1.0;
  double weight = 0.0;
  std::vector<std::vector<Tap>> comps;
};

std::vector<Tap> stencil(const GridSpec& spec, std::size_t c, std::size_t axis) {
  const double inv_h = 1.0 / spec.h(axis);
  if (!spec.is_last(c, axis)) return {{c + spec.stride(axis), inv_h}, {c, -inv_h}};
  if (spec.block_of_axis(axis) != 0) return {{c, -inv_h}};
  return {};
}

std::vector<Term> build_terms(const GridSpec& spec) {
  std::vector<Term> terms;
  const double vol = spec.cell_volume();
  if (spec.has_boundary_term()) {
    for (const Face& f : spec.faces()) terms.push_back(Term{true, 1.0, f.weight, {{{f.cell, 1.0}}}});
  }
  for (std::size_t b = 0; b < spec.block_count(); ++b) {
    const auto axes = spec.block_axes(b);
    if (axes.empty()) continue;
    for (std::size_t c = 0; c < spec.cell_count(); ++c) {
      if (b == 0 && spec.tv_norm() == TvNorm::l1) {
        for (std::size_t a : axes) {
          auto taps = stencil(spec, c, a);
          if (!taps.empty()) terms.push_back(Term{true, 1.0, vol, {taps}});
        }
        continue;
      }
      Term t{b == 0, spec.exponent(b), vol, {}};
      for (std::size_t a : axes) {
        auto taps = stencil(spec, c, a);
        if (!taps.empty()) t.comps.push_back(std::move(taps));
      }
      if (!t.comps.empty()) terms.push_back(std::move(t));
    }
  }
  return terms;
}

class Objective {
 public:
  Objective(const GridSpec& spec, const OracleProblem& problem)
      : spec_(spec), problem_(problem), terms_(build_terms(spec)) {}

  std::size_t size() const { return spec_.cell_count(); }

  double value(const Eigen::VectorXd& u, double eps) const {
    double acc = 0.0;
    std::vector<double> g;
    for (const Term& t : terms_) {
      gather(t, u, g);
      acc += t.weight * psi(t, norm_sq(g), eps);
    }
    acc += data_value(u);
    return acc;
  }

  // Gradient and (optionally) Hessian.
  void derivatives(const Eigen::VectorXd& u, double eps, Eigen::VectorXd& grad,
                   Eigen::MatrixXd* hess) const {
    const std::size_t n = size();
    grad.setZero(static_cast<Eigen::Index>(n));
    if (hess) hess->setZero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    std::vector<double> g;
    for (const Term& t : terms_) {
      gather(t, u, g);
      const double sq = norm_sq(g);
      double d1 = 0.0;  // grad_g psi = d1 * g
      double d2 = 0.0;  // hess_g psi = d1 * I + d2 * g g^T
      if (t.linear_growth) {
        const double s = std::sqrt(sq + eps * eps);
        d1 = 1.0 / s;
        d2 = -1.0 / (s * s * s);
      } else if (t.p < 2.0) {
        const double s2 = sq + eps * eps;
        d1 = std::pow(s2, 0.5 * t.p - 1.0);
        d2 = (t.p - 2.0) * std::pow(s2, 0.5 * t.p - 2.0);
      } else if (sq > 0.0) {
        d1 = std::pow(sq, 0.5 * t.p - 1.0);
        d2 = (t.p - 2.0) * std::pow(sq, 0.5 * t.p - 2.0);
      } else {
        d1 = t.p == 2.0 ? 1.0 : 0.0;
      }
      for (std::size_t j = 0; j < t.comps.size(); ++j) {
        for (const Tap& tap : t.comps[j]) {
          grad[static_cast<Eigen::Index>(tap.index)] += t.weight * d1 * g[j] * tap.coef;
        }
      }
      if (!hess) continue;
      for (std::size_t j = 0; j < t.comps.size(); ++j) {
        for (std::size_t k = 0; k < t.comps.size(); ++k) {
          const double hjk = (j == k ? d1 : 0.0) + d2 * g[j] * g[k];
          if (hjk == 0.0) continue;
          for (const Tap& a : t.comps[j]) {
            for (const Tap& b : t.comps[k]) {
              (*hess)(static_cast<Eigen::Index>(a.index), static_cast<Eigen::Index>(b.index)) +=
                  t.weight * hjk * a.coef * b.coef;
            }
          }
        }
      }
    }
    const double vol = spec_.cell_volume();
    for (std::size_t c = 0; c < n; ++c) {
      const auto i = static_cast<Eigen::Index>(c);
      if (problem_.kind == ProblemKind::elliptic) {
        grad[i] -= vol * problem_.data[c];
      } else {
        grad[i] += vol * (u[i] - problem_.data[c]) / problem_.tau_time;
        if (hess) (*hess)(i, i) += vol / problem_.tau_time;
      }
    }
  }

 private:
  static void gather(const Term& t, const Eigen::VectorXd& u, std::vector<double>& g) {
    g.assign(t.comps.size(), 0.0);
    for (std::size_t j = 0; j < t.comps.size(); ++j) {
      for (const Tap& tap : t.comps[j]) g[j] += tap.coef * u[static_cast<Eigen::Index>(tap.index)];
    }
  }

  static double norm_sq(const std::vector<double>& g) {
    double acc = 0.0;
    for (double x : g) acc += x * x;
    return acc;
  }

  static double psi(const Term& t, double sq, double eps) {
    if (t.linear_growth) return std::sqrt(sq + eps * eps) - eps;
    if (t.p < 2.0) return (std::pow(sq + eps * eps, 0.5 * t.p) - std::pow(eps, t.p)) / t.p;
    return std::pow(sq, 0.5 * t.p) / t.p;
  }

  double data_value(const Eigen::VectorXd& u) const {
    double acc = 0.0;
    for (std::size_t c = 0; c < size(); ++c) {
      const double uc = u[static_cast<Eigen::Index>(c)];
      if (problem_.kind == ProblemKind::elliptic) {
        acc -= problem_.data[c] * uc;
      } else {
        const double d = uc - problem_.data[c];
        acc += d * d / (2.0 * problem_.tau_time);
      }
    }
    return acc * spec_.cell_volume();
  }

  const GridSpec& spec_;
  const OracleProblem& problem_;
  std::vector<Term> terms_;
};

Eigen::VectorXd to_eigen(const ScalarField& u) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(u.size()));
  for (std::size_t c = 0; c < u.size(); ++c) out[static_cast<Eigen::Index>(c)] = u[c];
  return out;
}

ScalarField from_eigen(const Eigen::VectorXd& v, const GridSpec& spec) {
  ScalarField out(spec);
  for (std::size_t c = 0; c < out.size(); ++c) out[c] = v[static_cast<Eigen::Index>(c)];
  return out;
}

void check_problem(const OracleProblem& problem, const GridSpec& spec) {
  require_conforming(problem.data, spec, "oracle");
  if (problem.kind == ProblemKind::resolvent && !(problem.tau_time > 0.0)) {
    throw InvalidInput("oracle: tau_time must be > 0");
  }
}

}  // namespace

double smoothed_energy(const ScalarField& u, const GridSpec& spec, double eps,
                       const OracleProblem& problem) {
  require_conforming(u, spec, "smoothed_energy");
  check_problem(problem, spec);
  if (!(eps > 0.0)) throw InvalidInput("smoothed_energy: eps must be > 0");
  return Objective(spec, problem).value(to_eigen(u), eps);
}

std::vector<double> smoothed_gradient(const ScalarField& u, const GridSpec& spec, double eps,
                                      const OracleProblem& problem) {
  require_conforming(u, spec, "smoothed_gradient");
  check_problem(problem, spec);
  if (!(eps > 0.0)) throw InvalidInput("smoothed_gradient: eps must be > 0");
  Eigen::VectorXd grad;
  Objective(spec, problem).derivatives(to_eigen(u), eps, grad, nullptr);
  return std::vector<double>(grad.data(), grad.data() + grad.size());
}

double exact_objective(const ScalarField& u, const GridSpec& spec, const OracleProblem& problem) {
  check_problem(problem, spec);
  if (problem.kind == ProblemKind::elliptic) return eval_J(u, problem.data, spec).total;
  double acc = 0.0;
  for (std::size_t c = 0; c < u.size(); ++c) {
    const double d = u[c] - problem.data[c];
    acc += d * d;
  }
  return eval_F(u, spec).total + spec.cell_volume() * acc / (2.0 * problem.tau_time);
}

OracleResult oracle_minimize(const OracleProblem& problem, const GridSpec& spec,
                             const OracleOptions& opts) {
  opts.validate();
  check_problem(problem, spec);
  if (spec.cell_count() > opts.max_cells) {
    throw InvalidInput("oracle: grid has " + std::to_string(spec.cell_count()) +
                       " cells, limit is " + std::to_string(opts.max_cells));
  }
  const Objective obj(spec, problem);
  const auto n = static_cast<Eigen::Index>(spec.cell_count());
  Eigen::VectorXd u = problem.kind == ProblemKind::resolvent ? to_eigen(problem.data)
                                                             : Eigen::VectorXd::Zero(n);
  Eigen::VectorXd grad(n);
  Eigen::MatrixXd hess(n, n);
  Eigen::VectorXd step(n);
  OracleResult result;

  for (std::size_t stage = 0; stage < opts.eps_schedule.size(); ++stage) {
    const double eps = opts.eps_schedule[stage];
    OracleStage info{eps, 0, obj.value(u, eps), 0.0};
    bool done = false;
    for (int it = 0; it < opts.max_inner && !done; ++it) {
      info.iterations = it + 1;
      obj.derivatives(u, eps, grad, &hess);
      double shift = 0.0;
      const double diag_scale = 1.0 + hess.diagonal().cwiseAbs().maxCoeff();
      for (int attempt = 0; attempt < 20; ++attempt) {
        Eigen::MatrixXd m = hess;
        if (shift > 0.0) m.diagonal().array() += shift;
        Eigen::LDLT<Eigen::MatrixXd> ldlt(m);
        if (ldlt.info() == Eigen::Success) {
          step = ldlt.solve(-grad);
          if (step.allFinite() && grad.dot(step) < 0.0) break;
        }
        shift = shift == 0.0 ? 1e-12 * diag_scale : shift * 100.0;
        step = -grad;
      }
      const double decrement = -grad.dot(step);
      info.decrement = decrement;
      if (!(decrement > 0.0) || 0.5 * decrement <= opts.grad_tol * (1.0 + std::abs(info.smoothed_value))) {
        done = true;
        break;
      }
      double t = 1.0;
      bool accepted = false;
      for (int ls = 0; ls < 60; ++ls) {
        const Eigen::VectorXd trial = u + t * step;
        const double val = obj.value(trial, eps);
        if (val <= info.smoothed_value - 1e-4 * t * decrement) {
          u = trial;
          info.smoothed_value = val;
          accepted = true;
          break;
        }
        t *= 0.5;
      }
      // No representable decrease left: the stage is at roundoff level.
      if (!accepted) done = true;
    }
    result.stages.push_back(info);
    if (!done) {
      throw NumericalFailure("oracle stage " + std::to_string(stage) + " (eps " +
                                 std::to_string(eps) + ") did not converge",
                             info.decrement);
    }
  }
  result.u_ref = from_eigen(u, spec);
  result.value_ref = exact_objective(result.u_ref, spec, problem);
  return result;
}

}  // namespace anisoflow
