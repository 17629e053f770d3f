#include "anisoflow/certificates.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "anisoflow/energy.hpp"
#include "anisoflow/error.hpp"

namespace anisoflow {

std::string to_string(CertificateMode mode) {
  return mode == CertificateMode::elliptic ? "elliptic" : "parabolic";
}

double Certificate::total_excess() const {
  double acc = pairing_residual + boundary_sign_excess;
  for (double e : constitutive_excess) acc += e;
  return acc;
}

namespace {

double euclid(const BlockVectorField& v, std::span<const std::size_t> axes, std::size_t c) {
  double acc = 0.0;
  for (std::size_t a : axes) acc += v.component(a)[c] * v.component(a)[c];
  return std::sqrt(acc);
}

double dot(const BlockVectorField& x, const BlockVectorField& y, std::span<const std::size_t> axes,
           std::size_t c) {
  double acc = 0.0;
  for (std::size_t a : axes) acc += x.component(a)[c] * y.component(a)[c];
  return acc;
}

}  // namespace

std::vector<double> pairing_measure(const BlockVectorField& z, const ScalarField& u,
                                    const GridSpec& spec) {
  require_conforming(z, spec, "pairing_measure");
  const BlockVectorField du = grad_block(u, spec, 0);
  std::vector<double> out(spec.cell_count());
  const auto axes = spec.block_axes(0);
  for (std::size_t c = 0; c < out.size(); ++c) out[c] = spec.cell_volume() * dot(z, du, axes, c);
  return out;
}

std::vector<double> tv_density(const ScalarField& u, const GridSpec& spec) {
  const BlockVectorField du = grad_block(u, spec, 0);
  std::vector<double> out(spec.cell_count());
  const auto axes = spec.block_axes(0);
  for (std::size_t c = 0; c < out.size(); ++c) {
    double mag = 0.0;
    if (spec.tv_norm() == TvNorm::l1) {
      for (std::size_t a : axes) mag += std::abs(du.component(a)[c]);
    } else {
      mag = euclid(du, axes, c);
    }
    out[c] = spec.cell_volume() * mag;
  }
  return out;
}

std::vector<double> z1_dual_norms(const BlockVectorField& z, const GridSpec& spec) {
  require_conforming(z, spec, "z1_dual_norms");
  std::vector<double> out(spec.cell_count(), 0.0);
  const auto axes = spec.block_axes(0);
  for (std::size_t c = 0; c < out.size(); ++c) {
    if (spec.tv_norm() == TvNorm::l1) {
      for (std::size_t a : axes) out[c] = std::max(out[c], std::abs(z.component(a)[c]));
    } else {
      out[c] = euclid(z, axes, c);
    }
  }
  return out;
}

BoundaryField weak_normal_trace(const BlockVectorField& z, const GridSpec& spec) {
  return normal_trace(z, spec);
}

GaussGreen gauss_green(const ScalarField& u, const BlockVectorField& z, const GridSpec& spec,
                       const BoundaryField* trace) {
  require_conforming(u, spec, "gauss_green");
  require_conforming(z, spec, "gauss_green");
  const BoundaryField t = trace ? *trace : normal_trace(z, spec);
  require_conforming(t, spec, "gauss_green");

  GaussGreen out;
  const double vol = spec.cell_volume();
  const ScalarField div = div_with_trace(z, t, spec);
  const BlockVectorField du = grad(u, spec);
  out.lhs = cell_inner(u, div, spec) + vector_inner(du, z, spec);
  out.rhs = face_inner(boundary_restriction(u, spec), t, spec);
  out.residual = std::abs(out.lhs - out.rhs);

  double scale = 0.0;
  for (std::size_t c = 0; c < spec.cell_count(); ++c) {
    double stencil = 0.0;
    for (std::size_t a = 0; a < spec.ndim(); ++a) {
      const auto za = z.component(a);
      if (spec.coordinate(c, a) > 0) stencil += std::abs(za[c - spec.stride(a)]) / spec.h(a);
      stencil += std::abs(za[c]) / spec.h(a);
      scale += vol * std::abs(du.component(a)[c] * za[c]);
    }
    scale += vol * std::abs(u[c]) * stencil;
  }
  const auto& faces = spec.faces();
  for (std::size_t f = 0; f < faces.size(); ++f) {
    scale += 2.0 * faces[f].weight * std::abs(u[faces[f].cell] * t[f]);
  }
  out.scale = scale;
  return out;
}

Certificate check_weak_solution(const ScalarField& u, const BlockVectorField& z,
                                const ScalarField& rhs, const GridSpec& spec, CertificateMode mode,
                                const BoundaryField* trace, std::optional<double> gap) {
  require_conforming(u, spec, "check_weak_solution");
  require_conforming(z, spec, "check_weak_solution");
  require_conforming(rhs, spec, "check_weak_solution");
  const BoundaryField t = trace ? *trace : normal_trace(z, spec);
  require_conforming(t, spec, "check_weak_solution");

  Certificate cert;
  cert.mode = mode;
  cert.boundary_mode = spec.mode();
  cert.tv_norm = spec.tv_norm();
  cert.gap = gap;

  const double vol = spec.cell_volume();
  for (double v : z1_dual_norms(z, spec)) cert.sup_norm_z1 = std::max(cert.sup_norm_z1, v);
  for (double v : t.values()) cert.trace_sup = std::max(cert.trace_sup, std::abs(v));

  cert.tv_block1 = tv_block1(u, spec);
  for (double v : pairing_measure(z, u, spec)) cert.pairing += v;
  cert.pairing_residual = std::abs(cert.tv_block1 - cert.pairing);

  const BlockVectorField du = grad(u, spec);
  for (std::size_t b = 1; b < spec.block_count(); ++b) {
    const auto axes = spec.block_axes(b);
    const double p = spec.exponent(b);
    const double q = spec.conjugate_exponent(b);
    double norm_acc = 0.0;
    double excess = 0.0;
    for (std::size_t c = 0; c < spec.cell_count(); ++c) {
      const double g = euclid(du, axes, c);
      const double factor = g > 0.0 ? std::pow(g, p - 2.0) : 0.0;
      double diff_sq = 0.0;
      for (std::size_t a : axes) {
        const double d = z.component(a)[c] - factor * du.component(a)[c];
        diff_sq += d * d;
      }
      norm_acc += std::pow(std::sqrt(diff_sq), q);
      excess += std::pow(g, p) / p + std::pow(euclid(z, axes, c), q) / q - dot(z, du, axes, c);
    }
    cert.constitutive_residuals.push_back(std::pow(vol * norm_acc, 1.0 / q));
    cert.constitutive_excess.push_back(vol * excess);
  }

  const ScalarField div = div_with_trace(z, t, spec);
  double div_sq = 0.0;
  for (std::size_t c = 0; c < spec.cell_count(); ++c) {
    const double r = -div[c] - rhs[c];
    div_sq += r * r;
  }
  cert.divergence_residual = std::sqrt(vol * div_sq);

  if (spec.mode() == BoundaryMode::dirichlet_penalized) {
    const auto& faces = spec.faces();
    for (std::size_t f = 0; f < faces.size(); ++f) {
      const double uf = u[faces[f].cell];
      const double s = t[f] * uf + std::abs(uf);
      cert.boundary_sign_residual = std::max(cert.boundary_sign_residual, std::abs(s));
      cert.boundary_sign_excess += faces[f].weight * s;
    }
  }

  cert.gauss_green_residual = gauss_green(u, z, spec, &t).residual;
  return cert;
}

double default_grad_floor(const ScalarField& u, const GridSpec& spec) {
  const BlockVectorField du = grad_block(u, spec, 0);
  const auto axes = spec.block_axes(0);
  double m = 0.0;
  for (std::size_t c = 0; c < spec.cell_count(); ++c) m = std::max(m, euclid(du, axes, c));
  return std::max(1e-10 * m, std::numeric_limits<double>::min());
}

std::vector<std::optional<double>> theta_density(const BlockVectorField& z, const ScalarField& u,
                                                 const GridSpec& spec, double grad_floor) {
  require_conforming(z, spec, "theta_density");
  if (!(grad_floor > 0.0)) throw InvalidInput("theta_density: grad_floor must be > 0");
  const BlockVectorField du = grad_block(u, spec, 0);
  const auto axes = spec.block_axes(0);
  std::vector<std::optional<double>> out(spec.cell_count());
  for (std::size_t c = 0; c < out.size(); ++c) {
    const double g = euclid(du, axes, c);
    if (g > grad_floor) out[c] = dot(z, du, axes, c) / g;
  }
  return out;
}

TruncationReport theta_truncation_invariance(const BlockVectorField& z, const ScalarField& u,
                                             const GridSpec& spec, double a, double b,
                                             double grad_floor) {
  if (!(a < b)) throw InvalidInput("theta_truncation_invariance: need a < b");
  ScalarField clamped = u;
  for (double& v : clamped.values()) v = std::clamp(v, a, b);
  const auto theta_u = theta_density(z, u, spec, grad_floor);
  const auto theta_t = theta_density(z, clamped, spec, grad_floor);
  const auto axes = spec.block_axes(0);

  TruncationReport out;
  for (std::size_t c = 0; c < spec.cell_count(); ++c) {
    bool inside = false;
    bool below = false;
    bool above = false;
    auto classify = [&](double v) {
      if (v < a) {
        below = true;
      } else if (v > b) {
        above = true;
      } else {
        inside = true;
      }
    };
    classify(u[c]);
    for (std::size_t ax : axes) {
      if (!spec.is_last(c, ax)) classify(u[c + spec.stride(ax)]);
    }
    const bool straddles = (inside && (below || above)) || (below && above);
    if (straddles) ++out.straddle_count;
    if (!theta_u[c] || !theta_t[c]) continue;
    ++out.compared_count;
    const double dev = std::abs(*theta_u[c] - *theta_t[c]);
    out.max_deviation = std::max(out.max_deviation, dev);
    if (!straddles) out.max_deviation_unstraddled = std::max(out.max_deviation_unstraddled, dev);
  }
  return out;
}

}  // namespace anisoflow
