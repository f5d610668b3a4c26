#include "hystkit/inverse.hpp"

#include <numbers>
#include <string>

#include <Eigen/LU>

#include "hystkit/errors.hpp"
#include "hystkit/forward.hpp"
#include "hystkit/newton.hpp"

namespace hystkit {

CoupledObjective::Vector CoupledObjective::pack(const MaterialState& state) {
  Vector x(2 * state.size());
  for (int k = 0; k < state.size(); ++k) x.segment<2>(2 * k) = state.partials[k];
  return x;
}

MaterialState CoupledObjective::unpack(const Vector& x) {
  MaterialState s;
  s.partials.resize(x.size() / 2);
  for (Eigen::Index k = 0; k < x.size() / 2; ++k) {
    s.partials[k] = x.segment<2>(2 * k);
  }
  return s;
}

Vector2 CoupledObjective::residual_field(const Vector& x) const {
  Vector2 r = b_;
  for (int k = 0; k < params_.size(); ++k) r -= x.segment<2>(2 * k);
  return r;
}

bool CoupledObjective::feasible(const Vector& x) const {
  for (int k = 0; k < params_.size(); ++k) {
    if (!in_energy_domain(params_.sites[k], x.segment<2>(2 * k), eps_,
                          margin_)) {
      return false;
    }
  }
  return true;
}

double CoupledObjective::value(const Vector& x) const {
  double f = 0.5 / kMu0 * residual_field(x).squaredNorm();
  for (int k = 0; k < params_.size(); ++k) {
    const PinningSite& site = params_.sites[k];
    const Vector2 jk = x.segment<2>(2 * k);
    f += internal_energy(site, jk, eps_, margin_) +
         site.chi * std::sqrt((jk - prev_.partials[k]).squaredNorm() + eps_);
  }
  return f;
}

void CoupledObjective::gradient(const Vector& x, Vector& g) const {
  const Vector2 h = residual_field(x) / kMu0;
  g.resize(dimension());
  for (int k = 0; k < params_.size(); ++k) {
    const PinningSite& site = params_.sites[k];
    const Vector2 jk = x.segment<2>(2 * k);
    g.segment<2>(2 * k) = internal_energy_grad(site, jk, eps_, margin_) - h +
                          pinning_term(site.chi, jk, prev_.partials[k], eps_).grad;
  }
}

void CoupledObjective::hessian(const Vector& x, Matrix& hess) const {
  const int n = params_.size();
  hess.resize(2 * n, 2 * n);
  const double coupling = 1.0 / kMu0;
  for (int k = 0; k < n; ++k) {
    for (int l = 0; l < n; ++l) {
      hess.block<2, 2>(2 * k, 2 * l) = coupling * Matrix2::Identity();
    }
  }
  for (int k = 0; k < n; ++k) {
    const PinningSite& site = params_.sites[k];
    const Vector2 jk = x.segment<2>(2 * k);
    hess.block<2, 2>(2 * k, 2 * k) +=
        internal_energy_hess(site, jk, eps_, margin_) +
        pinning_term(site.chi, jk, prev_.partials[k], eps_).hess;
  }
}

namespace {

// Derivative of play_estimate in H with u held fixed; zero for stuck sites.
Matrix2 play_slope(const PinningSite& site, const Vector2& h, const Vector2& jp,
                   const Vector2& j) {
  if (site.chi > 0.0 && j == jp) return Matrix2::Zero();
  const Vector2 y = h - (site.chi > 0.0 ? site.chi * (j - jp).normalized()
                                        : Vector2::Zero().eval());
  const double r = y.norm();
  const double scale = site.bound() / (0.5 * std::numbers::pi);
  const double q = 2.0 / site.steepness;
  if (r == 0.0) return scale * q * Matrix2::Identity();
  const Vector2 n = y / r;
  const double radial = scale * q / (1.0 + q * q * r * r);
  const double tangential = scale * std::atan(q * r) / r;
  return radial * n * n.transpose() + tangential * (Matrix2::Identity() - n * n.transpose());
}

}  // namespace

MaterialState play_start(const MaterialParams& params, const Vector2& b,
                         const MaterialState& prev,
                         const SolverSettings& settings) {
  const int n = params.size();
  MaterialState js = prev;
  auto residual = [&](const Vector2& h) {
    Vector2 r = kMu0 * h - b;
    for (int k = 0; k < n; ++k) {
      js.partials[k] = play_estimate(params.sites[k], h, prev.partials[k], settings);
      r += js.partials[k];
    }
    return r;
  };

  // The play estimates are inexact, so the residual stalls above round-off;
  // a start only has to be close, hence the loose tolerance and short caps.
  Vector2 h = Vector2::Zero();
  Vector2 r = residual(h);
  for (int it = 0; it < 20 && r.norm() > 1e-9 * std::max(1.0, b.norm()); ++it) {
    Matrix2 slope = kMu0 * Matrix2::Identity();
    for (int k = 0; k < n; ++k) {
      slope += play_slope(params.sites[k], h, prev.partials[k], js.partials[k]);
    }
    const Vector2 step = -slope.partialPivLu().solve(r);
    double t = 1.0;
    Vector2 trial_r;
    for (int back = 0; back < 10; ++back, t *= 0.5) {
      trial_r = residual(h + t * step);
      if (trial_r.norm() < r.norm()) break;
    }
    if (!(trial_r.norm() < r.norm())) break;
    h += t * step;
    r = trial_r;
  }
  residual(h);
  return js;
}

MaterialState forward_inversion_start(const MaterialParams& params,
                                      const Vector2& b,
                                      const MaterialState& prev,
                                      const SolverSettings& settings) {
  // phi(H) = w*(H) - <B, H> is strictly convex with gradient B(H) - B and
  // Hessian dB/dH, so damped Newton on phi finds the H with B(H) = B.
  EvalOptions with_tangent;
  with_tangent.tangent = true;
  Vector2 h = Vector2::Zero();
  ForwardResult at = forward_update(params, h, prev, settings, with_tangent);
  double f = at.coenergy - b.dot(h);
  const double tol = 1e-12 * std::max(1.0, b.norm());
  for (int it = 0; it < 100 && (at.b - b).norm() > tol; ++it) {
    const Vector2 g = at.b - b;
    const Vector2 step = -at.tangent.ldlt().solve(g);
    const double decrease = g.dot(step);
    if (!(decrease < 0.0)) break;
    double t = 1.0;
    bool moved = false;
    for (int back = 0; back < 60; ++back, t *= 0.5) {
      const Vector2 ht = h + t * step;
      ForwardResult trial = forward_update(params, ht, prev, settings, with_tangent);
      const double ft = trial.coenergy - b.dot(ht);
      if (ft <= f + 1e-4 * t * decrease) {
        h = ht;
        f = ft;
        at = std::move(trial);
        moved = true;
        break;
      }
    }
    if (!moved) break;
  }
  return at.next;
}

InverseResult inverse_update(const MaterialParams& params, const Vector2& b,
                             const MaterialState& prev,
                             const SolverSettings& settings,
                             const EvalOptions& options) {
  if (!is_finite(b)) {
    throw InvalidArgument("operator input has non-finite components");
  }
  settings.validate();
  params.validate();
  prev.validate_for(params);
  if (options.start) options.start->validate_for(params);

  const CoupledObjective obj(params, b, prev, settings);
  // Lowest of the previous state and either the caller's warm start or, when
  // there is none, the play-based start.
  CoupledObjective::Vector x0 = CoupledObjective::pack(prev);
  double f0 = obj.value(x0);
  auto consider = [&](const MaterialState& state) {
    CoupledObjective::Vector x = CoupledObjective::pack(state);
    if (!obj.feasible(x)) return;
    const double fx = obj.value(x);
    if (fx < f0) {
      f0 = fx;
      x0 = std::move(x);
    }
  };
  if (options.start) {
    consider(*options.start);
  } else {
    consider(play_start(params, b, prev, settings));
  }

  thread_local NewtonWorkspace<CoupledObjective> workspace;
  auto solve = [&](const CoupledObjective::Vector& from) {
    return minimize(obj, from, settings, workspace);
  };
  SolveReport<CoupledObjective::Vector> rep;
  std::string first_failure;
  try {
    rep = solve(x0);
  } catch (const NumericalError& e) {
    first_failure = e.what();
  }
  if (!first_failure.empty() || !rep.converged) {
    // Large rotations deep in saturation can leave Newton crawling along the
    // saturation circle; restart from the partials of the forward operator
    // at the field that reproduces B.
    if (first_failure.empty()) {
      first_failure = "no convergence (|grad| = " + std::to_string(rep.grad_norm) +
                      " after " + std::to_string(rep.iterations) + " iterations)";
    }
    try {
      const CoupledObjective::Vector x1 = CoupledObjective::pack(
          forward_inversion_start(params, b, prev, settings));
      if (!obj.feasible(x1)) throw NumericalError("restart point is infeasible");
      rep = solve(x1);
    } catch (const std::exception& e) {
      throw OperatorError("inverse coupled solve failed: " + first_failure +
                              "; restart: " + e.what(),
                          -1);
    }
    if (!rep.converged) {
      throw OperatorError("inverse coupled solve did not converge: " +
                              first_failure + "; restart ended at |grad| = " +
                              std::to_string(rep.grad_norm) + " after " +
                              std::to_string(rep.iterations) + " iterations",
                          -1);
    }
  }

  InverseResult out;
  out.next = CoupledObjective::unpack(rep.minimizer);
  out.h = (b - out.next.total()) / kMu0;
  out.energy = rep.objective_value;
  out.iterations = rep.iterations;
  if (options.tangent) {
    // Woodbury on K = blockdiag(D_k) + E E^T / mu0 gives
    // dH/dB = (mu0 I + sum_k D_k^{-1})^{-1}.
    CoupledObjective::Matrix hess;
    obj.hessian(rep.minimizer, hess);
    Matrix2 compliance = kMu0 * Matrix2::Identity();
    for (int k = 0; k < params.size(); ++k) {
      const Matrix2 block = hess.block<2, 2>(2 * k, 2 * k) -
                            Matrix2::Identity() / kMu0;
      compliance += block.inverse();
    }
    out.tangent = compliance.inverse();
  }
  return out;
}

double energy_density(const MaterialParams& params, const Vector2& b,
                      const MaterialState& prev,
                      const SolverSettings& settings) {
  return inverse_update(params, b, prev, settings).energy;
}

}  // namespace hystkit
