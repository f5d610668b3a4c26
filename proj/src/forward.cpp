#include "hystkit/forward.hpp"

#include <string>

#include <Eigen/LU>

#include "hystkit/errors.hpp"
#include "hystkit/newton.hpp"

namespace hystkit {

double SiteObjective::value(const Vector2& j) const {
  return internal_energy(site_, j, eps_, margin_) - h_.dot(j) +
         site_.chi * std::sqrt((j - jp_).squaredNorm() + eps_);
}

double SiteObjective::value_scale(const Vector2& j) const {
  return internal_energy(site_, j, eps_, margin_) + std::abs(h_.dot(j)) +
         site_.chi * std::sqrt((j - jp_).squaredNorm() + eps_);
}

void SiteObjective::gradient(const Vector2& j, Vector2& g) const {
  g = internal_energy_grad(site_, j, eps_, margin_) - h_ +
      pinning_term(site_.chi, j, jp_, eps_).grad;
}

void SiteObjective::hessian(const Vector2& j, Matrix2& hess) const {
  hess = internal_energy_hess(site_, j, eps_, margin_) +
         pinning_term(site_.chi, j, jp_, eps_).hess;
}

Vector2 play_estimate(const PinningSite& site, const Vector2& h,
                      const Vector2& jp, const SolverSettings& settings) {
  if (site.chi == 0.0) return anhysteretic_polarization(site, h);
  if (!in_energy_domain(site, jp, settings.epsilon, settings.boundary_margin)) {
    return anhysteretic_polarization(site, h);
  }
  const Vector2 force =
      h - internal_energy_grad(site, jp, settings.epsilon, settings.boundary_margin);
  const double fn = force.norm();
  if (fn <= site.chi) return jp;
  Vector2 u = force / fn;
  Vector2 j = jp;
  for (int sweep = 0; sweep < 4; ++sweep) {
    j = anhysteretic_polarization(site, h - site.chi * u);
    const Vector2 d = j - jp;
    const double dn = d.norm();
    if (dn == 0.0) break;
    u = d / dn;
  }
  return j;
}

namespace {

void check_inputs(const MaterialParams& params, const Vector2& field,
                  const MaterialState& prev, const SolverSettings& settings,
                  const EvalOptions& options) {
  if (!is_finite(field)) {
    throw InvalidArgument("operator input has non-finite components");
  }
  settings.validate();
  params.validate();
  prev.validate_for(params);
  if (options.start) options.start->validate_for(params);
}

}  // namespace

ForwardResult forward_update(const MaterialParams& params, const Vector2& h,
                             const MaterialState& prev,
                             const SolverSettings& settings,
                             const EvalOptions& options) {
  check_inputs(params, h, prev, settings, options);
  const MaterialState& start = options.start ? *options.start : prev;

  ForwardResult out;
  out.next.partials.resize(params.size());
  double inner_sum = 0.0;
  Matrix2 compliance = Matrix2::Zero();
  for (int k = 0; k < params.size(); ++k) {
    const SiteObjective obj(params.sites[k], h, prev.partials[k], settings);
    // Lowest of the warm start, Jp and the play estimate; the estimate
    // matters after large field rotations near saturation, where Newton
    // from Jp would creep around the saturation circle in short chords.
    Vector2 j0 = prev.partials[k];
    double f0 = obj.value(j0);
    auto consider = [&](const Vector2& j) {
      if (!obj.feasible(j)) return;
      const double fj = obj.value(j);
      if (fj < f0) {
        f0 = fj;
        j0 = j;
      }
    };
    if (options.start) consider(start.partials[k]);
    consider(play_estimate(params.sites[k], h, prev.partials[k], settings));
    SolveReport<Vector2> rep;
    try {
      rep = minimize(obj, j0, settings);
    } catch (const std::exception& e) {
      throw OperatorError("forward inner solve failed at site " +
                              std::to_string(k) + ": " + e.what(),
                          k);
    }
    if (!rep.converged) {
      throw OperatorError("forward inner solve did not converge at site " +
                              std::to_string(k) + " (|grad| = " +
                              std::to_string(rep.grad_norm) + ")",
                          k);
    }
    out.next.partials[k] = rep.minimizer;
    inner_sum += rep.objective_value;
    out.iterations += rep.iterations;
    out.max_iterations = std::max(out.max_iterations, rep.iterations);
    if (options.tangent) {
      Matrix2 hess;
      obj.hessian(rep.minimizer, hess);
      compliance += hess.inverse();
    }
  }
  out.b = kMu0 * h + out.next.total();
  out.coenergy = 0.5 * kMu0 * h.squaredNorm() - inner_sum;
  if (options.tangent) out.tangent = kMu0 * Matrix2::Identity() + compliance;
  return out;
}

double coenergy_density(const MaterialParams& params, const Vector2& h,
                        const MaterialState& prev,
                        const SolverSettings& settings) {
  return forward_update(params, h, prev, settings).coenergy;
}

}  // namespace hystkit
