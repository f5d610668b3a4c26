#pragma once

#include <vector>

#include "hystkit/material.hpp"

namespace hystkit {

/// Per-site inner problem of the forward operator,
///   f(J) = U(J) - <H, J> + chi |J - Jp|_eps.
class SiteObjective {
 public:
  using Vector = Vector2;
  using Matrix = Matrix2;

  SiteObjective(const PinningSite& site, const Vector2& h, const Vector2& jp,
                const SolverSettings& settings)
      : site_(site), h_(h), jp_(jp), eps_(settings.epsilon),
        margin_(settings.boundary_margin) {}

  int dimension() const { return 2; }
  bool feasible(const Vector2& j) const {
    return in_energy_domain(site_, j, eps_, margin_);
  }
  double value(const Vector2& j) const;
  /// |U(J)| + |<H, J>| + chi |J - Jp|_eps, the size of the summands of value().
  double value_scale(const Vector2& j) const;
  void gradient(const Vector2& j, Vector2& g) const;
  void hessian(const Vector2& j, Matrix2& hess) const;
  /// Step along `p` closest to the pinning kink J = Jp.
  template <class Sink>
  void breakpoints(const Vector2& j, const Vector2& p, Sink&& sink) const {
    const double pp = p.squaredNorm();
    if (site_.chi > 0.0 && pp > 0.0) sink(-(j - jp_).dot(p) / pp);
  }

 private:
  const PinningSite& site_;
  Vector2 h_;
  Vector2 jp_;
  double eps_;
  double margin_;
};

struct EvalOptions {
  /// Optional inner Newton start. Solves begin at the lowest-objective point
  /// among the previous state, this start and a play estimate; the inverse
  /// operator builds its play estimate only when no start is given.
  const MaterialState* start = nullptr;
  /// Also compute the derivative of the operator output.
  bool tangent = false;
};

struct ForwardResult {
  Vector2 b = Vector2::Zero();
  MaterialState next;
  /// w*(H; {Jp}) = mu0 |H|^2 / 2 - sum_k min_J f_k(J)
  double coenergy = 0.0;
  int iterations = 0;       ///< summed over sites
  int max_iterations = 0;   ///< largest per-site count
  /// dB/dH of the regularized operator (only with EvalOptions::tangent).
  Matrix2 tangent = Matrix2::Zero();
};

/// Start point for a site solve: the eps = 0 vector-play solution
/// J = Phi(H - chi u), u = (J - Jp)/|J - Jp|, after a few fixed-point sweeps
/// on u (Jp itself in the stick region |H - grad U(Jp)| <= chi).
Vector2 play_estimate(const PinningSite& site, const Vector2& h,
                      const Vector2& jp, const SolverSettings& settings);

/// B = mu0 H + sum_k J_k, each J_k minimizing its own site objective.
/// `prev` is left untouched; commit `next` once the step is accepted.
/// Throws OperatorError naming the site whose inner solve failed.
ForwardResult forward_update(const MaterialParams& params, const Vector2& h,
                             const MaterialState& prev,
                             const SolverSettings& settings,
                             const EvalOptions& options = {});

double coenergy_density(const MaterialParams& params, const Vector2& h,
                        const MaterialState& prev,
                        const SolverSettings& settings);

}  // namespace hystkit
