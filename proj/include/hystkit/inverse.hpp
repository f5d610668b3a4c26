#pragma once

#include <vector>

#include <Eigen/Core>

#include "hystkit/forward.hpp"
#include "hystkit/material.hpp"

namespace hystkit {

/// Coupled inner problem of the inverse operator in 2 N unknowns,
///   F({J}) = |B - sum_k J_k|^2 / (2 mu0) + sum_k U_k(J_k) + chi_k |J_k - Jp_k|_eps.
/// The Hessian is block diagonal plus (1/mu0) E E^T with E = [I; I; ...; I].
class CoupledObjective {
 public:
  using Vector = Eigen::VectorXd;
  using Matrix = Eigen::MatrixXd;

  CoupledObjective(const MaterialParams& params, const Vector2& b,
                   const MaterialState& prev, const SolverSettings& settings)
      : params_(params), b_(b), prev_(prev), eps_(settings.epsilon),
        margin_(settings.boundary_margin) {}

  int dimension() const { return 2 * params_.size(); }
  bool feasible(const Vector& x) const;
  double value(const Vector& x) const;
  void gradient(const Vector& x, Vector& g) const;
  void hessian(const Vector& x, Matrix& hess) const;
  /// Steps along `p` closest to each pinning kink J_k = Jp_k.
  template <class Sink>
  void breakpoints(const Vector& x, const Vector& p, Sink&& sink) const {
    for (int k = 0; k < params_.size(); ++k) {
      const Vector2 pk = p.segment<2>(2 * k);
      const double pp = pk.squaredNorm();
      if (params_.sites[k].chi > 0.0 && pp > 0.0) {
        sink(-(x.segment<2>(2 * k) - prev_.partials[k]).dot(pk) / pp);
      }
    }
  }

  static Vector pack(const MaterialState& state);
  static MaterialState unpack(const Vector& x);

 private:
  Vector2 residual_field(const Vector& x) const;

  const MaterialParams& params_;
  Vector2 b_;
  const MaterialState& prev_;
  double eps_;
  double margin_;
};

struct InverseResult {
  Vector2 h = Vector2::Zero();
  MaterialState next;
  /// w(B; {Jp}), the minimum of the coupled problem.
  double energy = 0.0;
  int iterations = 0;
  /// dH/dB of the regularized operator (only with EvalOptions::tangent).
  Matrix2 tangent = Matrix2::Zero();
};

/// H = (B - sum_k J_k) / mu0 with all J_k from one coupled minimization.
/// Start point for the coupled solve: the per-site play estimates at the
/// field H balancing mu0 H + sum_k J_k(H) = B (damped Newton on the residual).
MaterialState play_start(const MaterialParams& params, const Vector2& b,
                         const MaterialState& prev,
                         const SolverSettings& settings);

InverseResult inverse_update(const MaterialParams& params, const Vector2& b,
                             const MaterialState& prev,
                             const SolverSettings& settings,
                             const EvalOptions& options = {});

double energy_density(const MaterialParams& params, const Vector2& b,
                      const MaterialState& prev,
                      const SolverSettings& settings);

}  // namespace hystkit
