#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <functional>
#include <limits>
#include <sstream>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "hystkit/errors.hpp"
#include "hystkit/material.hpp"

namespace hystkit {

/// Smooth, strictly convex objective on an open feasible set. `value` is
/// only called at feasible points.
template <class F>
concept SmoothObjective =
    requires(const F& f, const typename F::Vector& x, typename F::Vector& g,
             typename F::Matrix& h) {
      { f.dimension() } -> std::convertible_to<int>;
      { f.feasible(x) } -> std::convertible_to<bool>;
      { f.value(x) } -> std::convertible_to<double>;
      f.gradient(x, g);
      f.hessian(x, h);
    };

/// Objectives with kinks smoothed at scale sqrt(eps) may report the step
/// lengths along `p` at which the line passes closest to each kink. The line
/// search then also tries these steps; a Newton step otherwise overshoots a
/// kink and zig-zags around it. Each step is passed to a callable sink.
namespace detail {
struct BreakpointSinkArchetype {
  void operator()(double) const {}
};
}  // namespace detail

template <class F>
concept HasBreakpoints =
    requires(const F& f, const typename F::Vector& x,
             const typename F::Vector& p, detail::BreakpointSinkArchetype sink) {
      f.breakpoints(x, p, sink);
    };

/// Objectives whose value is a sum of terms that cancel may report the size
/// of those terms; the round-off test of the line search then uses it in
/// place of |f|.
template <class F>
concept HasValueScale = requires(const F& f, const typename F::Vector& x) {
  { f.value_scale(x) } -> std::convertible_to<double>;
};

template <class VectorT>
struct SolveReport {
  VectorT minimizer;
  double objective_value = 0.0;
  int iterations = 0;
  double grad_norm = 0.0;
  bool converged = false;
};

/// Type-erased objective on R^n, for tests and small one-off problems.
struct FunctionObjective {
  using Vector = Eigen::VectorXd;
  using Matrix = Eigen::MatrixXd;

  int n = 0;
  std::function<bool(const Vector&)> is_feasible;
  std::function<double(const Vector&)> eval;
  std::function<void(const Vector&, Vector&)> grad;
  std::function<void(const Vector&, Matrix&)> hess;

  int dimension() const { return n; }
  bool feasible(const Vector& x) const {
    return is_feasible ? is_feasible(x) : x.allFinite();
  }
  double value(const Vector& x) const { return eval(x); }
  void gradient(const Vector& x, Vector& g) const { grad(x, g); }
  void hessian(const Vector& x, Matrix& h) const { hess(x, h); }
};

namespace detail {

// Below this Newton decrement the objective difference is at round-off level
// and the Armijo test is meaningless.
inline bool decrement_at_roundoff(double decrement, double f) {
  return decrement <= 64.0 * std::numeric_limits<double>::epsilon() *
                          std::max(1.0, std::abs(f));
}

template <class VectorT>
std::string describe_iterate(const VectorT& x, int iteration, double gnorm) {
  std::ostringstream os;
  os.precision(17);
  os << "iteration " << iteration << ", |grad| = " << gnorm << ", x = [";
  for (Eigen::Index i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x[i];
  os << "]";
  return os.str();
}

}  // namespace detail

/// Scratch storage for `minimize`. Reusing one across calls of the same
/// dimension avoids reallocating dynamically sized vectors.
template <SmoothObjective F>
struct NewtonWorkspace {
  typename F::Vector x, g, p, trial, candidate, g_trial;
  typename F::Matrix hess;
  Eigen::LLT<typename F::Matrix> llt;

  void resize(int n) {
    if constexpr (F::Vector::SizeAtCompileTime == Eigen::Dynamic) {
      x.resize(n);
      g.resize(n);
      p.resize(n);
      trial.resize(n);
      candidate.resize(n);
      g_trial.resize(n);
      hess.resize(n, n);
    }
  }
};

/// Damped Newton method with fraction-to-boundary and Armijo backtracking.
///
/// Converges when |grad| <= grad_tol * max(1, |grad(start)|). The objective
/// is non-increasing across accepted iterates; once the Newton decrement
/// falls to round-off level, full steps are taken as long as they reduce
/// the gradient norm. If a full step there no longer reduces it, the
/// gradient is at its round-off floor (the quadratic model is exact at such
/// step lengths) and the iterate is reported as converged. `grad_history`,
/// when given, receives |grad| at every iterate.
template <SmoothObjective F>
SolveReport<typename F::Vector> minimize(
    const F& obj, const typename F::Vector& start,
    const SolverSettings& settings, NewtonWorkspace<F>& ws,
    std::vector<double>* grad_history = nullptr) {
  using Vector = typename F::Vector;

  if (!obj.feasible(start)) {
    throw InvalidArgument("Newton start point is infeasible");
  }
  const int n = obj.dimension();
  ws.resize(n);
  Vector& x = ws.x;
  Vector& g = ws.g;
  Vector& p = ws.p;
  Vector& trial = ws.trial;
  Vector& candidate = ws.candidate;
  Vector& g_trial = ws.g_trial;
  auto& hess = ws.hess;
  auto& llt = ws.llt;
  x = start;

  double f = obj.value(x);
  obj.gradient(x, g);
  double gnorm = g.norm();
  const double tol = settings.grad_tol * std::max(1.0, gnorm);
  if (grad_history) grad_history->push_back(gnorm);

  SolveReport<Vector> report;
  bool at_noise_floor = false;
  int it = 0;
  for (; it < settings.max_iter && !(gnorm <= tol); ++it) {
    obj.hessian(x, hess);
    llt.compute(hess);
    if (llt.info() != Eigen::Success) {
      throw NumericalError("Hessian factorization failed at " +
                           detail::describe_iterate(x, it, gnorm));
    }
    p = -llt.solve(g);
    const double decrement = -g.dot(p);
    if (!std::isfinite(decrement) || decrement < 0.0) {
      throw NumericalError("Newton direction is not a descent direction at " +
                           detail::describe_iterate(x, it, gnorm));
    }

    double alpha = 1.0;
    int backtracks = 0;
    trial = x + p;
    while (!obj.feasible(trial)) {
      if (++backtracks > settings.max_backtracks) {
        throw NumericalError("no feasible step found at " +
                             detail::describe_iterate(x, it, gnorm));
      }
      alpha *= settings.backtrack;
      trial = x + alpha * p;
    }

    const double alpha_max = alpha;
    double f_trial = obj.value(trial);
    double scale = f;
    if constexpr (HasValueScale<F>) scale = obj.value_scale(x);
    const bool roundoff = detail::decrement_at_roundoff(decrement, scale);
    auto armijo = [&](double fa, double a) {
      return fa <= f - settings.armijo_c * a * decrement;
    };
    bool accepted = false;
    if (!roundoff) {
      while (!armijo(f_trial, alpha)) {
        if (++backtracks > settings.max_backtracks) break;
        alpha *= settings.backtrack;
        trial = x + alpha * p;
        f_trial = obj.value(trial);
      }
      accepted = armijo(f_trial, alpha);
    }
    if constexpr (HasBreakpoints<F>) {
      // A kink step replaces the current step if it is lower; outside the
      // round-off regime it must also give sufficient decrease on its own.
      obj.breakpoints(x, p, [&](double a) {
        if (!(a > 0.0 && a < alpha_max)) return;
        candidate = x + a * p;
        if (!obj.feasible(candidate)) return;
        const double fc = obj.value(candidate);
        const bool better = roundoff ? fc < f_trial
                                     : armijo(fc, a) && (!accepted || fc < f_trial);
        if (better) {
          f_trial = fc;
          alpha = a;
          trial = candidate;
          accepted = !roundoff;
        }
      });
    }
    if (roundoff) {
      obj.gradient(trial, g_trial);
      accepted = g_trial.norm() < gnorm;
      if (!accepted) {
        at_noise_floor = true;
        break;
      }
    } else if (!accepted) {
      break;
    }

    x = trial;
    f = f_trial;
    obj.gradient(x, g);
    gnorm = g.norm();
    if (grad_history) grad_history->push_back(gnorm);
  }

  report.minimizer = x;
  report.objective_value = f;
  report.iterations = it;
  report.grad_norm = gnorm;
  report.converged = gnorm <= tol || at_noise_floor;
  return report;
}

template <SmoothObjective F>
SolveReport<typename F::Vector> minimize(
    const F& obj, const typename F::Vector& start,
    const SolverSettings& settings,
    std::vector<double>* grad_history = nullptr) {
  NewtonWorkspace<F> ws;
  return minimize(obj, start, settings, ws, grad_history);
}

}  // namespace hystkit
