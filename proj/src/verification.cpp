#include "hystkit/verification.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/LU>

#include "hystkit/errors.hpp"
#include "hystkit/forward.hpp"
#include "hystkit/inverse.hpp"

namespace hystkit {

double fenchel_gap(const MaterialParams& params, const Vector2& h,
                   const MaterialState& prev, const SolverSettings& settings) {
  const ForwardResult fwd = forward_update(params, h, prev, settings);
  const double w = energy_density(params, fwd.b, prev, settings);
  return w + fwd.coenergy - h.dot(fwd.b);
}

GradientResiduals gradient_residuals(const MaterialParams& params,
                                     const Vector2& h, const Vector2& b,
                                     const MaterialState& prev,
                                     const SolverSettings& settings,
                                     double fd_step) {
  if (!(fd_step > 0.0)) throw InvalidArgument("fd_step must be > 0");
  constexpr double tiny = 1e-300;
  const double kink_radius = 10.0 * std::sqrt(settings.epsilon);

  GradientResiduals out;
  auto touches_kink = [&](const MaterialState& next) {
    for (int k = 0; k < params.size(); ++k) {
      if (params.sites[k].chi > 0.0 &&
          (next.partials[k] - prev.partials[k]).norm() < kink_radius) {
        return true;
      }
    }
    return false;
  };

  EvalOptions with_tangent;
  with_tangent.tangent = true;
  const ForwardResult fwd = forward_update(params, h, prev, settings, with_tangent);
  out.near_kink = touches_kink(fwd.next);

  // fourth-order central stencil (-f(2d) + 8 f(d) - 8 f(-d) + f(-2d)) / 12
  constexpr double kWeights[4] = {-1.0, 8.0, -8.0, 1.0};
  constexpr double kOffsets[4] = {2.0, 1.0, -1.0, -2.0};

  Vector2 fd_h;
  for (int i = 0; i < 2; ++i) {
    Vector2 e = Vector2::Zero();
    e[i] = fd_step;
    double acc = 0.0;
    for (int s = 0; s < 4; ++s) {
      const ForwardResult r =
          forward_update(params, h + kOffsets[s] * e, prev, settings);
      out.near_kink = out.near_kink || touches_kink(r.next);
      acc += kWeights[s] * r.coenergy;
    }
    fd_h[i] = acc / (12.0 * fd_step);
  }
  out.forward = (fd_h - fwd.b).norm() / std::max(fwd.b.norm(), tiny);

  const InverseResult inv = inverse_update(params, b, prev, settings);
  out.near_kink = out.near_kink || touches_kink(inv.next);
  // Difference w along v_i = (dB/dH) e_i fd_step, the B increments that
  // the H stencil produces; then grad w = (dB/dH)^{-T} (directional slopes).
  Vector2 slopes;
  for (int i = 0; i < 2; ++i) {
    const Vector2 v = fd_step * fwd.tangent.col(i);
    double acc = 0.0;
    for (int s = 0; s < 4; ++s) {
      const InverseResult r =
          inverse_update(params, b + kOffsets[s] * v, prev, settings);
      out.near_kink = out.near_kink || touches_kink(r.next);
      acc += kWeights[s] * r.energy;
    }
    slopes[i] = acc / (12.0 * fd_step);
  }
  const Vector2 fd_b = fwd.tangent.transpose().partialPivLu().solve(slopes);
  out.inverse = (fd_b - inv.h).norm() / std::max(inv.h.norm(), tiny);
  return out;
}

double roundtrip_error(const MaterialParams& params,
                       const std::vector<Vector2>& h_sequence,
                       const SolverSettings& settings) {
  if (h_sequence.empty()) throw InvalidArgument("empty field sequence");
  MaterialState fwd = MaterialState::virgin(params);
  MaterialState inv = MaterialState::virgin(params);
  double max_err = 0.0;
  double max_h = 0.0;
  for (const Vector2& h : h_sequence) {
    const ForwardResult rf = forward_update(params, h, fwd, settings);
    fwd = rf.next;
    const InverseResult ri = inverse_update(params, rf.b, inv, settings);
    inv = ri.next;
    max_err = std::max(max_err, (ri.h - h).norm());
    max_h = std::max(max_h, h.norm());
  }
  return max_h > 0.0 ? max_err / max_h : max_err;
}

namespace {

std::vector<Vector2> uniaxial_sine(double amplitude, int steps_per_period,
                                   int periods) {
  std::vector<Vector2> hs;
  for (int i = 1; i <= steps_per_period * periods; ++i) {
    const double t = 2.0 * std::numbers::pi * i / steps_per_period;
    hs.emplace_back(amplitude * std::sin(t), 0.0);
  }
  return hs;
}

}  // namespace

std::vector<CheckResult> run_duality_suite(const SolverSettings& settings) {
  std::vector<CheckResult> rows;
  auto add = [&rows](std::string name, double value, double limit) {
    rows.push_back({std::move(name), value, limit, value <= limit});
  };

  const MaterialParams fig1 = MaterialParams::single(38.0, 1.54, 71.0);
  const MaterialParams fig3 = MaterialParams::linear_spread(20, 50.0, 1.54, 140.0);

  {
    const MaterialState v = MaterialState::virgin(fig1);
    add("fenchel gap, zero field", std::abs(fenchel_gap(fig1, {0, 0}, v, settings)),
        1e-12);
    const Vector2 h(180, 0);
    const double hb = h.dot(forward_update(fig1, h, v, settings).b);
    add("fenchel gap, 1 force, H=(180,0) [rel]",
        std::abs(fenchel_gap(fig1, h, v, settings)) / hb, 1e-8);
  }
  {
    const MaterialState v = MaterialState::virgin(fig3);
    const Vector2 h(300, 100);
    const double hb = h.dot(forward_update(fig3, h, v, settings).b);
    add("fenchel gap, 20 forces, H=(300,100) [rel]",
        std::abs(fenchel_gap(fig3, h, v, settings)) / std::max(1.0, hb), 1e-8);
  }

  // random conjugate pairs from random admissible histories
  std::mt19937 rng(20240601);
  std::uniform_real_distribution<double> field(-600.0, 600.0);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  for (int n_chi : {1, 5, 20}) {
    const MaterialParams p =
        n_chi == 1 ? fig1 : MaterialParams::linear_spread(n_chi, 50.0, 1.54, 140.0);
    double worst_gap = 0.0;
    double worst_fwd = 0.0;
    double worst_inv = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
      MaterialState prev = MaterialState::virgin(p);
      for (int k = 0; k < p.size(); ++k) {
        Vector2 d(unit(rng), unit(rng));
        if (d.norm() > 1.0) d.normalize();
        prev.partials[k] = 0.8 * p.sites[k].bound() * d;
      }
      const Vector2 h(field(rng), field(rng));
      const ForwardResult fwd = forward_update(p, h, prev, settings);
      const double hb = h.dot(fwd.b);
      worst_gap = std::max(worst_gap, std::abs(fenchel_gap(p, h, prev, settings)) /
                                          std::max(1.0, std::abs(hb)));
      if (trial % 10 == 0) {
        const GradientResiduals r =
            gradient_residuals(p, h, fwd.b, prev, settings, 1e-3 * h.norm());
        if (!r.near_kink) {
          worst_fwd = std::max(worst_fwd, r.forward);
          worst_inv = std::max(worst_inv, r.inverse);
        }
      }
    }
    const std::string tag = " N=" + std::to_string(n_chi);
    add("fenchel gap, 100 random pairs" + tag + " [rel]", worst_gap, 1e-8);
    add("danskin residual, forward" + tag, worst_fwd, 1e-5);
    add("danskin residual, inverse" + tag, worst_inv, 1e-5);
  }

  add("roundtrip, 1 force, Hm=180",
      roundtrip_error(fig1, uniaxial_sine(180.0, 500, 3), settings), 1e-6);
  add("roundtrip, 20 forces, Hm=500",
      roundtrip_error(fig3, uniaxial_sine(500.0, 500, 3), settings), 1e-6);
  return rows;
}

}  // namespace hystkit
