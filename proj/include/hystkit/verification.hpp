#pragma once

#include <string>
#include <vector>

#include "hystkit/material.hpp"

namespace hystkit {

/// w(b; prev) + w*(h; prev) - <h, b> with b = forward_update(h).b.
/// Vanishes for conjugate pairs.
double fenchel_gap(const MaterialParams& params, const Vector2& h,
                   const MaterialState& prev, const SolverSettings& settings);

struct GradientResiduals {
  /// |central difference of w* in H - B| / max(|B|, tiny)
  double forward = 0.0;
  /// |central difference of w in B - H| / max(|H|, tiny)
  double inverse = 0.0;
  /// At the center or at a stencil point some partial sits within
  /// 10 sqrt(eps) of its pinning kink; the differences then straddle a
  /// near-corner and are reported but not meaningful.
  bool near_kink = false;
};

/// Danskin checks for both operators. `fd_step` is the H step in A/m. The
/// inverse check differences w(B) along the B increments (dB/dH) e_i fd_step,
/// so both checks probe matching neighborhoods even where dB/dH is strongly
/// anisotropic (near saturation).
GradientResiduals gradient_residuals(const MaterialParams& params,
                                     const Vector2& h, const Vector2& b,
                                     const MaterialState& prev,
                                     const SolverSettings& settings,
                                     double fd_step);

/// Forward pass over `h_sequence` from the virgin state, inverse pass over the
/// produced B sequence from the virgin state; returns
/// max_i |H_rec^i - H^i| / max_i |H^i| (absolute error if all H^i vanish).
double roundtrip_error(const MaterialParams& params,
                       const std::vector<Vector2>& h_sequence,
                       const SolverSettings& settings);

/// One row of the `check` table.
struct CheckResult {
  std::string name;
  double value = 0.0;
  double limit = 0.0;
  bool passed = false;
};

/// Deterministic duality suite on the reference materials (single force
/// A=38, Js=1.54, chi=71 and the 20-force spread A=50, chi_max=140).
std::vector<CheckResult> run_duality_suite(const SolverSettings& settings);

}  // namespace hystkit
