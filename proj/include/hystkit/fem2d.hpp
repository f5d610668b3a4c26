#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "hystkit/kernels.hpp"
#include "hystkit/mesh.hpp"

namespace hystkit {

/// Coil current density for unit total current and its source field.
/// j0 = +1/A_w on coil_plus, -1/A_w on coil_minus, 0 elsewhere (A/m^2 per A);
/// H0 = Curl a0 / mu0 with a0 the P1 solution of curl(curl a0 / mu0) = j0,
/// a0 = 0 on the boundary. Both are constant per triangle.
struct SourceModel {
  double winding_area = 5e-4;  ///< A_w, m^2
  int turns = 90;              ///< N_w; reported only, I_s is the total coil current
  std::vector<double> j0;
  std::vector<Vector2> h0;
};

/// Throws InvalidArgument when the mesh has no interior node.
SourceModel compute_source_field(const Mesh2D& mesh, double winding_area = 5e-4,
                                 int turns = 90);

/// max_i |sum_T area H0.Curl(phi_i) - sum_T area j0 phi_i| over interior hat
/// functions phi_i, divided by max_i |sum_T area j0 phi_i|.
double curl_test_residual(const Mesh2D& mesh, const SourceModel& source);

enum class Formulation { Scalar, Vector };
const char* to_string(Formulation f);

/// Newton: exact tangents of the regularized operators. FixedSlope: a
/// constant-coefficient stiffness (nu = largest permeability in the scalar
/// form, 1/mu0 in the vector form). Both take steps that decrease the
/// discrete functional (Armijo backtracking).
enum class OuterMethod { Newton, FixedSlope };

struct FemSettings {
  SolverSettings material;
  /// Bound on |residual| / |sum of absolute element contributions and load
  /// at zero potential|.
  double outer_tol = 1e-6;
  int outer_max_iter = 500;
  int max_backtracks = 40;
  double armijo_c = 1e-4;
  OuterMethod method = OuterMethod::Newton;
  Execution execution = Execution::Parallel;
  /// Treat iron as vacuum (linear reference problems).
  bool linear_iron = false;

  void validate() const;
};

/// Raised when the outer iteration fails; carries the residual history.
class FemSolveError : public std::runtime_error {
 public:
  FemSolveError(const std::string& what, std::vector<double> residuals)
      : std::runtime_error(what), residuals_(std::move(residuals)) {}
  const std::vector<double>& residuals() const noexcept { return residuals_; }

 private:
  std::vector<double> residuals_;
};

/// Per-triangle state of a magnetostatic solution. Non-iron triangles carry
/// an empty MaterialState.
struct PotentialSolution {
  Formulation formulation = Formulation::Scalar;
  Eigen::VectorXd potential;  ///< psi (A) or a (Vs/m) at every node
  std::vector<Vector2> h;
  std::vector<Vector2> b;
  std::vector<MaterialState> states;
  int iterations = 0;
  std::vector<double> residuals;   ///< relative residual per outer iterate
  std::vector<double> functional;  ///< discrete functional per outer iterate

  /// True if the functional never increased along the outer iteration.
  bool monotone_descent() const;
};

/// Virgin states for every iron triangle of `mesh`.
std::vector<MaterialState> virgin_states(const Mesh2D& mesh, const MaterialParams& params);

/// H = I_s H0 - grad psi with psi minimizing sum_T area w*_T(H_T); one gauge
/// node (node 0) is held at zero. `start` optionally warm-starts psi.
PotentialSolution solve_scalar_step(const Mesh2D& mesh, const SourceModel& source,
                                    const MaterialParams& params, const FemSettings& settings,
                                    double current, const std::vector<MaterialState>& prev,
                                    const Eigen::VectorXd* start = nullptr);

/// B = Curl a with a minimizing sum_T area w_T(B_T) - int I_s j0 a, a = 0 on
/// the boundary.
PotentialSolution solve_vector_step(const Mesh2D& mesh, const SourceModel& source,
                                    const MaterialParams& params, const FemSettings& settings,
                                    double current, const std::vector<MaterialState>& prev,
                                    const Eigen::VectorXd* start = nullptr);

/// I_s(t) = i_max (sin(2 pi t / period) + third_harmonic sin(6 pi t / period)),
/// sampled at t_i = i period / steps, i = 1 .. steps * periods.
struct Waveform {
  double i_max = 108.0;
  double third_harmonic = 0.3;
  double period = 1.0;
  int steps = 50;  ///< per period
  int periods = 1;

  double current(double t) const;
  void validate() const;
};

struct ProbeRow {
  int step = 0;
  double t = 0.0;
  double current = 0.0;
  std::string probe;
  Vector2 h = Vector2::Zero();
  Vector2 b = Vector2::Zero();
};

struct StepReport {
  int step = 0;
  int iterations = 0;
  double residual = 0.0;
  bool monotone = true;
};

struct LoadCycleResult {
  std::vector<ProbeRow> rows;  ///< probes in the given order, per step
  std::vector<StepReport> steps;
  std::vector<MaterialState> final_states;
};

/// Steps the waveform from the virgin state, committing per-triangle states
/// after each converged step. Throws FemSolveError naming the step and the
/// formulation on failure, and InvalidArgument if a probe is not in iron.
LoadCycleResult run_load_cycle(const Mesh2D& mesh, const SourceModel& source,
                               const MaterialParams& params, const FemSettings& settings,
                               Formulation formulation, const Waveform& waveform,
                               const std::vector<ProbePoint>& probes);

/// Probe CSV: `step,t,Is,probe,Hx,Hy,Bx,By`, 17 significant digits.
void write_probe_csv(std::ostream& os, const std::vector<ProbeRow>& rows);
void write_probe_csv(const std::string& path, const std::vector<ProbeRow>& rows);

/// RMS over all rows of the B_y difference between two runs with identical
/// step and probe layout, divided by the largest |B_y| of `reference`.
double relative_rms_by(const std::vector<ProbeRow>& reference,
                       const std::vector<ProbeRow>& other);

/// Concentric-ring triangulation of the disc r <= outer_radius with `rings`
/// rings (6k nodes on ring k). Triangles inside ring `inner_rings` are tagged
/// coil_plus, the rest air.
Mesh2D build_disc_mesh(double outer_radius, int rings, int inner_rings);

/// Field of a uniform current density j in r < radius, vacuum everywhere,
/// with a = 0 on a concentric outer circle: azimuthal, |B| = mu0 j r / 2
/// inside and mu0 j radius^2 / (2 r) outside.
Vector2 disc_field(const Vector2& p, double j, double radius);

/// L2 norm of (B_h - B_exact) over the mesh with a 7-point triangle rule.
double disc_l2_error(const Mesh2D& mesh, const std::vector<Vector2>& b, double j,
                     double radius);

}  // namespace hystkit
