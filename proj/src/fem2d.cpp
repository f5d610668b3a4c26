#include "hystkit/fem2d.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <ostream>
#include <span>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "hystkit/errors.hpp"

namespace hystkit {

namespace {

using SparseMatrix = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;
using Grad3 = Eigen::Matrix<double, 2, 3>;

// Rows (d/dy, -d/dx): the 2D curl of a scalar field.
Grad3 curl_of(const Grad3& g) {
  Grad3 c;
  c.row(0) = g.row(1);
  c.row(1) = -g.row(0);
  return c;
}

// Maps nodal potentials to the free unknowns of one formulation and holds the
// per-triangle operator D_T taking element dofs to the element field:
// scalar H_T = I H0_T - G_T psi_T, vector B_T = C_T a_T.
struct Discretization {
  const Mesh2D& mesh;
  Formulation formulation;
  std::vector<Grad3> op;
  std::vector<double> area;
  std::vector<int> dof;  // node -> unknown index, -1 if held at zero
  int unknowns = 0;
  std::vector<int> iron;

  Discretization(const Mesh2D& m, Formulation f, bool linear_iron)
      : mesh(m), formulation(f), dof(m.node_count(), -1) {
    const int nt = m.triangle_count();
    op.reserve(nt);
    area.reserve(nt);
    for (int t = 0; t < nt; ++t) {
      const Grad3 g = m.hat_gradients(t);
      op.push_back(f == Formulation::Scalar ? g : curl_of(g));
      area.push_back(m.area(t));
      if (m.regions[t] == Region::Iron && !linear_iron) iron.push_back(t);
    }
    std::vector<char> fixed(m.node_count(), 0);
    if (f == Formulation::Scalar) {
      fixed[0] = 1;
    } else {
      for (int n : m.boundary_nodes()) fixed[n] = 1;
    }
    for (int n = 0; n < m.node_count(); ++n) {
      if (!fixed[n]) dof[n] = unknowns++;
    }
    if (unknowns == 0) throw InvalidArgument("fem: mesh has no free node");
  }

  // Field entering the material law on triangle t.
  Vector2 field(int t, const Eigen::VectorXd& x, const Vector2& base) const {
    const auto& tri = mesh.triangles[t];
    const Eigen::Vector3d local(x[tri[0]], x[tri[1]], x[tri[2]]);
    const Vector2 d = op[t] * local;
    return formulation == Formulation::Scalar ? Vector2(base - d) : Vector2(base + d);
  }

  double sign() const { return formulation == Formulation::Scalar ? -1.0 : 1.0; }

  Eigen::VectorXd expand(const Eigen::VectorXd& free) const {
    Eigen::VectorXd full = Eigen::VectorXd::Zero(mesh.node_count());
    for (int n = 0; n < mesh.node_count(); ++n) {
      if (dof[n] >= 0) full[n] = free[dof[n]];
    }
    return full;
  }

  Eigen::VectorXd to_free(const Eigen::VectorXd& full) const {
    Eigen::VectorXd free(unknowns);
    for (int n = 0; n < mesh.node_count(); ++n) {
      if (dof[n] >= 0) free[dof[n]] = full[n];
    }
    return free;
  }

  // sum_T area D_T^T M_T D_T over the free unknowns.
  SparseMatrix assemble(const std::vector<Matrix2>& coeff) const {
    std::vector<Triplet> trip;
    trip.reserve(9 * mesh.triangles.size());
    for (int t = 0; t < mesh.triangle_count(); ++t) {
      const Eigen::Matrix3d k = area[t] * op[t].transpose() * coeff[t] * op[t];
      const auto& tri = mesh.triangles[t];
      for (int i = 0; i < 3; ++i) {
        const int di = dof[tri[i]];
        if (di < 0) continue;
        for (int j = 0; j < 3; ++j) {
          const int dj = dof[tri[j]];
          if (dj >= 0) trip.emplace_back(di, dj, k(i, j));
        }
      }
    }
    SparseMatrix mat(unknowns, unknowns);
    mat.setFromTriplets(trip.begin(), trip.end());
    return mat;
  }
};

// Material response at one outer iterate.
struct Evaluation {
  double functional = 0.0;
  Eigen::VectorXd gradient;
  // Entrywise sum of |element contributions| and |load|: the size of the
  // terms that cancel in the gradient.
  Eigen::VectorXd magnitude;
  std::vector<Vector2> h, b;
  std::vector<Matrix2> tangent;  // dB/dH (scalar) or dH/dB (vector)
  std::vector<MaterialState> iron_states;
};

class StepProblem {
 public:
  StepProblem(const Discretization& disc, const SourceModel& source,
              const MaterialParams& params, const FemSettings& settings, double current,
              const std::vector<MaterialState>& prev)
      : disc_(disc), source_(source), params_(params), settings_(settings),
        current_(current), load_(Eigen::VectorXd::Zero(disc.unknowns)) {
    const auto& mesh = disc.mesh;
    iron_prev_.reserve(disc.iron.size());
    for (int t : disc.iron) iron_prev_.push_back(prev[t]);
    if (disc.formulation == Formulation::Vector) {
      for (int t = 0; t < mesh.triangle_count(); ++t) {
        const double jt = current * source.j0[t];
        if (jt == 0.0) continue;
        for (int n : mesh.triangles[t]) {
          if (disc.dof[n] >= 0) load_[disc.dof[n]] += jt * disc.area[t] / 3.0;
        }
      }
    }
  }

  const std::vector<MaterialState>& iron_prev() const { return iron_prev_; }

  Evaluation evaluate(const Eigen::VectorXd& free,
                      const std::vector<MaterialState>* start) const {
    const auto& mesh = disc_.mesh;
    const int nt = mesh.triangle_count();
    const bool scalar = disc_.formulation == Formulation::Scalar;
    const Eigen::VectorXd x = disc_.expand(free);

    Evaluation ev;
    ev.h.assign(nt, Vector2::Zero());
    ev.b.assign(nt, Vector2::Zero());
    ev.tangent.assign(nt, Matrix2::Zero());
    std::vector<Vector2> input(nt);
    for (int t = 0; t < nt; ++t) {
      const Vector2 base = scalar ? Vector2(current_ * source_.h0[t]) : Vector2::Zero();
      input[t] = disc_.field(t, x, base);
    }

    std::vector<double> density(nt, 0.0);
    for (int t = 0; t < nt; ++t) {
      const Vector2& u = input[t];
      if (scalar) {
        ev.h[t] = u;
        ev.b[t] = kMu0 * u;
        ev.tangent[t] = kMu0 * Matrix2::Identity();
        density[t] = 0.5 * kMu0 * u.squaredNorm();
      } else {
        ev.b[t] = u;
        ev.h[t] = u / kMu0;
        ev.tangent[t] = Matrix2::Identity() / kMu0;
        density[t] = 0.5 * u.squaredNorm() / kMu0;
      }
    }

    const std::size_t ni = disc_.iron.size();
    if (ni > 0) {
      std::vector<Vector2> iron_in(ni);
      for (std::size_t k = 0; k < ni; ++k) iron_in[k] = input[disc_.iron[k]];
      BatchOptions opts;
      opts.execution = settings_.execution;
      opts.tangent = true;
      if (start) opts.start = *start;
      ev.iron_states.resize(ni);
      if (scalar) {
        std::vector<ForwardResult> out(ni);
        forward_batch(params_, iron_in, iron_prev_, settings_.material, out, opts);
        for (std::size_t k = 0; k < ni; ++k) {
          const int t = disc_.iron[k];
          ev.b[t] = out[k].b;
          ev.tangent[t] = out[k].tangent;
          density[t] = out[k].coenergy;
          ev.iron_states[k] = std::move(out[k].next);
        }
      } else {
        std::vector<InverseResult> out(ni);
        inverse_batch(params_, iron_in, iron_prev_, settings_.material, out, opts);
        for (std::size_t k = 0; k < ni; ++k) {
          const int t = disc_.iron[k];
          ev.h[t] = out[k].h;
          ev.tangent[t] = out[k].tangent;
          density[t] = out[k].energy;
          ev.iron_states[k] = std::move(out[k].next);
        }
      }
    }

    // Gradient of sum_T area e_T: sign * area D_T^T (dual field).
    ev.gradient = Eigen::VectorXd::Zero(disc_.unknowns);
    ev.magnitude = load_.cwiseAbs();
    double functional = 0.0;
    for (int t = 0; t < nt; ++t) {
      functional += disc_.area[t] * density[t];
      const Vector2& dual = scalar ? ev.b[t] : ev.h[t];
      const Eigen::Vector3d g = disc_.sign() * disc_.area[t] * (disc_.op[t].transpose() * dual);
      const auto& tri = mesh.triangles[t];
      for (int i = 0; i < 3; ++i) {
        const int d = disc_.dof[tri[i]];
        if (d >= 0) {
          ev.gradient[d] += g[i];
          ev.magnitude[d] += std::abs(g[i]);
        }
      }
    }
    ev.gradient -= load_;
    ev.functional = functional - load_.dot(free);
    return ev;
  }

  // Per-triangle coefficient of the fixed-slope stiffness.
  std::vector<Matrix2> fixed_slope() const {
    const auto& mesh = disc_.mesh;
    std::vector<Matrix2> coeff(mesh.triangle_count());
    double iron_nu = 1.0 / kMu0;
    if (disc_.formulation == Formulation::Scalar) {
      // largest slope of B(H): mu0 plus the steepest anhysteretic slopes
      iron_nu = kMu0;
      for (const auto& s : params_.sites) {
        iron_nu += 4.0 * s.bound() / (std::numbers::pi * s.steepness);
      }
    }
    const double air_nu = disc_.formulation == Formulation::Scalar ? kMu0 : 1.0 / kMu0;
    for (int t = 0; t < mesh.triangle_count(); ++t) coeff[t] = air_nu * Matrix2::Identity();
    for (int t : disc_.iron) coeff[t] = iron_nu * Matrix2::Identity();
    return coeff;
  }

 private:
  const Discretization& disc_;
  const SourceModel& source_;
  const MaterialParams& params_;
  const FemSettings& settings_;
  double current_;
  Eigen::VectorXd load_;
  std::vector<MaterialState> iron_prev_;
};

PotentialSolution solve_step(Formulation formulation, const Mesh2D& mesh,
                             const SourceModel& source, const MaterialParams& params,
                             const FemSettings& settings, double current,
                             const std::vector<MaterialState>& prev,
                             const Eigen::VectorXd* start) {
  settings.validate();
  if (!std::isfinite(current)) throw InvalidArgument("fem: non-finite current");
  if (static_cast<int>(source.j0.size()) != mesh.triangle_count() ||
      static_cast<int>(source.h0.size()) != mesh.triangle_count()) {
    throw InvalidArgument("fem: source model does not match the mesh");
  }
  if (static_cast<int>(prev.size()) != mesh.triangle_count()) {
    throw InvalidArgument("fem: one material state per triangle required");
  }
  if (start && start->size() != mesh.node_count()) {
    throw InvalidArgument("fem: start potential has the wrong size");
  }

  const Discretization disc(mesh, formulation, settings.linear_iron);
  for (int t : disc.iron) prev[t].validate_for(params);
  const StepProblem problem(disc, source, params, settings, current, prev);

  Eigen::VectorXd x = Eigen::VectorXd::Zero(disc.unknowns);
  Evaluation ev = problem.evaluate(x, nullptr);
  const double reference = ev.magnitude.norm();
  if (start) {
    const Eigen::VectorXd xs = disc.to_free(*start);
    Evaluation es = problem.evaluate(xs, nullptr);
    if (es.functional < ev.functional) {
      x = xs;
      ev = std::move(es);
    }
  }

  PotentialSolution sol;
  sol.formulation = formulation;
  auto relative = [&](const Evaluation& e) {
    return reference > 0.0 ? e.gradient.norm() / reference : e.gradient.norm();
  };
  sol.residuals.push_back(relative(ev));
  sol.functional.push_back(ev.functional);

  Eigen::SimplicialLDLT<SparseMatrix> solver;
  const bool fixed = settings.method == OuterMethod::FixedSlope;
  if (fixed) {
    solver.compute(disc.assemble(problem.fixed_slope()));
    if (solver.info() != Eigen::Success) throw NumericalError("fem: stiffness factorization failed");
  }

  int it = 0;
  while (!(sol.residuals.back() <= settings.outer_tol)) {
    if (it == settings.outer_max_iter) {
      throw FemSolveError("fem: outer iteration did not reach tolerance in " +
                              std::to_string(it) + " iterations (residual " +
                              std::to_string(sol.residuals.back()) + ")",
                          sol.residuals);
    }
    if (!fixed) {
      solver.compute(disc.assemble(ev.tangent));
      if (solver.info() != Eigen::Success) {
        throw FemSolveError("fem: tangent factorization failed", sol.residuals);
      }
    }
    const Eigen::VectorXd p = solver.solve(-ev.gradient);
    const double slope = ev.gradient.dot(p);
    if (!(slope < 0.0)) throw FemSolveError("fem: no descent direction", sol.residuals);

    // Armijo on the discrete functional; near round-off, where the
    // predicted decrease is invisible in the functional, the residual decides.
    const bool roundoff = -slope <= 1e-13 * std::max(1.0, std::abs(ev.functional));
    double alpha = 1.0;
    Evaluation trial;
    bool accepted = false;
    for (int bt = 0; bt <= settings.max_backtracks; ++bt, alpha *= 0.5) {
      trial = problem.evaluate(x + alpha * p, &ev.iron_states);
      if (trial.functional <= ev.functional + settings.armijo_c * alpha * slope ||
          (roundoff && trial.functional <= ev.functional &&
           trial.gradient.norm() < ev.gradient.norm())) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      throw FemSolveError("fem: line search failed at residual " +
                              std::to_string(sol.residuals.back()),
                          sol.residuals);
    }
    x += alpha * p;
    ev = std::move(trial);
    ++it;
    sol.residuals.push_back(relative(ev));
    sol.functional.push_back(ev.functional);
  }

  sol.iterations = it;
  sol.potential = disc.expand(x);
  sol.h = std::move(ev.h);
  sol.b = std::move(ev.b);
  sol.states.assign(mesh.triangle_count(), MaterialState{});
  if (ev.iron_states.empty()) {
    for (std::size_t k = 0; k < disc.iron.size(); ++k) {
      sol.states[disc.iron[k]] = problem.iron_prev()[k];
    }
  } else {
    for (std::size_t k = 0; k < disc.iron.size(); ++k) {
      sol.states[disc.iron[k]] = std::move(ev.iron_states[k]);
    }
  }
  return sol;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

SourceModel compute_source_field(const Mesh2D& mesh, double winding_area, int turns) {
  mesh.validate();
  if (!(winding_area > 0.0) || !std::isfinite(winding_area)) {
    throw InvalidArgument("source: winding area must be positive");
  }
  if (turns <= 0) throw InvalidArgument("source: turns must be positive");
  SourceModel src;
  src.winding_area = winding_area;
  src.turns = turns;
  const int nt = mesh.triangle_count();
  src.j0.assign(nt, 0.0);
  for (int t = 0; t < nt; ++t) {
    if (mesh.regions[t] == Region::CoilPlus) src.j0[t] = 1.0 / winding_area;
    if (mesh.regions[t] == Region::CoilMinus) src.j0[t] = -1.0 / winding_area;
  }

  const Discretization disc(mesh, Formulation::Vector, true);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(disc.unknowns);
  for (int t = 0; t < nt; ++t) {
    if (src.j0[t] == 0.0) continue;
    for (int n : mesh.triangles[t]) {
      if (disc.dof[n] >= 0) rhs[disc.dof[n]] += src.j0[t] * disc.area[t] / 3.0;
    }
  }
  const std::vector<Matrix2> nu(nt, Matrix2::Identity() / kMu0);
  Eigen::SimplicialLDLT<SparseMatrix> solver(disc.assemble(nu));
  if (solver.info() != Eigen::Success) throw NumericalError("source: singular system");
  Eigen::VectorXd a = solver.solve(rhs);
  // One step of iterative refinement keeps the curl test at round-off level.
  const SparseMatrix k = disc.assemble(nu);
  a += solver.solve(rhs - k * a);
  const Eigen::VectorXd full = disc.expand(a);
  src.h0.resize(nt);
  for (int t = 0; t < nt; ++t) src.h0[t] = disc.field(t, full, Vector2::Zero()) / kMu0;
  return src;
}

double curl_test_residual(const Mesh2D& mesh, const SourceModel& source) {
  const Discretization disc(mesh, Formulation::Vector, true);
  Eigen::VectorXd lhs = Eigen::VectorXd::Zero(disc.unknowns);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(disc.unknowns);
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const Eigen::Vector3d c = disc.area[t] * (disc.op[t].transpose() * source.h0[t]);
    const auto& tri = mesh.triangles[t];
    for (int i = 0; i < 3; ++i) {
      const int d = disc.dof[tri[i]];
      if (d < 0) continue;
      lhs[d] += c[i];
      rhs[d] += source.j0[t] * disc.area[t] / 3.0;
    }
  }
  const double scale = rhs.lpNorm<Eigen::Infinity>();
  const double diff = (lhs - rhs).lpNorm<Eigen::Infinity>();
  return scale > 0.0 ? diff / scale : diff;
}

const char* to_string(Formulation f) {
  return f == Formulation::Scalar ? "scalar" : "vector";
}

void FemSettings::validate() const {
  material.validate();
  if (!(outer_tol > 0.0)) throw InvalidArgument("fem: outer_tol must be positive");
  if (outer_max_iter < 1) throw InvalidArgument("fem: outer_max_iter must be >= 1");
  if (max_backtracks < 0) throw InvalidArgument("fem: max_backtracks must be >= 0");
  if (!(armijo_c > 0.0 && armijo_c < 1.0)) throw InvalidArgument("fem: armijo_c must be in (0,1)");
}

bool PotentialSolution::monotone_descent() const {
  for (std::size_t i = 1; i < functional.size(); ++i) {
    if (functional[i] > functional[i - 1]) return false;
  }
  return true;
}

std::vector<MaterialState> virgin_states(const Mesh2D& mesh, const MaterialParams& params) {
  std::vector<MaterialState> states(mesh.triangle_count());
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    if (mesh.regions[t] == Region::Iron) states[t] = MaterialState::virgin(params);
  }
  return states;
}

PotentialSolution solve_scalar_step(const Mesh2D& mesh, const SourceModel& source,
                                    const MaterialParams& params, const FemSettings& settings,
                                    double current, const std::vector<MaterialState>& prev,
                                    const Eigen::VectorXd* start) {
  return solve_step(Formulation::Scalar, mesh, source, params, settings, current, prev, start);
}

PotentialSolution solve_vector_step(const Mesh2D& mesh, const SourceModel& source,
                                    const MaterialParams& params, const FemSettings& settings,
                                    double current, const std::vector<MaterialState>& prev,
                                    const Eigen::VectorXd* start) {
  return solve_step(Formulation::Vector, mesh, source, params, settings, current, prev, start);
}

double Waveform::current(double t) const {
  const double wt = 2.0 * std::numbers::pi * t / period;
  return i_max * (std::sin(wt) + third_harmonic * std::sin(3.0 * wt));
}

void Waveform::validate() const {
  if (!std::isfinite(i_max) || !std::isfinite(third_harmonic)) {
    throw InvalidArgument("waveform: non-finite amplitude");
  }
  if (!(period > 0.0)) throw InvalidArgument("waveform: period must be positive");
  if (steps < 1) throw InvalidArgument("waveform: steps must be >= 1");
  if (periods < 1) throw InvalidArgument("waveform: periods must be >= 1");
}

LoadCycleResult run_load_cycle(const Mesh2D& mesh, const SourceModel& source,
                               const MaterialParams& params, const FemSettings& settings,
                               Formulation formulation, const Waveform& waveform,
                               const std::vector<ProbePoint>& probes) {
  waveform.validate();
  params.validate();
  std::vector<int> probe_tri;
  for (const auto& p : probes) {
    const int t = locate(mesh, p.position);
    if (t < 0 || mesh.regions[t] != Region::Iron) {
      throw InvalidArgument("probe " + p.name + " is not inside iron");
    }
    probe_tri.push_back(t);
  }

  LoadCycleResult out;
  std::vector<MaterialState> states = virgin_states(mesh, params);
  Eigen::VectorXd potential = Eigen::VectorXd::Zero(mesh.node_count());
  for (int i = 1; i <= waveform.steps * waveform.periods; ++i) {
    const double t = waveform.period * i / waveform.steps;
    const double is = waveform.current(t);
    PotentialSolution sol;
    try {
      sol = solve_step(formulation, mesh, source, params, settings, is, states, &potential);
    } catch (const FemSolveError& e) {
      throw FemSolveError(std::string(to_string(formulation)) + " step " + std::to_string(i) +
                              ": " + e.what(),
                          e.residuals());
    } catch (const std::exception& e) {
      throw FemSolveError(std::string(to_string(formulation)) + " step " + std::to_string(i) +
                              ": " + e.what(),
                          {});
    }
    for (std::size_t k = 0; k < probes.size(); ++k) {
      const int tri = probe_tri[k];
      out.rows.push_back({i, t, is, probes[k].name, sol.h[tri], sol.b[tri]});
    }
    out.steps.push_back({i, sol.iterations, sol.residuals.back(), sol.monotone_descent()});
    potential = std::move(sol.potential);
    states = std::move(sol.states);
  }
  out.final_states = std::move(states);
  return out;
}

void write_probe_csv(std::ostream& os, const std::vector<ProbeRow>& rows) {
  os << "step,t,Is,probe,Hx,Hy,Bx,By\n";
  for (const auto& r : rows) {
    os << r.step << ',' << fmt(r.t) << ',' << fmt(r.current) << ',' << r.probe << ','
       << fmt(r.h.x()) << ',' << fmt(r.h.y()) << ',' << fmt(r.b.x()) << ',' << fmt(r.b.y())
       << '\n';
  }
}

void write_probe_csv(const std::string& path, const std::vector<ProbeRow>& rows) {
  std::ofstream os(path);
  if (!os) throw InvalidArgument("cannot open " + path + " for writing");
  write_probe_csv(os, rows);
  if (!os) throw InvalidArgument("write failed: " + path);
}

double relative_rms_by(const std::vector<ProbeRow>& reference,
                       const std::vector<ProbeRow>& other) {
  if (reference.size() != other.size() || reference.empty()) {
    throw InvalidArgument("probe traces differ in length");
  }
  double sum = 0.0;
  double peak = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    if (reference[i].step != other[i].step || reference[i].probe != other[i].probe) {
      throw InvalidArgument("probe traces differ in layout");
    }
    const double d = reference[i].b.y() - other[i].b.y();
    sum += d * d;
    peak = std::max(peak, std::abs(reference[i].b.y()));
  }
  const double rms = std::sqrt(sum / reference.size());
  return peak > 0.0 ? rms / peak : rms;
}

Mesh2D build_disc_mesh(double outer_radius, int rings, int inner_rings) {
  if (!(outer_radius > 0.0) || rings < 1 || inner_rings < 0 || inner_rings > rings) {
    throw InvalidArgument("disc mesh: need radius > 0 and 0 <= inner_rings <= rings >= 1");
  }
  Mesh2D mesh;
  mesh.nodes.emplace_back(0.0, 0.0);
  std::vector<int> first{0};  // index of the first node on each ring
  for (int k = 1; k <= rings; ++k) {
    first.push_back(mesh.node_count());
    const double r = outer_radius * k / rings;
    for (int j = 0; j < 6 * k; ++j) {
      const double phi = 2.0 * std::numbers::pi * j / (6 * k);
      mesh.nodes.emplace_back(r * std::cos(phi), r * std::sin(phi));
    }
  }
  auto add = [&](int a, int b, int c, Region region) {
    mesh.triangles.push_back({a, b, c});
    if (mesh.area(mesh.triangle_count() - 1) < 0.0) mesh.triangles.back() = {a, c, b};
    mesh.regions.push_back(region);
  };
  for (int k = 1; k <= rings; ++k) {
    const Region region = k <= inner_rings ? Region::CoilPlus : Region::Air;
    const int n_out = 6 * k;
    const int n_in = k == 1 ? 1 : 6 * (k - 1);
    auto outer = [&](int j) { return first[k] + j % n_out; };
    auto inner = [&](int i) { return k == 1 ? 0 : first[k - 1] + i % n_in; };
    if (k == 1) {
      for (int j = 0; j < n_out; ++j) add(0, outer(j), outer(j + 1), region);
      continue;
    }
    // Advance along both rings by angle, closing one triangle per step.
    int i = 0, j = 0;
    while (i < n_in || j < n_out) {
      const double next_in = static_cast<double>(i + 1) / n_in;
      const double next_out = static_cast<double>(j + 1) / n_out;
      if (j < n_out && (i == n_in || next_out <= next_in)) {
        add(inner(i), outer(j), outer(j + 1), region);
        ++j;
      } else {
        add(inner(i), outer(j), inner(i + 1), region);
        ++i;
      }
    }
  }
  mesh.validate();
  return mesh;
}

Vector2 disc_field(const Vector2& p, double j, double radius) {
  const double r2 = p.squaredNorm();
  const double scale = r2 < radius * radius ? 1.0 : radius * radius / r2;
  return 0.5 * kMu0 * j * scale * Vector2(-p.y(), p.x());
}

double disc_l2_error(const Mesh2D& mesh, const std::vector<Vector2>& b, double j,
                     double radius) {
  // Degree-5 seven-point rule on the reference triangle.
  constexpr double a1 = 0.059715871789770, b1 = 0.470142064105115;
  constexpr double a2 = 0.797426985353087, b2 = 0.101286507323456;
  constexpr double w0 = 0.225, w1 = 0.132394152788506, w2 = 0.125939180544827;
  const std::array<std::array<double, 4>, 7> rule{{{1.0 / 3, 1.0 / 3, 1.0 / 3, w0},
                                                   {a1, b1, b1, w1},
                                                   {b1, a1, b1, w1},
                                                   {b1, b1, a1, w1},
                                                   {a2, b2, b2, w2},
                                                   {b2, a2, b2, w2},
                                                   {b2, b2, a2, w2}}};
  double sum = 0.0;
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const auto& tri = mesh.triangles[t];
    double local = 0.0;
    for (const auto& q : rule) {
      const Vector2 p = q[0] * mesh.nodes[tri[0]] + q[1] * mesh.nodes[tri[1]] +
                        q[2] * mesh.nodes[tri[2]];
      local += q[3] * (b[t] - disc_field(p, j, radius)).squaredNorm();
    }
    sum += mesh.area(t) * local;
  }
  return std::sqrt(sum);
}

}  // namespace hystkit
