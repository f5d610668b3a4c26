#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <sstream>

#include "doctest.h"
#include "hystkit/errors.hpp"
#include "hystkit/fem2d.hpp"
#include "hystkit/forward.hpp"
#include "hystkit/inverse.hpp"

using namespace hystkit;

namespace {

MaterialParams core_material() {
  MaterialParams p;
  for (double chi : {10.0, 30.0, 60.0, 100.0, 150.0}) p.sites.push_back({chi, 0.2, 90.302, 1.573});
  return p;
}

const GeometrySpec& coarse_spec() {
  static const GeometrySpec spec = [] {
    GeometrySpec s;
    s.mesh_size = 0.01;
    return s;
  }();
  return spec;
}

const Mesh2D& coarse_mesh() {
  static const Mesh2D mesh = build_geometry(coarse_spec());
  return mesh;
}

const SourceModel& coarse_source() {
  static const SourceModel src = compute_source_field(coarse_mesh());
  return src;
}

double max_norm(const std::vector<Vector2>& v) {
  double m = 0.0;
  for (const auto& x : v) m = std::max(m, x.norm());
  return m;
}

}  // namespace

TEST_CASE("source field satisfies the discrete curl test") {
  const Mesh2D mesh = build_geometry({});
  const SourceModel src = compute_source_field(mesh);
  CHECK(curl_test_residual(mesh, src) <= 1e-10);
  CHECK(curl_test_residual(refine_uniform(mesh), compute_source_field(refine_uniform(mesh))) <=
        1e-10);

  // unit total current on each coil, with opposite signs
  double plus = 0.0, minus = 0.0;
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    if (mesh.regions[t] == Region::CoilPlus) plus += src.j0[t] * mesh.area(t);
    if (mesh.regions[t] == Region::CoilMinus) minus += src.j0[t] * mesh.area(t);
  }
  CHECK(plus == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(minus == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("source field decays toward the outer boundary") {
  const Mesh2D& mesh = coarse_mesh();
  const SourceModel& src = coarse_source();
  const auto boundary = mesh.boundary_nodes();
  std::vector<char> on_boundary(mesh.node_count(), 0);
  for (int n : boundary) on_boundary[n] = 1;
  double outer = 0.0, coils = 0.0;
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const auto& tri = mesh.triangles[t];
    if (on_boundary[tri[0]] || on_boundary[tri[1]] || on_boundary[tri[2]]) {
      outer = std::max(outer, src.h0[t].norm());
    }
    if (mesh.regions[t] == Region::CoilPlus || mesh.regions[t] == Region::CoilMinus) {
      coils = std::max(coils, src.h0[t].norm());
    }
  }
  CHECK(coils > 0.0);
  CHECK(outer < 0.1 * coils);
}

TEST_CASE("no coil current gives no source field") {
  Mesh2D mesh = coarse_mesh();
  for (auto& r : mesh.regions) {
    if (r == Region::CoilPlus || r == Region::CoilMinus) r = Region::Air;
  }
  const SourceModel src = compute_source_field(mesh);
  CHECK(max_norm(src.h0) == 0.0);
  CHECK(curl_test_residual(mesh, src) == 0.0);
}

TEST_CASE("source computation rejects meshes without interior nodes") {
  Mesh2D single;
  single.nodes = {{0, 0}, {1, 0}, {0, 1}};
  single.triangles = {{0, 1, 2}};
  single.regions = {Region::CoilPlus};
  CHECK_THROWS_AS(compute_source_field(single), InvalidArgument);
  CHECK_THROWS_AS(compute_source_field(coarse_mesh(), -1.0), InvalidArgument);
}

TEST_CASE("zero current from the virgin state gives identically zero fields") {
  const auto p = core_material();
  const auto prev = virgin_states(coarse_mesh(), p);
  for (auto solve : {&solve_scalar_step, &solve_vector_step}) {
    const auto sol = solve(coarse_mesh(), coarse_source(), p, {}, 0.0, prev, nullptr);
    CHECK(sol.potential.cwiseAbs().maxCoeff() == 0.0);
    CHECK(max_norm(sol.h) == 0.0);
    CHECK(max_norm(sol.b) == 0.0);
    CHECK(sol.iterations == 0);
    CHECK(sol.states == prev);
  }
}

TEST_CASE("linear problem: both formulations give the same field") {
  FemSettings s;
  s.linear_iron = true;
  const auto p = core_material();
  const auto prev = virgin_states(coarse_mesh(), p);
  const auto sc = solve_scalar_step(coarse_mesh(), coarse_source(), p, s, 50.0, prev);
  const auto ve = solve_vector_step(coarse_mesh(), coarse_source(), p, s, 50.0, prev);
  const double peak = max_norm(ve.b);
  CHECK(peak > 0.0);
  for (int t = 0; t < coarse_mesh().triangle_count(); ++t) {
    REQUIRE((sc.b[t] - ve.b[t]).norm() <= 1e-9 * peak);
  }
  // a linear problem needs a single Newton step, with either outer method
  CHECK(ve.iterations == 1);
  s.method = OuterMethod::FixedSlope;
  const auto fixed = solve_vector_step(coarse_mesh(), coarse_source(), p, s, 50.0, prev);
  CHECK(fixed.iterations == 1);
  CHECK((fixed.potential - ve.potential).norm() <= 1e-9 * ve.potential.norm());
}

TEST_CASE("hysteretic steps: material law holds on every iron triangle") {
  const auto p = core_material();
  const auto& mesh = coarse_mesh();
  const auto prev = virgin_states(mesh, p);
  const auto sc = solve_scalar_step(mesh, coarse_source(), p, {}, 80.0, prev);
  const auto ve = solve_vector_step(mesh, coarse_source(), p, {}, 80.0, prev);
  for (const auto* sol : {&sc, &ve}) {
    CHECK(sol->residuals.back() <= 1e-6);
    CHECK(sol->monotone_descent());
    double worst = 0.0;
    for (int t = 0; t < mesh.triangle_count(); ++t) {
      if (mesh.regions[t] != Region::Iron) {
        CHECK(sol->states[t].size() == 0);
        continue;
      }
      const Vector2 b = kMu0 * sol->h[t] + sol->states[t].total();
      worst = std::max(worst, (b - sol->b[t]).norm());
    }
    CHECK(worst <= 1e-9);
  }
}

TEST_CASE("element responses agree with stand-alone operator calls") {
  const auto p = core_material();
  const auto& mesh = coarse_mesh();
  const auto prev = virgin_states(mesh, p);
  const auto sc = solve_scalar_step(mesh, coarse_source(), p, {}, 80.0, prev);
  const auto ve = solve_vector_step(mesh, coarse_source(), p, {}, 80.0, prev);
  double fwd = 0.0, inv = 0.0;
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    if (mesh.regions[t] != Region::Iron) continue;
    fwd = std::max(fwd, (forward_update(p, sc.h[t], prev[t], {}).b - sc.b[t]).norm());
    inv = std::max(inv, (inverse_update(p, ve.b[t], prev[t], {}).h - ve.h[t]).norm() /
                            std::max(1.0, ve.h[t].norm()));
  }
  CHECK(fwd <= 1e-9);
  CHECK(inv <= 1e-6);
}

TEST_CASE("vector potential flux is continuous across every interior edge") {
  const auto p = core_material();
  const auto& mesh = coarse_mesh();
  const auto ve = solve_vector_step(mesh, coarse_source(), p, {}, 80.0, virgin_states(mesh, p));
  std::map<std::pair<int, int>, std::vector<int>> edges;
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const auto& tri = mesh.triangles[t];
    for (int e = 0; e < 3; ++e) {
      const int a = tri[e], b = tri[(e + 1) % 3];
      edges[{std::min(a, b), std::max(a, b)}].push_back(t);
    }
  }
  const double peak = max_norm(ve.b);
  double worst = 0.0;
  for (const auto& [edge, tris] : edges) {
    if (tris.size() != 2) continue;
    const Vector2 d = mesh.nodes[edge.second] - mesh.nodes[edge.first];
    const Vector2 n = Vector2(d.y(), -d.x()).normalized();
    worst = std::max(worst, std::abs((ve.b[tris[0]] - ve.b[tris[1]]).dot(n)));
  }
  CHECK(worst <= 1e-12 * peak);
}

TEST_CASE("serial and parallel element evaluation give identical solutions") {
  const auto p = core_material();
  const auto& mesh = coarse_mesh();
  const auto prev = virgin_states(mesh, p);
  FemSettings serial;
  serial.execution = Execution::Serial;
  FemSettings parallel;
  parallel.execution = Execution::Parallel;
  for (auto solve : {&solve_scalar_step, &solve_vector_step}) {
    const auto a = solve(mesh, coarse_source(), p, serial, 90.0, prev, nullptr);
    const auto b = solve(mesh, coarse_source(), p, parallel, 90.0, prev, nullptr);
    CHECK(a.potential == b.potential);
    CHECK(a.states == b.states);
    CHECK(a.functional == b.functional);
  }
}

TEST_CASE("fixed-slope iteration descends monotonically") {
  const auto p = core_material();
  const auto& mesh = coarse_mesh();
  FemSettings s;
  s.method = OuterMethod::FixedSlope;
  s.outer_max_iter = 2000;
  const auto sol = solve_scalar_step(mesh, coarse_source(), p, s, 20.0, virgin_states(mesh, p));
  CHECK(sol.residuals.back() <= s.outer_tol);
  CHECK(sol.monotone_descent());
  const auto newton = solve_scalar_step(mesh, coarse_source(), p, {}, 20.0, virgin_states(mesh, p));
  CHECK(sol.iterations > newton.iterations);
  double worst = 0.0;
  for (int t = 0; t < mesh.triangle_count(); ++t) worst = std::max(worst, (sol.b[t] - newton.b[t]).norm());
  CHECK(worst <= 1e-4 * max_norm(newton.b));
}

TEST_CASE("load cycle: convergence, descent, probe layout and loop area") {
  const auto p = core_material();
  const auto& mesh = coarse_mesh();
  Waveform w;
  w.steps = 24;
  w.periods = 2;
  const auto probes = default_probes(coarse_spec());
  for (Formulation f : {Formulation::Scalar, Formulation::Vector}) {
    const auto run = run_load_cycle(mesh, coarse_source(), p, {}, f, w, probes);
    REQUIRE(run.rows.size() == probes.size() * 48);
    REQUIRE(run.steps.size() == 48);
    for (const auto& st : run.steps) {
      CHECK(st.residual <= 1e-6);
      CHECK(st.monotone);
      CHECK(st.iterations <= 500);
    }
    CHECK(run.rows[0].probe == "C6");
    CHECK(run.rows[1].probe == "C12");
    CHECK(run.rows[3].step == 2);
    CHECK(run.rows[0].current == doctest::Approx(w.current(w.period / 24)));
    // Loss per cycle: the integral of H dB over the second period at C6 is
    // positive (the C6 field runs along the centre limb).
    double loss = 0.0;
    std::vector<ProbeRow> c6;
    for (const auto& r : run.rows) {
      if (r.probe == "C6" && r.step >= 24) c6.push_back(r);
    }
    for (std::size_t i = 1; i < c6.size(); ++i) {
      loss += 0.5 * (c6[i].h.y() + c6[i - 1].h.y()) * (c6[i].b.y() - c6[i - 1].b.y());
    }
    CHECK(loss > 0.0);
    CHECK(std::abs(run.rows[0].b.x()) < 0.1 * std::abs(run.rows[0].b.y()));
  }
}

TEST_CASE("load cycle: zero waveform keeps every probe at zero") {
  const auto p = core_material();
  Waveform w;
  w.i_max = 0.0;
  w.steps = 5;
  for (Formulation f : {Formulation::Scalar, Formulation::Vector}) {
    const auto run = run_load_cycle(coarse_mesh(), coarse_source(), p, {}, f, w,
                                    default_probes(coarse_spec()));
    for (const auto& r : run.rows) {
      CHECK(r.h == Vector2::Zero());
      CHECK(r.b == Vector2::Zero());
    }
  }
}

TEST_CASE("load cycle: failures name the step and formulation") {
  const auto p = core_material();
  FemSettings s;
  s.outer_max_iter = 1;
  Waveform w;
  w.steps = 4;
  try {
    run_load_cycle(coarse_mesh(), coarse_source(), p, s, Formulation::Vector, w,
                   default_probes(coarse_spec()));
    FAIL("expected FemSolveError");
  } catch (const FemSolveError& e) {
    CHECK(std::string(e.what()).find("vector step 1") != std::string::npos);
    CHECK(e.residuals().size() == 2);
  }
  CHECK_THROWS_AS(run_load_cycle(coarse_mesh(), coarse_source(), p, {}, Formulation::Scalar, w,
                                 {{"air", {0.25, 0.2}}}),
                  InvalidArgument);
  w.steps = 0;
  CHECK_THROWS_AS(run_load_cycle(coarse_mesh(), coarse_source(), p, {}, Formulation::Scalar, w,
                                 default_probes(coarse_spec())),
                  InvalidArgument);
}

TEST_CASE("probe CSV layout") {
  std::ostringstream os;
  write_probe_csv(os, {{3, 0.06, 12.5, "C6", {1.0, -2.0}, {0.25, 0.125}}});
  CHECK(os.str() == "step,t,Is,probe,Hx,Hy,Bx,By\n3,0.059999999999999998,12.5,C6,1,-2,0.25,0.125\n");
  const std::vector<ProbeRow> a{{1, 0.1, 1.0, "C6", {}, {0.0, 2.0}}, {1, 0.1, 1.0, "C12", {}, {0.0, -1.0}}};
  auto b = a;
  b[0].b.y() = 1.8;
  CHECK(relative_rms_by(a, b) == doctest::Approx(std::sqrt(0.02) / 2.0));
  b[1].probe = "C34";
  CHECK_THROWS_AS(relative_rms_by(a, b), InvalidArgument);
}

TEST_CASE("linear disc: L2 error of B decreases under refinement") {
  const double radius = 0.05, outer = 0.2, current = 1000.0;
  const double j = current / (std::numbers::pi * radius * radius);
  std::vector<double> errors;
  for (int rings : {8, 16, 32}) {
    const Mesh2D mesh = build_disc_mesh(outer, rings, rings / 4);
    CHECK(mesh.triangle_count() == 6 * rings * rings);
    const SourceModel src = compute_source_field(mesh, std::numbers::pi * radius * radius);
    const auto sol = solve_vector_step(mesh, src, MaterialParams{}, {}, current,
                                       virgin_states(mesh, MaterialParams{}));
    errors.push_back(disc_l2_error(mesh, sol.b, j, radius));
  }
  CHECK(errors[1] < errors[0]);
  CHECK(errors[2] < errors[1]);
  // piecewise constant B from P1 potentials converges at first order
  CHECK(std::log2(errors[1] / errors[2]) > 0.8);
}

TEST_CASE("disc oracle field") {
  const double mu0 = kMu0;
  const Vector2 inside = disc_field({0.01, 0.0}, 2.0, 0.05);
  CHECK(inside.x() == 0.0);
  CHECK(inside.y() == doctest::Approx(mu0 * 2.0 * 0.01 / 2));
  const Vector2 outside = disc_field({0.0, 0.1}, 2.0, 0.05);
  CHECK(outside.x() == doctest::Approx(-mu0 * 2.0 * 0.05 * 0.05 / (2 * 0.1)));
  CHECK_THROWS_AS(build_disc_mesh(1.0, 0, 0), InvalidArgument);
  CHECK_THROWS_AS(build_disc_mesh(1.0, 4, 5), InvalidArgument);
}

TEST_CASE("fem settings validation") {
  FemSettings s;
  s.outer_tol = 0.0;
  CHECK_THROWS_AS(s.validate(), InvalidArgument);
  s = {};
  s.outer_max_iter = 0;
  CHECK_THROWS_AS(s.validate(), InvalidArgument);
  const auto p = core_material();
  std::vector<MaterialState> wrong(3);
  CHECK_THROWS_AS(solve_scalar_step(coarse_mesh(), coarse_source(), p, {}, 1.0, wrong),
                  InvalidArgument);
}
