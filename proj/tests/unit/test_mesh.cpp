#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "doctest.h"
#include "hystkit/errors.hpp"
#include "hystkit/mesh.hpp"

using namespace hystkit;

namespace {

bool on_box(const Vector2& p, double half_w, double half_h) {
  return std::abs(std::abs(p.x()) - half_w) < 1e-14 || std::abs(std::abs(p.y()) - half_h) < 1e-14;
}

std::string serialize(const Mesh2D& m) {
  std::ostringstream os;
  write_mesh(os, m);
  return os.str();
}

Mesh2D parse(const std::string& text) {
  std::istringstream is(text);
  return read_mesh(is);
}

}  // namespace

TEST_CASE("default geometry: size, coil areas, orientation") {
  const GeometrySpec spec;
  const Mesh2D m = build_geometry(spec);
  CHECK(m.triangle_count() >= 4000);
  CHECK(m.triangle_count() <= 8000);
  CHECK(m.region_area(Region::CoilPlus) == doctest::Approx(5e-4).epsilon(0.01));
  CHECK(m.region_area(Region::CoilMinus) == doctest::Approx(5e-4).epsilon(0.01));
  for (int t = 0; t < m.triangle_count(); ++t) REQUIRE(m.area(t) > 0.0);

  // iron = core minus the two windows
  const double windows = 2.0 * (spec.core_width / 2 - spec.outer_limb - spec.centre_limb / 2) *
                         (spec.core_height - 2 * spec.yoke);
  CHECK(m.region_area(Region::Iron) ==
        doctest::Approx(spec.core_width * spec.core_height - windows).epsilon(1e-12));
  double total = 0.0;
  for (int t = 0; t < m.triangle_count(); ++t) total += m.area(t);
  CHECK(total == doctest::Approx(spec.box_width * spec.box_height).epsilon(1e-12));
}

TEST_CASE("boundary nodes lie on the bounding box") {
  const GeometrySpec spec;
  for (const Mesh2D& m : {build_geometry(spec), refine_uniform(build_geometry(spec))}) {
    const auto boundary = m.boundary_nodes();
    CHECK(!boundary.empty());
    for (int n : boundary) {
      REQUIRE(on_box(m.nodes[n], spec.box_width / 2, spec.box_height / 2));
    }
    // and every node on the box is a boundary node
    int on = 0;
    for (const auto& p : m.nodes) on += on_box(p, spec.box_width / 2, spec.box_height / 2);
    CHECK(on == static_cast<int>(boundary.size()));
  }
}

TEST_CASE("halving the mesh size quadruples the triangle count") {
  GeometrySpec coarse;
  coarse.mesh_size = 0.01;
  const Mesh2D m = build_geometry(coarse);
  const Mesh2D r = refine_uniform(m);
  CHECK(r.triangle_count() == 4 * m.triangle_count());
  r.validate();
  for (Region region : {Region::Iron, Region::CoilPlus, Region::CoilMinus, Region::Air}) {
    CHECK(r.region_area(region) == doctest::Approx(m.region_area(region)).epsilon(1e-12));
  }
  // Halving mesh_size in the generator roughly quadruples the iron cells;
  // intervals already narrower than the new size stay single cells.
  GeometrySpec fine = coarse;
  fine.mesh_size = 0.005;
  const Mesh2D f = build_geometry(fine);
  const double core_ratio =
      static_cast<double>(std::count(f.regions.begin(), f.regions.end(), Region::Iron)) /
      std::count(m.regions.begin(), m.regions.end(), Region::Iron);
  CHECK(core_ratio == doctest::Approx(4.0).epsilon(0.1));
}

TEST_CASE("geometry keeps the mirror symmetry of the core") {
  const Mesh2D m = build_geometry({});
  // region of the triangle containing p equals that at the mirrored points
  for (const Vector2 p : {Vector2(0.031, 0.011), Vector2(0.081, 0.071), Vector2(0.2, 0.1),
                          Vector2(0.011, 0.001)}) {
    const int t = locate(m, p);
    REQUIRE(t >= 0);
    const Region r = m.regions[t];
    const Region rx = m.regions[locate(m, Vector2(-p.x(), p.y()))];
    const Region ry = m.regions[locate(m, Vector2(p.x(), -p.y()))];
    if (r == Region::CoilMinus) {
      CHECK(rx == Region::CoilPlus);
    } else {
      CHECK(rx == r);
    }
    CHECK(ry == r);
  }
}

TEST_CASE("default probes sit strictly inside iron triangles") {
  const GeometrySpec spec;
  Mesh2D m = build_geometry(spec);
  for (int level = 0; level < 3; ++level) {
    for (const auto& probe : default_probes(spec)) {
      const int t = locate(m, probe.position);
      REQUIRE(t >= 0);
      CHECK(m.regions[t] == Region::Iron);
      const auto g = m.hat_gradients(t);
      const Vector2& p0 = m.nodes[m.triangles[t][0]];
      const double l1 = g.col(1).dot(probe.position - p0);
      const double l2 = g.col(2).dot(probe.position - p0);
      CHECK(std::min({l1, l2, 1.0 - l1 - l2}) > 1e-3);
    }
    m = refine_uniform(m);
  }
  CHECK(locate(m, {10.0, 0.0}) == -1);
}

TEST_CASE("hat gradients sum to zero and reproduce linear functions") {
  const Mesh2D m = build_geometry({});
  for (int t = 0; t < m.triangle_count(); t += 97) {
    const auto g = m.hat_gradients(t);
    CHECK((g.col(0) + g.col(1) + g.col(2)).norm() < 1e-9 * g.norm());
    // grad of f(x, y) = 3x - 2y from nodal values
    Vector2 grad = Vector2::Zero();
    for (int i = 0; i < 3; ++i) {
      const Vector2& p = m.nodes[m.triangles[t][i]];
      grad += (3.0 * p.x() - 2.0 * p.y()) * g.col(i);
    }
    CHECK(grad.x() == doctest::Approx(3.0).epsilon(1e-9));
    CHECK(grad.y() == doctest::Approx(-2.0).epsilon(1e-9));
  }
}

TEST_CASE("mesh text format round-trips bit-exactly") {
  GeometrySpec spec;
  spec.mesh_size = 0.01;
  const Mesh2D m = refine_uniform(build_geometry(spec));
  const std::string text = serialize(m);
  CHECK(text.rfind("nodes " + std::to_string(m.node_count()) + " triangles " +
                       std::to_string(m.triangle_count()) + "\n",
                   0) == 0);
  const Mesh2D back = parse(text);
  CHECK(back == m);
  CHECK(serialize(back) == text);
}

TEST_CASE("malformed mesh files are rejected") {
  const std::string ok = "nodes 3 triangles 1\n0 0\n1 0\n0 1\n0 1 2 iron\n";
  CHECK(parse(ok).triangle_count() == 1);
  CHECK_THROWS_AS(parse(""), InvalidArgument);
  CHECK_THROWS_AS(parse("nodes 3 tris 1\n"), InvalidArgument);
  CHECK_THROWS_AS(parse("nodes 3 triangles 1\n0 0\n1 0\n"), InvalidArgument);
  CHECK_THROWS_AS(parse("nodes 3 triangles 1\n0 0\n1 0\n0 1\n0 1 2 copper\n"), InvalidArgument);
  CHECK_THROWS_AS(parse("nodes 3 triangles 1\n0 0\n1 0\n0 1\n0 2 1 iron\n"), InvalidArgument);
  CHECK_THROWS_AS(parse("nodes 3 triangles 1\n0 0\n1 0\n0 1\n0 1 5 iron\n"), InvalidArgument);
  CHECK_THROWS_AS(parse("nodes 3 triangles 1\n0 0\n1 x\n0 1\n0 1 2 iron\n"), InvalidArgument);
  CHECK_THROWS_AS(parse("nodes 3 triangles 1\n0 0\n1 nan\n0 1\n0 1 2 iron\n"), InvalidArgument);
  CHECK_THROWS_AS(parse(ok + "0 1 2 air\n"), InvalidArgument);
  CHECK_THROWS_AS(read_mesh(std::string("/nonexistent/mesh.txt")), InvalidArgument);
}

TEST_CASE("degenerate geometry is rejected") {
  GeometrySpec s;
  s.mesh_size = 0.0;
  CHECK_THROWS_AS(build_geometry(s), InvalidArgument);
  s = {};
  s.coil_offset = 0.07;  // coil outside its window
  CHECK_THROWS_AS(build_geometry(s), InvalidArgument);
  s = {};
  s.box_width = 0.1;  // box inside the core
  CHECK_THROWS_AS(build_geometry(s), InvalidArgument);
  s = {};
  s.centre_limb = 0.15;  // limbs overlap
  CHECK_THROWS_AS(build_geometry(s), InvalidArgument);
  s = {};
  s.grading = 0.5;
  CHECK_THROWS_AS(build_geometry(s), InvalidArgument);
}

TEST_CASE("region names") {
  for (Region r : {Region::Iron, Region::CoilPlus, Region::CoilMinus, Region::Air}) {
    CHECK(region_from_string(to_string(r)) == r);
  }
  CHECK_THROWS_AS(region_from_string("Iron"), InvalidArgument);
}
