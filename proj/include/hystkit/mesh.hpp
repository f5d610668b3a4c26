#pragma once

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

#include "hystkit/material.hpp"

namespace hystkit {

enum class Region { Iron, CoilPlus, CoilMinus, Air };

const char* to_string(Region region);
/// Throws InvalidArgument for names other than iron, coil_plus, coil_minus, air.
Region region_from_string(const std::string& name);

/// Conforming P1 triangulation with one region tag per triangle.
/// Triangles are stored counter-clockwise.
struct Mesh2D {
  std::vector<Vector2> nodes;
  std::vector<std::array<int, 3>> triangles;
  std::vector<Region> regions;

  int node_count() const noexcept { return static_cast<int>(nodes.size()); }
  int triangle_count() const noexcept { return static_cast<int>(triangles.size()); }

  double area(int t) const;
  /// Columns are the (constant) gradients of the three hat functions on t.
  Eigen::Matrix<double, 2, 3> hat_gradients(int t) const;
  Vector2 centroid(int t) const;
  double region_area(Region region) const;
  /// Nodes on edges that belong to a single triangle, ascending.
  std::vector<int> boundary_nodes() const;

  /// Index ranges, orientation, region count and edge manifoldness.
  void validate() const;

  bool operator==(const Mesh2D&) const = default;
};

/// Splits every triangle into four through its edge midpoints.
Mesh2D refine_uniform(const Mesh2D& mesh);

/// Index of the first triangle (in storage order) containing `p`, or -1.
int locate(const Mesh2D& mesh, const Vector2& p);

/// Text format: `nodes N triangles M`, N lines `x y`, M lines `n1 n2 n3 region`,
/// numbers printed with 17 significant digits.
void write_mesh(std::ostream& os, const Mesh2D& mesh);
Mesh2D read_mesh(std::istream& is);
void write_mesh(const std::string& path, const Mesh2D& mesh);
Mesh2D read_mesh(const std::string& path);

/// Double-window three-limb core centred at the origin with one coil side in
/// each window, inside a rectangular air box. Lengths in m.
///
///      +-----------------------------+  core_height
///      | |      |        |      |  | |
///      | | +  | |        | |  - | |  |
///      | |      |        |      |  | |
///      +-----------------------------+
///        outer limb, window, centre limb, window, outer limb
///
/// The mesh is a tensor grid through every geometric edge with spacing at
/// most `mesh_size` over the core and geometric growth (`grading`) across
/// the air gap to the box.
struct GeometrySpec {
  double core_width = 0.2;
  double core_height = 0.16;
  double outer_limb = 0.04;
  double centre_limb = 0.04;
  double yoke = 0.04;
  double coil_width = 0.01;
  double coil_height = 0.05;
  /// Horizontal distance from the origin to each coil centre.
  double coil_offset = 0.03;
  double box_width = 0.6;
  double box_height = 0.48;
  double mesh_size = 0.005;
  double grading = 1.35;

  void validate() const;
};

Mesh2D build_geometry(const GeometrySpec& spec);

struct ProbePoint {
  std::string name;
  Vector2 position = Vector2::Zero();
};

/// C6 in the centre limb, C12 and C34 in the left and right outer limbs.
/// Coordinates sit off the grid lines of the default mesh and its dyadic
/// refinements, so each probe falls strictly inside one triangle.
std::vector<ProbePoint> default_probes(const GeometrySpec& spec = {});

}  // namespace hystkit
