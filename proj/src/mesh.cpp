#include "hystkit/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <utility>

#include "hystkit/errors.hpp"

namespace hystkit {

namespace {

constexpr std::array<const char*, 4> kRegionNames{"iron", "coil_plus", "coil_minus", "air"};

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(const std::string& token, const std::string& what) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(token, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != token.size() || !std::isfinite(v)) {
    throw InvalidArgument("mesh: bad number '" + token + "' in " + what);
  }
  return v;
}

using Edge = std::pair<int, int>;

Edge make_edge(int a, int b) { return a < b ? Edge{a, b} : Edge{b, a}; }

std::map<Edge, int> edge_counts(const Mesh2D& mesh) {
  std::map<Edge, int> count;
  for (const auto& tri : mesh.triangles) {
    for (int e = 0; e < 3; ++e) ++count[make_edge(tri[e], tri[(e + 1) % 3])];
  }
  return count;
}

// Interval sizes growing by `ratio` from `first`, rescaled to sum to `length`.
std::vector<double> graded_intervals(double length, double first, double ratio) {
  std::vector<double> sizes;
  double sum = 0.0;
  double size = first;
  while (sum < length * (1.0 - 1e-12)) {
    sizes.push_back(size);
    sum += size;
    size *= ratio;
  }
  for (double& s : sizes) s *= length / sum;
  return sizes;
}

// Grid coordinates on [-box/2, box/2]: uniform spacing <= h between the core
// breakpoints, graded spacing from the core edge to the box.
std::vector<double> grid_axis(std::vector<double> breaks, double core_half,
                              double box_half, double h, double grading) {
  breaks.push_back(-core_half);
  breaks.push_back(core_half);
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end(),
                           [](double a, double b) { return std::abs(a - b) < 1e-12; }),
               breaks.end());
  std::vector<double> axis{-box_half};
  const auto air = graded_intervals(box_half - core_half, h, grading);
  double x = -box_half;
  for (auto it = air.rbegin(); it != air.rend(); ++it) {
    x += *it;
    axis.push_back(x);
  }
  axis.back() = -core_half;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    const double a = breaks[i];
    const double b = breaks[i + 1];
    const int n = std::max(1, static_cast<int>(std::ceil((b - a) / h - 1e-9)));
    for (int k = 1; k <= n; ++k) axis.push_back(k == n ? b : a + (b - a) * k / n);
  }
  x = core_half;
  for (double s : air) {
    x += s;
    axis.push_back(x);
  }
  axis.back() = box_half;
  return axis;
}

bool inside(double v, double lo, double hi) { return v > lo && v < hi; }

}  // namespace

const char* to_string(Region region) {
  return kRegionNames[static_cast<std::size_t>(region)];
}

Region region_from_string(const std::string& name) {
  for (std::size_t i = 0; i < kRegionNames.size(); ++i) {
    if (name == kRegionNames[i]) return static_cast<Region>(i);
  }
  throw InvalidArgument("unknown region '" + name + "'");
}

double Mesh2D::area(int t) const {
  const auto& tri = triangles[t];
  const Vector2 e1 = nodes[tri[1]] - nodes[tri[0]];
  const Vector2 e2 = nodes[tri[2]] - nodes[tri[0]];
  return 0.5 * (e1.x() * e2.y() - e1.y() * e2.x());
}

Eigen::Matrix<double, 2, 3> Mesh2D::hat_gradients(int t) const {
  const auto& tri = triangles[t];
  const double two_area = 2.0 * area(t);
  Eigen::Matrix<double, 2, 3> g;
  for (int i = 0; i < 3; ++i) {
    const Vector2& pj = nodes[tri[(i + 1) % 3]];
    const Vector2& pk = nodes[tri[(i + 2) % 3]];
    g(0, i) = (pj.y() - pk.y()) / two_area;
    g(1, i) = (pk.x() - pj.x()) / two_area;
  }
  return g;
}

Vector2 Mesh2D::centroid(int t) const {
  const auto& tri = triangles[t];
  return (nodes[tri[0]] + nodes[tri[1]] + nodes[tri[2]]) / 3.0;
}

double Mesh2D::region_area(Region region) const {
  double sum = 0.0;
  for (int t = 0; t < triangle_count(); ++t) {
    if (regions[t] == region) sum += area(t);
  }
  return sum;
}

std::vector<int> Mesh2D::boundary_nodes() const {
  std::vector<int> out;
  for (const auto& [edge, count] : edge_counts(*this)) {
    if (count == 1) {
      out.push_back(edge.first);
      out.push_back(edge.second);
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

void Mesh2D::validate() const {
  if (nodes.empty() || triangles.empty()) throw InvalidArgument("mesh: empty");
  if (regions.size() != triangles.size()) {
    throw InvalidArgument("mesh: one region tag per triangle required");
  }
  for (const auto& p : nodes) {
    if (!is_finite(p)) throw InvalidArgument("mesh: non-finite node");
  }
  for (int t = 0; t < triangle_count(); ++t) {
    for (int n : triangles[t]) {
      if (n < 0 || n >= node_count()) {
        throw InvalidArgument("mesh: triangle " + std::to_string(t) + " references a missing node");
      }
    }
    if (!(area(t) > 0.0)) {
      throw InvalidArgument("mesh: triangle " + std::to_string(t) + " is degenerate or clockwise");
    }
  }
  for (const auto& [edge, count] : edge_counts(*this)) {
    if (count > 2) throw InvalidArgument("mesh: edge shared by more than two triangles");
  }
}

Mesh2D refine_uniform(const Mesh2D& mesh) {
  Mesh2D out;
  out.nodes = mesh.nodes;
  std::map<Edge, int> midpoint;
  auto mid = [&](int a, int b) {
    const auto [it, fresh] = midpoint.try_emplace(make_edge(a, b), out.node_count());
    if (fresh) out.nodes.push_back(0.5 * (mesh.nodes[a] + mesh.nodes[b]));
    return it->second;
  };
  out.triangles.reserve(4 * mesh.triangles.size());
  out.regions.reserve(4 * mesh.triangles.size());
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const auto [a, b, c] = mesh.triangles[t];
    const int ab = mid(a, b);
    const int bc = mid(b, c);
    const int ca = mid(c, a);
    for (const std::array<int, 3>& child :
         {std::array{a, ab, ca}, std::array{ab, b, bc}, std::array{ca, bc, c},
          std::array{ab, bc, ca}}) {
      out.triangles.push_back(child);
      out.regions.push_back(mesh.regions[t]);
    }
  }
  return out;
}

int locate(const Mesh2D& mesh, const Vector2& p) {
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const auto& tri = mesh.triangles[t];
    const Eigen::Matrix<double, 2, 3> g = mesh.hat_gradients(t);
    const Vector2& p0 = mesh.nodes[tri[0]];
    const double l1 = g.col(1).dot(p - p0);
    const double l2 = g.col(2).dot(p - p0);
    const double l0 = 1.0 - l1 - l2;
    constexpr double tol = -1e-12;
    if (l0 >= tol && l1 >= tol && l2 >= tol) return t;
  }
  return -1;
}

void write_mesh(std::ostream& os, const Mesh2D& mesh) {
  os << "nodes " << mesh.node_count() << " triangles " << mesh.triangle_count() << '\n';
  for (const auto& p : mesh.nodes) {
    os << format_double(p.x()) << ' ' << format_double(p.y()) << '\n';
  }
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const auto& tri = mesh.triangles[t];
    os << tri[0] << ' ' << tri[1] << ' ' << tri[2] << ' ' << to_string(mesh.regions[t]) << '\n';
  }
}

Mesh2D read_mesh(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw InvalidArgument("mesh: missing header");
  std::istringstream header(line);
  std::string kw_nodes, kw_tris, extra;
  long n = -1, m = -1;
  if (!(header >> kw_nodes >> n >> kw_tris >> m) || kw_nodes != "nodes" ||
      kw_tris != "triangles" || n < 0 || m < 0 || (header >> extra)) {
    throw InvalidArgument("mesh: header must read 'nodes <N> triangles <M>'");
  }
  Mesh2D mesh;
  mesh.nodes.reserve(n);
  for (long i = 0; i < n; ++i) {
    if (!std::getline(is, line)) throw InvalidArgument("mesh: truncated node list");
    std::istringstream row(line);
    std::string x, y;
    if (!(row >> x >> y) || (row >> extra)) {
      throw InvalidArgument("mesh: node line " + std::to_string(i) + " needs 'x y'");
    }
    mesh.nodes.emplace_back(parse_double(x, "node " + std::to_string(i)),
                            parse_double(y, "node " + std::to_string(i)));
  }
  mesh.triangles.reserve(m);
  mesh.regions.reserve(m);
  for (long i = 0; i < m; ++i) {
    if (!std::getline(is, line)) throw InvalidArgument("mesh: truncated triangle list");
    std::istringstream row(line);
    std::array<int, 3> tri{};
    std::string region;
    if (!(row >> tri[0] >> tri[1] >> tri[2] >> region) || (row >> extra)) {
      throw InvalidArgument("mesh: triangle line " + std::to_string(i) +
                            " needs 'n1 n2 n3 region'");
    }
    mesh.triangles.push_back(tri);
    mesh.regions.push_back(region_from_string(region));
  }
  while (std::getline(is, line)) {
    if (line.find_first_not_of(" \t\r") != std::string::npos) {
      throw InvalidArgument("mesh: trailing content after triangle list");
    }
  }
  mesh.validate();
  return mesh;
}

void write_mesh(const std::string& path, const Mesh2D& mesh) {
  std::ofstream os(path);
  if (!os) throw InvalidArgument("cannot open " + path + " for writing");
  write_mesh(os, mesh);
  if (!os) throw InvalidArgument("write failed: " + path);
}

Mesh2D read_mesh(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw InvalidArgument("cannot open " + path);
  return read_mesh(is);
}

void GeometrySpec::validate() const {
  for (double v : {core_width, core_height, outer_limb, centre_limb, yoke, coil_width,
                   coil_height, box_width, box_height, mesh_size}) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw InvalidArgument("geometry: lengths and mesh size must be positive");
    }
  }
  if (!(grading >= 1.0) || !std::isfinite(grading)) {
    throw InvalidArgument("geometry: grading must be >= 1");
  }
  const double window_lo = centre_limb / 2;
  const double window_hi = core_width / 2 - outer_limb;
  if (!(window_hi > window_lo)) throw InvalidArgument("geometry: limbs leave no window");
  if (!(core_height / 2 - yoke > 0.0)) throw InvalidArgument("geometry: yokes leave no window");
  if (!(coil_offset - coil_width / 2 > window_lo) || !(coil_offset + coil_width / 2 < window_hi) ||
      !(coil_height / 2 < core_height / 2 - yoke)) {
    throw InvalidArgument("geometry: coil must lie strictly inside its window");
  }
  if (!(box_width > core_width) || !(box_height > core_height)) {
    throw InvalidArgument("geometry: air box must enclose the core");
  }
  if (!(mesh_size <= std::min(coil_width, coil_height))) {
    throw InvalidArgument("geometry: mesh size must resolve the coil");
  }
}

Mesh2D build_geometry(const GeometrySpec& spec) {
  spec.validate();
  const double cx = spec.core_width / 2;
  const double cy = spec.core_height / 2;
  const double wx_lo = spec.centre_limb / 2;
  const double wx_hi = cx - spec.outer_limb;
  const double wy = cy - spec.yoke;
  const double k_lo = spec.coil_offset - spec.coil_width / 2;
  const double k_hi = spec.coil_offset + spec.coil_width / 2;
  const double ky = spec.coil_height / 2;

  const auto xs = grid_axis({-wx_hi, -k_hi, -k_lo, -wx_lo, wx_lo, k_lo, k_hi, wx_hi}, cx,
                            spec.box_width / 2, spec.mesh_size, spec.grading);
  const auto ys = grid_axis({-wy, -ky, ky, wy}, cy, spec.box_height / 2, spec.mesh_size,
                            spec.grading);

  Mesh2D mesh;
  const int nx = static_cast<int>(xs.size());
  const int ny = static_cast<int>(ys.size());
  mesh.nodes.reserve(static_cast<std::size_t>(nx) * ny);
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) mesh.nodes.emplace_back(xs[i], ys[j]);
  }
  auto id = [nx](int i, int j) { return j * nx + i; };

  auto classify = [&](double x, double y) {
    const double ax = std::abs(x);
    if (inside(ax, k_lo, k_hi) && inside(y, -ky, ky)) {
      return x < 0 ? Region::CoilPlus : Region::CoilMinus;
    }
    if (ax >= cx || std::abs(y) >= cy) return Region::Air;
    if (inside(ax, wx_lo, wx_hi) && inside(y, -wy, wy)) return Region::Air;
    return Region::Iron;
  };

  for (int j = 0; j + 1 < ny; ++j) {
    for (int i = 0; i + 1 < nx; ++i) {
      const int a = id(i, j), b = id(i + 1, j), c = id(i + 1, j + 1), d = id(i, j + 1);
      const double xm = 0.5 * (xs[i] + xs[i + 1]);
      const double ym = 0.5 * (ys[j] + ys[j + 1]);
      const Region region = classify(xm, ym);
      // Diagonals mirror across both axes so the mesh keeps the geometry's symmetry.
      if (xm * ym > 0.0) {
        mesh.triangles.push_back({a, b, c});
        mesh.triangles.push_back({a, c, d});
      } else {
        mesh.triangles.push_back({a, b, d});
        mesh.triangles.push_back({b, c, d});
      }
      mesh.regions.push_back(region);
      mesh.regions.push_back(region);
    }
  }
  mesh.validate();
  return mesh;
}

std::vector<ProbePoint> default_probes(const GeometrySpec& spec) {
  const double limb_x = spec.core_width / 2 - spec.outer_limb / 2;
  return {{"C6", {0.0013, 0.0021}},
          {"C12", {-limb_x + 0.0013, 0.0021}},
          {"C34", {limb_x + 0.0013, 0.0021}}};
}

}  // namespace hystkit
