#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hystkit/fem2d.hpp"
#include "hystkit/point_driver.hpp"

namespace hystkit {

/// Named parameter sets:
///   single_force  A = 38, Js = 1.54 T, chi = 71 A/m, w = 1
///   spread20      20 forces, A = 50, Js = 1.54 T, chi_k = 140 (k-1)/19, w_k = 1/20
///   fem_core      5 forces, A = 90.302, Js = 1.573 T, chi = 10, 30, 60, 100, 150, w = 1/5
MaterialParams material_preset(const std::string& name);

struct FemConfig {
  GeometrySpec geometry;
  int refinements = 0;  ///< uniform refinements applied after generation
  double winding_area = 5e-4;
  int turns = 90;
  Waveform waveform;
  FemSettings settings;  ///< `settings.material` is overwritten by Config::solver
  std::vector<ProbePoint> probes = default_probes();
};

struct Config {
  std::optional<MaterialParams> material;
  SolverSettings solver;
  Protocol protocol;
  FemConfig fem;
};

/// Parses the JSON configuration; see README for the schema. Unknown keys
/// and wrong types throw InvalidArgument. A relative `replay_file` is
/// resolved against `base_dir`.
Config parse_config(const std::string& text, const std::string& base_dir = ".");
Config load_config(const std::string& path);

}  // namespace hystkit
