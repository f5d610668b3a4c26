#include "hystkit/config.hpp"

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <sstream>

#include <json.hpp>

#include "hystkit/errors.hpp"

namespace hystkit {

using nlohmann::json;

namespace {

// Rejects keys outside `allowed` so that a misspelt option is an error
// rather than a silently ignored default.
void expect_keys(const json& obj, const std::string& where,
                 std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw InvalidArgument(where + ": expected an object");
  for (const auto& item : obj.items()) {
    bool known = false;
    for (const char* key : allowed) known = known || item.key() == key;
    if (!known) throw InvalidArgument(where + ": unknown key '" + item.key() + "'");
  }
}

template <class T>
void read(const json& obj, const char* key, const std::string& where, T& out) {
  const auto it = obj.find(key);
  if (it == obj.end()) return;
  try {
    out = it->template get<T>();
  } catch (const json::exception&) {
    throw InvalidArgument(where + "." + key + ": wrong type");
  }
}

template <class T>
T required(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key)) throw InvalidArgument(where + ": missing '" + key + "'");
  T out{};
  read(obj, key, where, out);
  return out;
}

MaterialParams parse_material(const json& m) {
  const std::string where = "material";
  expect_keys(m, where, {"preset", "sites", "spread"});
  const int given = m.contains("preset") + m.contains("sites") + m.contains("spread");
  if (given != 1) {
    throw InvalidArgument(where + ": give exactly one of preset, sites, spread");
  }
  MaterialParams p;
  if (m.contains("preset")) {
    p = material_preset(required<std::string>(m, "preset", where));
  } else if (m.contains("sites")) {
    const json& list = m.at("sites");
    if (!list.is_array()) throw InvalidArgument(where + ".sites: expected an array");
    for (std::size_t i = 0; i < list.size(); ++i) {
      const std::string w = where + ".sites[" + std::to_string(i) + "]";
      expect_keys(list[i], w, {"chi", "weight", "steepness", "saturation"});
      p.sites.push_back({required<double>(list[i], "chi", w), required<double>(list[i], "weight", w),
                         required<double>(list[i], "steepness", w),
                         required<double>(list[i], "saturation", w)});
    }
  } else {
    const json& s = m.at("spread");
    const std::string w = where + ".spread";
    expect_keys(s, w, {"count", "steepness", "saturation", "chi_max"});
    p = MaterialParams::linear_spread(required<int>(s, "count", w), required<double>(s, "steepness", w),
                                      required<double>(s, "saturation", w),
                                      required<double>(s, "chi_max", w));
  }
  p.validate();
  return p;
}

SolverSettings parse_solver(const json& s) {
  const std::string w = "solver";
  expect_keys(s, w, {"epsilon", "grad_tol", "max_iter", "armijo_c", "backtrack",
                     "max_backtracks", "boundary_margin"});
  SolverSettings out;
  read(s, "epsilon", w, out.epsilon);
  read(s, "grad_tol", w, out.grad_tol);
  read(s, "max_iter", w, out.max_iter);
  read(s, "armijo_c", w, out.armijo_c);
  read(s, "backtrack", w, out.backtrack);
  read(s, "max_backtracks", w, out.max_backtracks);
  read(s, "boundary_margin", w, out.boundary_margin);
  out.validate();
  return out;
}

ProtocolKind protocol_kind(const std::string& name) {
  if (name == "uniaxial_sine") return ProtocolKind::UniaxialSine;
  if (name == "rotational_ramp") return ProtocolKind::RotationalRamp;
  if (name == "multi_amplitude_sine") return ProtocolKind::MultiAmplitudeSine;
  if (name == "csv_replay") return ProtocolKind::CsvReplay;
  throw InvalidArgument("protocol.kind: unknown kind '" + name + "'");
}

Protocol parse_protocol(const json& p, const std::string& base_dir) {
  const std::string w = "protocol";
  expect_keys(p, w, {"kind", "amplitudes", "steps_per_period", "periods", "direction",
                     "ramp_time", "literal_rotational", "replay_file"});
  Protocol out;
  if (p.contains("kind")) out.kind = protocol_kind(required<std::string>(p, "kind", w));
  read(p, "amplitudes", w, out.amplitudes);
  read(p, "steps_per_period", w, out.steps_per_period);
  read(p, "periods", w, out.periods);
  read(p, "ramp_time", w, out.ramp_time);
  read(p, "literal_rotational", w, out.literal_rotational);
  if (p.contains("direction")) {
    const auto dir = required<std::string>(p, "direction", w);
    if (dir == "forward") {
      out.direction = Direction::Forward;
    } else if (dir == "inverse") {
      out.direction = Direction::Inverse;
    } else {
      throw InvalidArgument("protocol.direction: expected forward or inverse");
    }
  }
  if (p.contains("replay_file")) {
    if (out.kind != ProtocolKind::CsvReplay) {
      throw InvalidArgument("protocol.replay_file is only valid with kind csv_replay");
    }
    std::filesystem::path file = required<std::string>(p, "replay_file", w);
    if (file.is_relative()) file = std::filesystem::path(base_dir) / file;
    out.replay = read_trace_csv(file.string());
  } else if (out.kind == ProtocolKind::CsvReplay) {
    throw InvalidArgument("protocol: csv_replay needs replay_file");
  }
  out.validate();
  return out;
}

FemConfig parse_fem(const json& f) {
  const std::string w = "fem";
  expect_keys(f, w, {"geometry", "refinements", "winding_area", "turns", "waveform", "outer",
                     "probes"});
  FemConfig out;
  if (f.contains("geometry")) {
    const json& g = f.at("geometry");
    const std::string gw = w + ".geometry";
    expect_keys(g, gw, {"core_width", "core_height", "outer_limb", "centre_limb", "yoke",
                        "coil_width", "coil_height", "coil_offset", "box_width", "box_height",
                        "mesh_size", "grading"});
    GeometrySpec& s = out.geometry;
    read(g, "core_width", gw, s.core_width);
    read(g, "core_height", gw, s.core_height);
    read(g, "outer_limb", gw, s.outer_limb);
    read(g, "centre_limb", gw, s.centre_limb);
    read(g, "yoke", gw, s.yoke);
    read(g, "coil_width", gw, s.coil_width);
    read(g, "coil_height", gw, s.coil_height);
    read(g, "coil_offset", gw, s.coil_offset);
    read(g, "box_width", gw, s.box_width);
    read(g, "box_height", gw, s.box_height);
    read(g, "mesh_size", gw, s.mesh_size);
    read(g, "grading", gw, s.grading);
    s.validate();
    // probes follow the geometry unless listed explicitly
    out.probes = default_probes(s);
  }
  read(f, "refinements", w, out.refinements);
  if (out.refinements < 0 || out.refinements > 6) {
    throw InvalidArgument("fem.refinements must lie in [0, 6]");
  }
  read(f, "winding_area", w, out.winding_area);
  read(f, "turns", w, out.turns);
  if (!(out.winding_area > 0.0) || out.turns < 1) {
    throw InvalidArgument("fem: winding_area and turns must be positive");
  }
  if (f.contains("waveform")) {
    const json& wf = f.at("waveform");
    const std::string ww = w + ".waveform";
    expect_keys(wf, ww, {"i_max", "third_harmonic", "period", "steps", "periods"});
    read(wf, "i_max", ww, out.waveform.i_max);
    read(wf, "third_harmonic", ww, out.waveform.third_harmonic);
    read(wf, "period", ww, out.waveform.period);
    read(wf, "steps", ww, out.waveform.steps);
    read(wf, "periods", ww, out.waveform.periods);
  }
  out.waveform.validate();
  if (f.contains("outer")) {
    const json& o = f.at("outer");
    const std::string ow = w + ".outer";
    expect_keys(o, ow, {"tol", "max_iter", "max_backtracks", "armijo_c", "method", "serial"});
    read(o, "tol", ow, out.settings.outer_tol);
    read(o, "max_iter", ow, out.settings.outer_max_iter);
    read(o, "max_backtracks", ow, out.settings.max_backtracks);
    read(o, "armijo_c", ow, out.settings.armijo_c);
    if (o.contains("method")) {
      const auto m = required<std::string>(o, "method", ow);
      if (m == "newton") {
        out.settings.method = OuterMethod::Newton;
      } else if (m == "fixed_slope") {
        out.settings.method = OuterMethod::FixedSlope;
      } else {
        throw InvalidArgument("fem.outer.method: expected newton or fixed_slope");
      }
    }
    bool serial = false;
    read(o, "serial", ow, serial);
    out.settings.execution = serial ? Execution::Serial : Execution::Parallel;
  }
  out.settings.validate();
  if (f.contains("probes")) {
    const json& list = f.at("probes");
    if (!list.is_array() || list.empty()) {
      throw InvalidArgument("fem.probes: expected a non-empty array");
    }
    out.probes.clear();
    for (std::size_t i = 0; i < list.size(); ++i) {
      const std::string pw = w + ".probes[" + std::to_string(i) + "]";
      expect_keys(list[i], pw, {"name", "x", "y"});
      out.probes.push_back({required<std::string>(list[i], "name", pw),
                            Vector2(required<double>(list[i], "x", pw),
                                    required<double>(list[i], "y", pw))});
    }
  }
  return out;
}

}  // namespace

MaterialParams material_preset(const std::string& name) {
  if (name == "single_force") return MaterialParams::single(38.0, 1.54, 71.0);
  if (name == "spread20") return MaterialParams::linear_spread(20, 50.0, 1.54, 140.0);
  if (name == "fem_core") {
    MaterialParams p;
    for (double chi : {10.0, 30.0, 60.0, 100.0, 150.0}) p.sites.push_back({chi, 0.2, 90.302, 1.573});
    return p;
  }
  throw InvalidArgument("unknown material preset '" + name +
                        "' (expected single_force, spread20 or fem_core)");
}

Config parse_config(const std::string& text, const std::string& base_dir) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InvalidArgument(std::string("config is not valid JSON: ") + e.what());
  }
  expect_keys(root, "config", {"material", "solver", "protocol", "fem"});
  Config cfg;
  if (root.contains("material")) cfg.material = parse_material(root.at("material"));
  if (root.contains("solver")) cfg.solver = parse_solver(root.at("solver"));
  if (root.contains("protocol")) cfg.protocol = parse_protocol(root.at("protocol"), base_dir);
  if (root.contains("fem")) cfg.fem = parse_fem(root.at("fem"));
  cfg.fem.settings.material = cfg.solver;
  return cfg;
}

Config load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open config '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  const std::filesystem::path dir = std::filesystem::path(path).parent_path();
  return parse_config(text.str(), dir.empty() ? "." : dir.string());
}

}  // namespace hystkit
