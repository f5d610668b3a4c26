#include <chrono>
#include <cstdio>
#include <algorithm>
#include <exception>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hystkit/config.hpp"
#include "hystkit/errors.hpp"
#include "hystkit/fem2d.hpp"
#include "hystkit/mesh.hpp"
#include "hystkit/point_driver.hpp"
#include "hystkit/verification.hpp"

using namespace hystkit;

namespace {

Config config_or_default(const std::string& path) {
  return path.empty() ? Config{} : load_config(path);
}

int run_loop(const std::string& config_path, const std::string& out) {
  const Config cfg = load_config(config_path);
  const MaterialParams params = cfg.material.value_or(material_preset("single_force"));
  const auto rows = run_protocol(params, cfg.protocol, cfg.solver);
  write_trace_csv(out, rows);
  std::fprintf(stderr, "wrote %zu rows to %s\n", rows.size(), out.c_str());
  return 0;
}

int run_bench(const std::string& config_path, const std::vector<int>& nchi, int repetitions,
              const std::string& out) {
  const Config cfg = config_or_default(config_path);
  BenchmarkOptions options;
  options.repetitions = repetitions;
  const BenchmarkTable table = run_benchmark(nchi, cfg.solver, options);
  write_bench_csv(std::cout, table);
  if (!out.empty()) {
    std::ofstream file(out);
    if (!file) throw InvalidArgument("cannot write '" + out + "'");
    write_bench_csv(file, table);
  }
  std::fprintf(stderr, "%6s %10s\n", "Nchi", "inv/fwd");
  for (int n : nchi) std::fprintf(stderr, "%6d %10.3f\n", n, table.quotient(n));
  return 0;
}

int run_check(const std::string& config_path) {
  const Config cfg = config_or_default(config_path);
  bool all = true;
  for (const CheckResult& r : run_duality_suite(cfg.solver)) {
    std::printf("%-4s %-48s %12.3e <= %.1e\n", r.passed ? "PASS" : "FAIL", r.name.c_str(),
                r.value, r.limit);
    all = all && r.passed;
  }
  return all ? 0 : 1;
}

int run_fem(const std::string& config_path, const std::string& formulation_name,
            const std::string& mesh_in, const std::string& out, const std::string& mesh_out) {
  const Config cfg = config_or_default(config_path);
  const Formulation formulation =
      formulation_name == "scalar" ? Formulation::Scalar : Formulation::Vector;
  const MaterialParams params = cfg.material.value_or(material_preset("fem_core"));

  Mesh2D mesh = mesh_in.empty() ? build_geometry(cfg.fem.geometry) : read_mesh(mesh_in);
  for (int i = 0; i < cfg.fem.refinements; ++i) mesh = refine_uniform(mesh);
  if (!mesh_out.empty()) write_mesh(mesh_out, mesh);

  const SourceModel source = compute_source_field(mesh, cfg.fem.winding_area, cfg.fem.turns);
  std::fprintf(stderr, "mesh: %d nodes, %d triangles; curl test residual %.2e\n",
               mesh.node_count(), mesh.triangle_count(), curl_test_residual(mesh, source));

  const auto start = std::chrono::steady_clock::now();
  const LoadCycleResult result = run_load_cycle(mesh, source, params, cfg.fem.settings,
                                                formulation, cfg.fem.waveform, cfg.fem.probes);
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  write_probe_csv(out, result.rows);

  int worst = 0;
  bool monotone = true;
  for (const StepReport& s : result.steps) {
    worst = std::max(worst, s.iterations);
    monotone = monotone && s.monotone;
  }
  std::fprintf(stderr, "%s: %zu steps in %.1f s, at most %d outer iterations, %s descent\n",
               to_string(formulation), result.steps.size(), seconds, worst,
               monotone ? "monotone" : "non-monotone");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Vector hysteresis operators and 2D magnetostatic load cycles"};
  app.require_subcommand(1);

  std::string config_path, out, mesh_in, mesh_out, formulation;
  std::vector<int> nchi{2, 5, 10, 15, 20};
  int repetitions = 5;

  auto* loop = app.add_subcommand("loop", "Run a single-point protocol and write a trace CSV");
  loop->add_option("--config", config_path, "JSON configuration")->required()->check(CLI::ExistingFile);
  loop->add_option("--out", out, "Trace CSV path")->required();

  auto* bench = app.add_subcommand("bench", "Time forward and inverse operators against N_chi");
  bench->add_option("--nchi", nchi, "Comma-separated numbers of pinning forces")
      ->delimiter(',')
      ->check(CLI::PositiveNumber);
  bench->add_option("--out", out, "Benchmark CSV path");
  bench->add_option("--config", config_path, "JSON configuration (solver settings)")
      ->check(CLI::ExistingFile);
  bench->add_option("--repetitions", repetitions, "Timing repetitions")->check(CLI::PositiveNumber);

  auto* check = app.add_subcommand("check", "Run the duality test suite");
  check->add_option("--config", config_path, "JSON configuration (solver settings)")
      ->check(CLI::ExistingFile);

  auto* fem = app.add_subcommand("fem", "Run a 2D load cycle and write probe values");
  fem->add_option("--config", config_path, "JSON configuration")->check(CLI::ExistingFile);
  fem->add_option("--formulation", formulation, "scalar or vector")
      ->required()
      ->check(CLI::IsMember({"scalar", "vector"}));
  fem->add_option("--out", out, "Probe CSV path")->required();
  fem->add_option("--mesh", mesh_in, "Read the mesh from a file instead of generating it")
      ->check(CLI::ExistingFile);
  fem->add_option("--mesh-out", mesh_out, "Write the mesh used");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*loop) return run_loop(config_path, out);
    if (*bench) return run_bench(config_path, nchi, repetitions, out);
    if (*check) return run_check(config_path);
    if (*fem) return run_fem(config_path, formulation, mesh_in, out, mesh_out);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
