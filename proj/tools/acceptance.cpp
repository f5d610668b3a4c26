// Acceptance run: one PASS/FAIL line per criterion. Exit status 0 only if
// every criterion passes. With --out-dir, the loop traces and probe tables
// behind criteria 1 and 7 are written for plotting.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numbers>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hystkit/fem2d.hpp"
#include "hystkit/forward.hpp"
#include "hystkit/mesh.hpp"
#include "hystkit/point_driver.hpp"
#include "hystkit/verification.hpp"

using namespace hystkit;

namespace {

// Tolerances
constexpr double kRoundtripTol = 1e-6;
constexpr double kRoundtripSeconds = 10.0;
constexpr double kCoercivityTol = 1.0;  // A/m
constexpr double kAnhystereticTol = 1e-6;  // T
constexpr double kStickTol = 1e-4;  // T
constexpr double kQuotientAtTwenty = 2.0;
constexpr double kMinIterations = 4.0;
constexpr double kMaxIterations = 15.0;
constexpr double kFemRmsTol = 0.05;
constexpr double kFemSeconds = 300.0;
constexpr double kCurlTol = 1e-10;

const MaterialParams kSingle = MaterialParams::single(38.0, 1.54, 71.0);
const MaterialParams kSpread = MaterialParams::linear_spread(20, 50.0, 1.54, 140.0);

MaterialParams fem_material() {
  MaterialParams p;
  for (double chi : {10.0, 30.0, 60.0, 100.0, 150.0}) p.sites.push_back({chi, 0.2, 90.302, 1.573});
  return p;
}

int failures = 0;

void report(int id, bool passed, const std::string& detail) {
  std::printf("criterion %d: %s  %s\n", id, passed ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  failures += !passed;
}

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Protocol sine(double hm, int periods) {
  Protocol p;
  p.amplitudes = {hm};
  p.steps_per_period = 500;
  p.periods = periods;
  return p;
}

std::vector<Vector2> h_sequence(const Protocol& p) {
  std::vector<Vector2> hs;
  for (const TraceRow& r : protocol_excitation(p)) hs.push_back(r.h);
  return hs;
}

void roundtrip(const std::string& out_dir) {
  const SolverSettings s;
  const auto t0 = std::chrono::steady_clock::now();
  const double e1 = roundtrip_error(kSingle, h_sequence(sine(180.0, 3)), s);
  const double e3 = roundtrip_error(kSpread, h_sequence(sine(500.0, 3)), s);
  const double elapsed = seconds_since(t0);
  report(1, e1 <= kRoundtripTol && e3 <= kRoundtripTol && elapsed < kRoundtripSeconds,
         fmt("roundtrip error single force %.2e, 20 forces %.2e (limit %.0e); %.1f s (limit %.0f s)",
             e1, e3, kRoundtripTol, elapsed, kRoundtripSeconds));
  if (!out_dir.empty()) {
    for (Direction dir : {Direction::Forward, Direction::Inverse}) {
      Protocol a = sine(180.0, 3), b = sine(500.0, 3);
      a.direction = b.direction = dir;
      write_trace_csv(out_dir + "/loop_single_" + to_string(dir) + ".csv",
                      run_protocol(kSingle, a, s));
      write_trace_csv(out_dir + "/loop_spread20_" + to_string(dir) + ".csv",
                      run_protocol(kSpread, b, s));
    }
  }
}

void coercivity() {
  const auto rows = run_protocol(kSingle, sine(600.0, 2), SolverSettings{});
  std::vector<double> descending, ascending;
  for (std::size_t i = 501; i < rows.size(); ++i) {  // second period
    const TraceRow& a = rows[i - 1];
    const TraceRow& b = rows[i];
    const double h = a.h.x() - a.j.x() * (b.h.x() - a.h.x()) / (b.j.x() - a.j.x());
    if (a.j.x() > 0.0 && b.j.x() <= 0.0) descending.push_back(h);
    if (a.j.x() < 0.0 && b.j.x() >= 0.0) ascending.push_back(h);
  }
  const bool shape = descending.size() == 1 && ascending.size() == 1;
  const double hd = shape ? descending[0] : NAN;
  const double ha = shape ? ascending[0] : NAN;
  report(2, shape && std::abs(hd + 71.0) <= kCoercivityTol && std::abs(ha - 71.0) <= kCoercivityTol,
         fmt("J_x = 0 at H_x = %.3f (descending), %.3f (ascending); expected -/+71 +- %.0f A/m",
             hd, ha, kCoercivityTol));
}

void anhysteretic() {
  const MaterialParams p = MaterialParams::single(38.0, 1.54, 0.0);
  const ForwardResult r = forward_update(p, {19.0, 0.0}, MaterialState::virgin(p), {});
  const Vector2 j = r.next.total();
  const double expected = 2.0 * 1.54 / std::numbers::pi * std::atan(2.0 * 19.0 / 38.0);
  const double err = (j - Vector2(expected, 0.0)).norm();
  report(3, err <= kAnhystereticTol,
         fmt("J = (%.9f, %.2e), closed form (%.9f, 0), error %.2e (limit %.0e)", j.x(), j.y(),
             expected, err, kAnhystereticTol));
}

double stick_peak(double epsilon) {
  SolverSettings s;
  s.epsilon = epsilon;
  double peak = 0.0;
  for (int d = 0; d < 24; ++d) {
    const double angle = 2.0 * std::numbers::pi * d / 24;
    for (double mag : {1.0, 10.0, 25.0, 40.0, 50.0}) {
      const Vector2 h = mag * Vector2(std::cos(angle), std::sin(angle));
      const ForwardResult r = forward_update(kSingle, h, MaterialState::virgin(kSingle), s);
      peak = std::max(peak, r.next.total().norm());
    }
  }
  return peak;
}

void stick_region() {
  const double p8 = stick_peak(1e-8);
  const double p10 = stick_peak(1e-10);
  report(4, p8 <= kStickTol && p10 < p8,
         fmt("max |J| for |H| <= 50 A/m: %.2e T at eps=1e-8 (limit %.0e), %.2e T at eps=1e-10",
             p8, kStickTol, p10));
}

void duality() {
  int failed = 0, total = 0;
  std::string worst;
  for (const CheckResult& r : run_duality_suite(SolverSettings{})) {
    ++total;
    if (!r.passed) {
      ++failed;
      worst += " [" + r.name + fmt(" = %.2e > %.0e]", r.value, r.limit);
    }
  }
  report(5, failed == 0 && total > 0,
         fmt("%d of %d checks passed (Fenchel gap, Danskin residuals, roundtrip)", total - failed,
             total) + worst);
}

void benchmark_trend() {
  const std::vector<int> ns{2, 5, 10, 15, 20};
  const BenchmarkTable table = run_benchmark(ns, SolverSettings{});
  bool monotone = true, iterations_ok = true;
  std::string quotients, iters;
  double last = 0.0;
  for (int n : ns) {
    const double q = table.quotient(n);
    monotone = monotone && q >= last;
    last = q;
    quotients += fmt(" %.2f", q);
  }
  for (const BenchRow& r : table.rows) {
    iterations_ok = iterations_ok && r.iters >= kMinIterations && r.iters <= kMaxIterations;
    iters += fmt(" %.2f", r.iters);
  }
  report(6, monotone && table.quotient(20) >= kQuotientAtTwenty && iterations_ok,
         "inverse/forward time quotient over N=2,5,10,15,20:" + quotients +
             "; mean iterations (fwd, inv per N):" + iters);
}

struct CycleRuns {
  LoadCycleResult scalar, vector;
  double seconds = 0.0;
};

CycleRuns load_cycles(const Mesh2D& mesh) {
  const SourceModel source = compute_source_field(mesh);
  const MaterialParams p = fem_material();
  const auto probes = default_probes();
  const auto t0 = std::chrono::steady_clock::now();
  CycleRuns runs;
  runs.scalar = run_load_cycle(mesh, source, p, {}, Formulation::Scalar, {}, probes);
  runs.vector = run_load_cycle(mesh, source, p, {}, Formulation::Vector, {}, probes);
  runs.seconds = seconds_since(t0);
  return runs;
}

bool all_monotone(const LoadCycleResult& r) {
  for (const StepReport& s : r.steps) {
    if (!s.monotone) return false;
  }
  return true;
}

void fem_checks(const std::string& out_dir) {
  const Mesh2D coarse = build_geometry({});
  const Mesh2D fine = refine_uniform(coarse);

  bool converged = true;
  bool monotone = true;
  double rms_coarse = NAN, rms_fine = NAN, seconds = 0.0;
  std::string failure;
  try {
    const CycleRuns a = load_cycles(coarse);
    const CycleRuns b = load_cycles(fine);
    rms_coarse = relative_rms_by(a.vector.rows, a.scalar.rows);
    rms_fine = relative_rms_by(b.vector.rows, b.scalar.rows);
    seconds = a.seconds + b.seconds;
    for (const auto* r : {&a.scalar, &a.vector, &b.scalar, &b.vector}) {
      monotone = monotone && all_monotone(*r);
    }
    if (!out_dir.empty()) {
      write_probe_csv(out_dir + "/probes_scalar.csv", a.scalar.rows);
      write_probe_csv(out_dir + "/probes_vector.csv", a.vector.rows);
      write_probe_csv(out_dir + "/probes_scalar_refined.csv", b.scalar.rows);
      write_probe_csv(out_dir + "/probes_vector_refined.csv", b.vector.rows);
      write_mesh(out_dir + "/mesh.txt", coarse);
    }
  } catch (const std::exception& e) {
    converged = false;
    failure = std::string("; ") + e.what();
  }
  report(7, converged && rms_coarse <= kFemRmsTol && rms_fine < rms_coarse && seconds < kFemSeconds,
         fmt("B_y RMS difference / peak: %.2f%% (%d triangles, limit %.0f%%), %.2f%% refined; "
             "%.0f s (limit %.0f s)",
             100 * rms_coarse, coarse.triangle_count(), 100 * kFemRmsTol, 100 * rms_fine, seconds,
             kFemSeconds) +
             failure);

  // zero current, linear disc, convergence of the nonlinear steps above
  const MaterialParams p = fem_material();
  const SourceModel source = compute_source_field(coarse);
  const auto prev = virgin_states(coarse, p);
  bool zero = true;
  for (auto solve : {&solve_scalar_step, &solve_vector_step}) {
    const auto sol = solve(coarse, source, p, {}, 0.0, prev, nullptr);
    zero = zero && sol.potential.cwiseAbs().maxCoeff() == 0.0;
    for (std::size_t t = 0; t < sol.b.size(); ++t) {
      zero = zero && sol.h[t] == Vector2::Zero() && sol.b[t] == Vector2::Zero();
    }
  }
  const double radius = 0.05, current = 1000.0;
  const double j = current / (std::numbers::pi * radius * radius);
  std::vector<double> errors;
  for (int rings : {8, 16, 32}) {
    const Mesh2D disc = build_disc_mesh(0.2, rings, rings / 4);
    const SourceModel src = compute_source_field(disc, std::numbers::pi * radius * radius);
    const auto sol =
        solve_vector_step(disc, src, MaterialParams{}, {}, current, virgin_states(disc, {}));
    errors.push_back(disc_l2_error(disc, sol.b, j, radius));
  }
  const bool decreasing = errors[1] < errors[0] && errors[2] < errors[1];
  report(8, zero && decreasing && converged && monotone,
         fmt("zero current -> zero fields: %s; disc L2(B) error %.2e, %.2e, %.2e; "
             "nonlinear steps converged: %s, monotone descent: %s",
             zero ? "yes" : "no", errors[0], errors[1], errors[2], converged ? "yes" : "no",
             monotone ? "yes" : "no"));

  const double c0 = curl_test_residual(coarse, source);
  const double c1 = curl_test_residual(fine, compute_source_field(fine));
  report(9, c0 <= kCurlTol && c1 <= kCurlTol,
         fmt("curl test residual %.2e (default mesh), %.2e (refined), limit %.0e", c0, c1,
             kCurlTol));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::string out_dir;
  app.add_option("--out-dir", out_dir, "Write loop traces and probe tables here");
  CLI11_PARSE(app, argc, argv);
  if (!out_dir.empty()) std::filesystem::create_directories(out_dir);

  try {
    roundtrip(out_dir);
    coercivity();
    anhysteretic();
    stick_region();
    duality();
    benchmark_trend();
    fem_checks(out_dir);
  } catch (const std::exception& e) {
    std::printf("aborted: %s\n", e.what());
    return 2;
  }
  std::printf("%s: %d criteria failed\n", failures == 0 ? "ALL PASS" : "FAILURES", failures);
  return failures == 0 ? 0 : 1;
}
