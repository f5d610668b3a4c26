#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "hystkit/material.hpp"

namespace hystkit {

enum class ProtocolKind { UniaxialSine, RotationalRamp, MultiAmplitudeSine, CsvReplay };
enum class Direction { Forward, Inverse };

/// One committed time step at a single material point.
struct TraceRow {
  int step = 0;
  double t = 0.0;
  Vector2 h = Vector2::Zero();
  Vector2 b = Vector2::Zero();
  Vector2 j = Vector2::Zero();  ///< total polarization

  bool operator==(const TraceRow&) const = default;
};

/// Excitation for `run_protocol`. Time grid t^i = 2 pi i / steps_per_period,
/// i = 1 .. steps_per_period * periods, starting from the virgin state.
///
///  - UniaxialSine: H = (Hm sin t, 0), one amplitude.
///  - MultiAmplitudeSine: one independent UniaxialSine run per amplitude,
///    concatenated; the step counter restarts at 1 for each run.
///  - RotationalRamp: Hm(t) = amplitude * min(t / ramp_time, 1),
///    H = (Hm sin t, Hm cos t); with `literal_rotational`, (Hm sin t, cos t).
///  - CsvReplay: replays `replay` rows (H columns forward, B columns inverse);
///    a step counter that does not increase starts a new run from the
///    virgin state.
///
/// Inverse direction on the synthetic protocols first runs the forward
/// operator and feeds its B sequence through the inverse operator.
struct Protocol {
  ProtocolKind kind = ProtocolKind::UniaxialSine;
  std::vector<double> amplitudes{180.0};
  int steps_per_period = 500;
  int periods = 3;
  Direction direction = Direction::Forward;
  double ramp_time = 6.0 * 3.14159265358979323846;
  bool literal_rotational = false;
  std::vector<TraceRow> replay;

  void validate() const;
};

/// Throws OperatorError naming the failing step when an operator fails.
std::vector<TraceRow> run_protocol(const MaterialParams& params,
                                   const Protocol& protocol,
                                   const SolverSettings& settings);

/// The field (forward) or flux (inverse) excitation rows of a protocol with
/// h or b filled in and everything else zero.
std::vector<TraceRow> protocol_excitation(const Protocol& protocol);

/// Trace CSV: header `step,t,Hx,Hy,Bx,By,Jx,Jy`, one row per step, values
/// printed with 17 significant digits so they read back bit-exact.
void write_trace_csv(std::ostream& os, const std::vector<TraceRow>& rows);
std::vector<TraceRow> read_trace_csv(std::istream& is);
void write_trace_csv(const std::string& path, const std::vector<TraceRow>& rows);
std::vector<TraceRow> read_trace_csv(const std::string& path);

struct BenchRow {
  int nchi = 0;
  Direction dir = Direction::Forward;
  double time_ms = 0.0;  ///< mean wall time per load step
  double iters = 0.0;    ///< mean Newton iterations per load step
};

/// Timing runs the multi-amplitude sine (one virgin-start run per amplitude).
/// Forward and inverse passes alternate, and the fastest repetition of each
/// is reported.
struct BenchmarkOptions {
  std::vector<double> amplitudes{100.0, 200.0, 300.0, 400.0, 500.0};
  int steps_per_period = 500;
  int periods = 1;
  int repetitions = 5;
  double steepness = 50.0;
  double saturation = 1.54;
  double chi_max = 140.0;
};

struct BenchmarkTable {
  std::vector<BenchRow> rows;  ///< forward and inverse row per N

  /// inverse / forward time per step for the given N.
  double quotient(int nchi) const;
};

/// Times both operators on the multi-force loop for each N in `n_chi_list`.
/// The forward iteration count is the largest per-site count of a step,
/// i.e. the iterations a joint solve over all independent sites would take.
BenchmarkTable run_benchmark(const std::vector<int>& n_chi_list,
                             const SolverSettings& settings,
                             const BenchmarkOptions& options = {});

void write_bench_csv(std::ostream& os, const BenchmarkTable& table);

const char* to_string(Direction dir);

}  // namespace hystkit
