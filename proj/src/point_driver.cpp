#include "hystkit/point_driver.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>

#include "hystkit/errors.hpp"
#include "hystkit/forward.hpp"
#include "hystkit/inverse.hpp"

namespace hystkit {

const char* to_string(Direction dir) {
  return dir == Direction::Forward ? "forward" : "inverse";
}

void Protocol::validate() const {
  if (kind == ProtocolKind::CsvReplay) {
    if (replay.empty()) throw InvalidArgument("csv-replay protocol has no rows");
    return;
  }
  if (steps_per_period < 8) throw InvalidArgument("steps_per_period must be >= 8");
  if (periods < 1) throw InvalidArgument("periods must be >= 1");
  if (amplitudes.empty()) throw InvalidArgument("protocol needs an amplitude");
  for (double a : amplitudes) {
    if (!(a > 0.0) || !std::isfinite(a)) {
      throw InvalidArgument("amplitudes must be positive");
    }
  }
  if (kind != ProtocolKind::MultiAmplitudeSine && amplitudes.size() != 1) {
    throw InvalidArgument("only multi-amplitude-sine takes several amplitudes");
  }
  if (kind == ProtocolKind::RotationalRamp && !(ramp_time > 0.0)) {
    throw InvalidArgument("ramp_time must be positive");
  }
}

std::vector<TraceRow> protocol_excitation(const Protocol& protocol) {
  protocol.validate();
  if (protocol.kind == ProtocolKind::CsvReplay) {
    std::vector<TraceRow> rows;
    rows.reserve(protocol.replay.size());
    for (const TraceRow& r : protocol.replay) {
      TraceRow e;
      e.step = r.step;
      e.t = r.t;
      if (protocol.direction == Direction::Forward) {
        e.h = r.h;
      } else {
        e.b = r.b;
      }
      rows.push_back(e);
    }
    return rows;
  }

  const int n = protocol.steps_per_period * protocol.periods;
  std::vector<TraceRow> rows;
  rows.reserve(static_cast<std::size_t>(n) * protocol.amplitudes.size());
  for (double amplitude : protocol.amplitudes) {
    for (int i = 1; i <= n; ++i) {
      TraceRow r;
      r.step = i;
      r.t = 2.0 * std::numbers::pi * i / protocol.steps_per_period;
      if (protocol.kind == ProtocolKind::RotationalRamp) {
        const double hm = amplitude * std::min(r.t / protocol.ramp_time, 1.0);
        r.h = {hm * std::sin(r.t),
               protocol.literal_rotational ? std::cos(r.t) : hm * std::cos(r.t)};
      } else {
        r.h = {amplitude * std::sin(r.t), 0.0};
      }
      rows.push_back(r);
    }
  }
  return rows;
}

namespace {

[[noreturn]] void step_failure(const TraceRow& r, std::size_t index,
                               const std::exception& e) {
  const auto* op = dynamic_cast<const OperatorError*>(&e);
  throw OperatorError("step " + std::to_string(r.step) + " (row " +
                          std::to_string(index) + ") failed: " + e.what(),
                      op ? op->site() : -1);
}

std::vector<TraceRow> run_forward(const MaterialParams& params,
                                  const std::vector<TraceRow>& excitation,
                                  const SolverSettings& settings) {
  std::vector<TraceRow> out;
  out.reserve(excitation.size());
  MaterialState state = MaterialState::virgin(params);
  int last_step = 0;
  for (std::size_t i = 0; i < excitation.size(); ++i) {
    TraceRow r = excitation[i];
    if (r.step <= last_step) state = MaterialState::virgin(params);
    last_step = r.step;
    try {
      const ForwardResult res = forward_update(params, r.h, state, settings);
      state = res.next;
      r.b = res.b;
      r.j = state.total();
    } catch (const std::exception& e) {
      step_failure(r, i, e);
    }
    out.push_back(r);
  }
  return out;
}

std::vector<TraceRow> run_inverse(const MaterialParams& params,
                                  const std::vector<TraceRow>& excitation,
                                  const SolverSettings& settings) {
  std::vector<TraceRow> out;
  out.reserve(excitation.size());
  MaterialState state = MaterialState::virgin(params);
  int last_step = 0;
  for (std::size_t i = 0; i < excitation.size(); ++i) {
    TraceRow r = excitation[i];
    if (r.step <= last_step) state = MaterialState::virgin(params);
    last_step = r.step;
    try {
      const InverseResult res = inverse_update(params, r.b, state, settings);
      state = res.next;
      r.h = res.h;
      r.j = state.total();
    } catch (const std::exception& e) {
      step_failure(r, i, e);
    }
    out.push_back(r);
  }
  return out;
}

}  // namespace

std::vector<TraceRow> run_protocol(const MaterialParams& params,
                                   const Protocol& protocol,
                                   const SolverSettings& settings) {
  params.validate();
  settings.validate();
  std::vector<TraceRow> excitation = protocol_excitation(protocol);
  if (protocol.direction == Direction::Forward) {
    return run_forward(params, excitation, settings);
  }
  if (protocol.kind != ProtocolKind::CsvReplay) {
    excitation = run_forward(params, excitation, settings);
  }
  for (TraceRow& r : excitation) {
    r.h = Vector2::Zero();
    r.j = Vector2::Zero();
  }
  return run_inverse(params, excitation, settings);
}

void write_trace_csv(std::ostream& os, const std::vector<TraceRow>& rows) {
  os << "step,t,Hx,Hy,Bx,By,Jx,Jy\n";
  char buf[512];
  for (const TraceRow& r : rows) {
    std::snprintf(buf, sizeof buf,
                  "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.step,
                  r.t, r.h.x(), r.h.y(), r.b.x(), r.b.y(), r.j.x(), r.j.y());
    os << buf;
  }
}

namespace {

template <class T>
T parse_field(std::string_view text, int line) {
  T value{};
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
    throw InvalidArgument("trace CSV line " + std::to_string(line) +
                          ": cannot parse '" + std::string(text) + "'");
  }
  return value;
}

}  // namespace

std::vector<TraceRow> read_trace_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw InvalidArgument("trace CSV is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "step,t,Hx,Hy,Bx,By,Jx,Jy") {
    throw InvalidArgument("trace CSV header mismatch: '" + line + "'");
  }
  std::vector<TraceRow> rows;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::string_view rest(line);
    std::string_view fields[8];
    for (int f = 0; f < 8; ++f) {
      const auto comma = rest.find(',');
      if ((comma == std::string_view::npos) != (f == 7)) {
        throw InvalidArgument("trace CSV line " + std::to_string(lineno) +
                              ": expected 8 columns");
      }
      fields[f] = rest.substr(0, comma);
      if (comma != std::string_view::npos) rest.remove_prefix(comma + 1);
    }
    TraceRow r;
    r.step = parse_field<int>(fields[0], lineno);
    r.t = parse_field<double>(fields[1], lineno);
    r.h = {parse_field<double>(fields[2], lineno), parse_field<double>(fields[3], lineno)};
    r.b = {parse_field<double>(fields[4], lineno), parse_field<double>(fields[5], lineno)};
    r.j = {parse_field<double>(fields[6], lineno), parse_field<double>(fields[7], lineno)};
    rows.push_back(r);
  }
  return rows;
}

void write_trace_csv(const std::string& path, const std::vector<TraceRow>& rows) {
  std::ofstream os(path);
  if (!os) throw InvalidArgument("cannot open '" + path + "' for writing");
  write_trace_csv(os, rows);
}

std::vector<TraceRow> read_trace_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw InvalidArgument("cannot open '" + path + "'");
  return read_trace_csv(is);
}

double BenchmarkTable::quotient(int nchi) const {
  double fwd = 0.0, inv = 0.0;
  for (const BenchRow& r : rows) {
    if (r.nchi != nchi) continue;
    (r.dir == Direction::Forward ? fwd : inv) = r.time_ms;
  }
  if (!(fwd > 0.0)) throw InvalidArgument("no forward timing for this N");
  return inv / fwd;
}

BenchmarkTable run_benchmark(const std::vector<int>& n_chi_list,
                             const SolverSettings& settings,
                             const BenchmarkOptions& options) {
  if (n_chi_list.empty()) throw InvalidArgument("n_chi_list is empty");
  if (options.repetitions < 1) throw InvalidArgument("repetitions must be >= 1");
  using clock = std::chrono::steady_clock;

  Protocol protocol;
  protocol.kind = ProtocolKind::MultiAmplitudeSine;
  protocol.amplitudes = options.amplitudes;
  protocol.steps_per_period = options.steps_per_period;
  protocol.periods = options.periods;
  protocol.validate();
  const std::vector<TraceRow> excitation = protocol_excitation(protocol);
  const auto steps = static_cast<double>(excitation.size());

  BenchmarkTable table;
  for (int nchi : n_chi_list) {
    const MaterialParams params = MaterialParams::linear_spread(
        nchi, options.steepness, options.saturation, options.chi_max);
    const MaterialState virgin = MaterialState::virgin(params);

    std::vector<Vector2> fluxes(excitation.size());
    long fwd_iters = 0;
    auto forward_pass = [&] {
      fwd_iters = 0;
      MaterialState state = virgin;
      for (std::size_t i = 0; i < excitation.size(); ++i) {
        if (i > 0 && excitation[i].step <= excitation[i - 1].step) state = virgin;
        const ForwardResult res =
            forward_update(params, excitation[i].h, state, settings);
        state = res.next;
        fluxes[i] = res.b;
        fwd_iters += res.max_iterations;
      }
    };
    long inv_iters = 0;
    auto inverse_pass = [&] {
      inv_iters = 0;
      MaterialState state = virgin;
      for (std::size_t i = 0; i < excitation.size(); ++i) {
        if (i > 0 && excitation[i].step <= excitation[i - 1].step) state = virgin;
        const InverseResult res =
            inverse_update(params, fluxes[i], state, settings);
        state = res.next;
        inv_iters += res.iterations;
      }
    };
    auto timed = [&](auto&& pass) {
      const auto t0 = clock::now();
      pass();
      const std::chrono::duration<double, std::milli> dt = clock::now() - t0;
      return dt.count() / steps;
    };

    forward_pass();  // warm-up; also produces the fluxes
    inverse_pass();
    double fwd_ms = std::numeric_limits<double>::infinity();
    double inv_ms = fwd_ms;
    for (int rep = 0; rep < options.repetitions; ++rep) {
      fwd_ms = std::min(fwd_ms, timed(forward_pass));
      inv_ms = std::min(inv_ms, timed(inverse_pass));
    }
    table.rows.push_back({nchi, Direction::Forward, fwd_ms, fwd_iters / steps});
    table.rows.push_back({nchi, Direction::Inverse, inv_ms, inv_iters / steps});
  }
  return table;
}

void write_bench_csv(std::ostream& os, const BenchmarkTable& table) {
  os << "nchi,dir,time_ms,iters\n";
  char buf[256];
  for (const BenchRow& r : table.rows) {
    std::snprintf(buf, sizeof buf, "%d,%s,%.9g,%.6g\n", r.nchi, to_string(r.dir),
                  r.time_ms, r.iters);
    os << buf;
  }
}

}  // namespace hystkit
