#include <cmath>
#include <filesystem>
#include <sstream>

#include "doctest.h"
#include "hystkit/errors.hpp"
#include "hystkit/point_driver.hpp"

using namespace hystkit;

namespace {

const MaterialParams kFig1 = MaterialParams::single(38.0, 1.54, 71.0);

Protocol sine(double hm, int periods = 3) {
  Protocol p;
  p.amplitudes = {hm};
  p.periods = periods;
  return p;
}

// Linear interpolation of H_x where J_x changes sign between rows i-1, i.
double crossing(const std::vector<TraceRow>& rows, std::size_t i) {
  const TraceRow& a = rows[i - 1];
  const TraceRow& b = rows[i];
  return a.h.x() - a.j.x() * (b.h.x() - a.h.x()) / (b.j.x() - a.j.x());
}

}  // namespace

TEST_CASE("time grid and excitation") {
  const auto ex = protocol_excitation(sine(180.0, 2));
  REQUIRE(ex.size() == 1000);
  CHECK(ex.front().step == 1);
  CHECK(ex.front().t == doctest::Approx(2.0 * M_PI / 500));
  CHECK(ex[124].h.x() == doctest::Approx(180.0));  // t = pi/2
  CHECK(ex.back().t == doctest::Approx(4.0 * M_PI));
}

TEST_CASE("coercive field equals the pinning strength") {
  const auto rows = run_protocol(kFig1, sine(600.0, 2), SolverSettings{});
  std::vector<double> descending, ascending;
  for (std::size_t i = 501; i < rows.size(); ++i) {  // second period only
    const double ja = rows[i - 1].j.x(), jb = rows[i].j.x();
    if (ja > 0.0 && jb <= 0.0) descending.push_back(crossing(rows, i));
    if (ja < 0.0 && jb >= 0.0) ascending.push_back(crossing(rows, i));
  }
  REQUIRE(descending.size() == 1);
  REQUIRE(ascending.size() == 1);
  // branch optimality U'(J) = H -/+ chi puts J = 0 at H = +chi on the
  // ascending branch and at H = -chi on the descending one
  CHECK(std::abs(ascending[0] - 71.0) <= 1.0);
  CHECK(std::abs(descending[0] + 71.0) <= 1.0);
}

namespace {

double peak_polarization(double epsilon, int spp) {
  SolverSettings s;
  s.epsilon = epsilon;
  Protocol p = sine(600.0);
  p.steps_per_period = spp;
  double peak = 0.0;
  for (const auto& r : run_protocol(kFig1, p, s)) {
    peak = std::max(peak, std::abs(r.j.x()));
  }
  return peak;
}

}  // namespace

TEST_CASE("peak polarization on the 600 A/m loop") {
  // The smoothed pinning force chi d / |d|_eps lets a pinned state creep by
  // about sqrt(eps) per step toward the anhysteretic curve, so the peak
  // approaches the closed-form branch value as eps -> 0.
  const double exact = 1.5048024748629243;
  const double p8 = peak_polarization(1e-8, 500);
  const double p10 = peak_polarization(1e-10, 500);
  const double p12 = peak_polarization(1e-12, 500);
  CHECK(std::abs(p10 - exact) <= 1e-3);
  CHECK(std::abs(p12 - exact) <= 1e-4);
  CHECK(p8 - exact > p10 - exact);
  CHECK(p10 - exact > p12 - exact);
  CHECK(p12 >= exact);
  CHECK(p8 - exact <= 0.01);
}

TEST_CASE("loops close after the first period") {
  const auto rows = run_protocol(kFig1, sine(180.0), SolverSettings{});
  for (int i = 0; i < 500; ++i) {
    CHECK((rows[500 + i].b - rows[1000 + i].b).norm() <= 1e-8);
  }
}

TEST_CASE("rotational ramp stays below saturation") {
  Protocol p;
  p.kind = ProtocolKind::RotationalRamp;
  p.amplitudes = {110.0};
  const auto rows = run_protocol(kFig1, p, SolverSettings{});
  REQUIRE(rows.size() == 1500);
  double late_min = 1e9, late_max = 0.0;
  for (const auto& r : rows) {
    CHECK(r.j.norm() < 1.54);
    if (r.t > p.ramp_time + 2.0 * M_PI) {
      late_min = std::min(late_min, r.j.norm());
      late_max = std::max(late_max, r.j.norm());
    }
  }
  CHECK(std::abs(rows.back().h.norm() - 110.0) <= 1e-9);
  CHECK(late_max - late_min <= 1e-6);  // closed rotational loop
  CHECK(rows[200].j.norm() < late_min);  // spirals outward
}

TEST_CASE("inverse direction reproduces the forward trace") {
  Protocol p = sine(180.0, 1);
  const auto fwd = run_protocol(kFig1, p, SolverSettings{});
  p.direction = Direction::Inverse;
  const auto inv = run_protocol(kFig1, p, SolverSettings{});
  REQUIRE(inv.size() == fwd.size());
  for (std::size_t i = 0; i < fwd.size(); ++i) {
    CHECK(inv[i].b == fwd[i].b);
    CHECK((inv[i].h - fwd[i].h).norm() <= 1e-6 * 180.0);
  }
}

TEST_CASE("multi-amplitude runs restart from the virgin state") {
  Protocol p;
  p.kind = ProtocolKind::MultiAmplitudeSine;
  p.amplitudes = {100.0, 300.0};
  p.periods = 1;
  const auto rows = run_protocol(kFig1, p, SolverSettings{});
  REQUIRE(rows.size() == 1000);
  CHECK(rows[500].step == 1);
  const auto alone = run_protocol(kFig1, sine(300.0, 1), SolverSettings{});
  for (int i = 0; i < 500; ++i) CHECK(rows[500 + i] == alone[i]);
}

TEST_CASE("trace CSV replays bit for bit") {
  const auto rows = run_protocol(kFig1, sine(180.0, 1), SolverSettings{});
  std::stringstream ss;
  write_trace_csv(ss, rows);
  CHECK(ss.str().rfind("step,t,Hx,Hy,Bx,By,Jx,Jy\n", 0) == 0);
  const auto back = read_trace_csv(ss);
  CHECK(back == rows);

  Protocol replay;
  replay.kind = ProtocolKind::CsvReplay;
  replay.replay = back;
  CHECK(run_protocol(kFig1, replay, SolverSettings{}) == rows);

  const auto path = std::filesystem::temp_directory_path() / "hystkit_trace_test.csv";
  write_trace_csv(path.string(), rows);
  CHECK(read_trace_csv(path.string()) == rows);
  std::filesystem::remove(path);
}

TEST_CASE("malformed input is rejected") {
  std::stringstream bad_header("a,b\n1,2\n");
  CHECK_THROWS_AS(read_trace_csv(bad_header), InvalidArgument);
  std::stringstream bad_value("step,t,Hx,Hy,Bx,By,Jx,Jy\n1,0,x,0,0,0,0,0\n");
  CHECK_THROWS_AS(read_trace_csv(bad_value), InvalidArgument);
  CHECK_THROWS(read_trace_csv(std::string("/nonexistent/trace.csv")));

  Protocol p = sine(180.0);
  p.steps_per_period = 0;
  CHECK_THROWS_AS(p.validate(), InvalidArgument);
  p = sine(180.0);
  p.amplitudes = {100.0, 200.0};
  CHECK_THROWS_AS(p.validate(), InvalidArgument);
  p = Protocol{};
  p.kind = ProtocolKind::CsvReplay;
  CHECK_THROWS_AS(p.validate(), InvalidArgument);
}

TEST_CASE("benchmark table shape and CSV") {
  BenchmarkOptions o;
  o.amplitudes = {200.0};
  o.steps_per_period = 50;
  o.repetitions = 1;
  const auto t = run_benchmark({2, 3}, SolverSettings{}, o);
  REQUIRE(t.rows.size() == 4);
  CHECK(t.rows[0].dir == Direction::Forward);
  CHECK(t.rows[1].dir == Direction::Inverse);
  for (const auto& r : t.rows) {
    CHECK(r.time_ms > 0.0);
    CHECK(r.iters > 0.0);
  }
  CHECK(t.quotient(2) == doctest::Approx(t.rows[1].time_ms / t.rows[0].time_ms));
  CHECK_THROWS(t.quotient(7));
  std::stringstream ss;
  write_bench_csv(ss, t);
  CHECK(ss.str().rfind("nchi,dir,time_ms,iters\n2,forward,", 0) == 0);
  CHECK_THROWS_AS(run_benchmark({}, SolverSettings{}), InvalidArgument);
}
