#include <doctest.h>

#include <cmath>
#include <vector>

#include "wardsim/core/errors.hpp"
#include "wardsim/core/vitals.hpp"
#include "wardsim/sensors/sensor_sim.hpp"

using namespace wardsim;

namespace {

PatientProfile still() {
  PatientProfile p;
  p.jitter_bpm = p.jitter_temp = p.jitter_sys = p.jitter_dia = 0.0;
  return p;
}

double hr_of(const VitalSample& s) { return std::get<Bpm>(s.value).value; }

std::vector<VitalSample> drain(StreamCursor& c) {
  std::vector<VitalSample> out;
  while (auto s = c.next()) out.push_back(*s);
  return out;
}

}  // namespace

TEST_CASE("zero jitter gives the baseline exactly") {
  auto p = still();
  p.baseline_bpm = 72;
  auto s = generate_stream(p, SensorKind::HeartRate, 1000, 3000, 1);
  REQUIRE(s.samples.size() == 3);
  for (int i = 0; i < 3; ++i) {
    CHECK(s.samples[i].t_ms == i * 1000);
    CHECK(hr_of(s.samples[i]) == 72.0);
  }
}

TEST_CASE("zero blink rate gives an empty stream") {
  auto p = still();
  p.blink_rate_per_hour = 0;
  auto s = generate_stream(p, SensorKind::EyeBlink, 0, 24 * 3600 * 1000LL, 3);
  CHECK(s.samples.empty());
}

TEST_CASE("poisson blink count stays in the central band and is reproducible") {
  auto p = still();
  p.blink_rate_per_hour = 60;
  const TimeMs hour = 3600 * 1000;
  auto a = generate_stream(p, SensorKind::EyeBlink, 0, hour, 1234);
  auto b = generate_stream(p, SensorKind::EyeBlink, 0, hour, 1234);
  CHECK(a == b);
  CHECK(a.samples.size() >= 40);
  CHECK(a.samples.size() <= 80);

  // Sampling oracle: across many seeds the band holds the bulk of the mass
  // (Poisson(60) has sd 7.7, so [40, 80] is about +/-2.6 sd).
  int inside = 0;
  const int trials = 400;
  double total = 0;
  for (int seed = 0; seed < trials; ++seed) {
    auto s = generate_stream(p, SensorKind::EyeBlink, 0, hour, 1000 + seed);
    total += static_cast<double>(s.samples.size());
    if (s.samples.size() >= 40 && s.samples.size() <= 80) ++inside;
  }
  CHECK(inside >= trials * 97 / 100);
  CHECK(total / trials == doctest::Approx(60.0).epsilon(0.05));
}

TEST_CASE("generated seqs and times are strictly increasing") {
  PatientProfile p;
  p.blink_rate_per_hour = 500;
  for (auto kind : kAllSensorKinds) {
    auto s = generate_stream(p, kind, 1000, 3600 * 1000, 77);
    for (std::size_t i = 1; i < s.samples.size(); ++i) {
      CHECK(s.samples[i].seq > s.samples[i - 1].seq);
      CHECK(s.samples[i].t_ms > s.samples[i - 1].t_ms);
    }
  }
}

TEST_CASE("step anomaly") {
  auto p = still();
  auto s = generate_stream(p, SensorKind::HeartRate, 1000, 30000, 1);
  AnomalySpec spec{SensorKind::HeartRate, 10000, 10000, Step{-30}};
  auto out = apply_anomaly(s, spec);
  REQUIRE(out.samples.size() == s.samples.size());
  for (const auto& v : out.samples) {
    const bool in = v.t_ms >= 10000 && v.t_ms < 20000;
    CHECK(hr_of(v) == doctest::Approx(in ? 42.0 : 72.0));
  }
}

TEST_CASE("burst anomaly spaces edges evenly") {
  auto p = still();
  p.blink_rate_per_hour = 0;
  auto s = generate_stream(p, SensorKind::EyeBlink, 0, 10000, 1);
  AnomalySpec spec{SensorKind::EyeBlink, 0, 3000, Burst{3}};
  auto out = apply_anomaly(s, spec);
  REQUIRE(out.samples.size() == 3);
  CHECK(out.samples[0].t_ms == 0);
  CHECK(out.samples[1].t_ms == 1000);
  CHECK(out.samples[2].t_ms == 2000);
}

TEST_CASE("ramp anomaly at midpoint") {
  AnomalySpec spec{SensorKind::BodyTemperature, 0, 10000, Ramp{2.0}};
  auto v = perturb(Celsius{36.6}, 5000, spec);
  CHECK(std::get<Celsius>(v).value == doctest::Approx(36.6 + 2.0 * 0.5));
  auto start = perturb(Celsius{36.6}, 0, spec);
  CHECK(std::get<Celsius>(start).value == doctest::Approx(36.6));
}

TEST_CASE("perturb is identity outside the window") {
  AnomalySpec spec{SensorKind::HeartRate, 1000, 500, Step{50}};
  for (TimeMs t : {TimeMs{0}, TimeMs{999}, TimeMs{1500}, TimeMs{100000}}) {
    CHECK(perturb(Bpm{70}, t, spec) == Measurement{Bpm{70}});
  }
}

TEST_CASE("anomaly validation") {
  AnomalySpec burst_on_hr{SensorKind::HeartRate, 0, 100, Burst{2}};
  CHECK_THROWS_AS(burst_on_hr.validate(), ShapeMismatch);
  AnomalySpec step_on_blink{SensorKind::EyeBlink, 0, 100, Step{1}};
  CHECK_THROWS_AS(step_on_blink.validate(), ShapeMismatch);
  AnomalySpec zero{SensorKind::HeartRate, 0, 0, Step{1}};
  CHECK_THROWS_AS(zero.validate(), InvalidAnomaly);

  auto s = generate_stream(still(), SensorKind::HeartRate, 1000, 5000, 1);
  AnomalySpec late{SensorKind::HeartRate, 9000, 100, Step{1}};
  CHECK_THROWS_AS(apply_anomaly(s, late), InvalidAnomaly);
  AnomalySpec other{SensorKind::BodyTemperature, 0, 100, Step{1}};
  CHECK_THROWS_AS(apply_anomaly(s, other), InvalidAnomaly);
}

TEST_CASE("profile validation") {
  PatientProfile p;
  CHECK_NOTHROW(p.validate());
  p.baseline_bpm = std::nan("");
  CHECK_THROWS_AS(p.validate(), InvalidProfile);
  p = {};
  p.jitter_sys = -0.1;
  CHECK_THROWS_AS(p.validate(), InvalidProfile);
  p = {};
  p.baseline_bpm = 150;
  CHECK_NOTHROW(p.validate());
  CHECK_THROWS_AS(p.validate_against(Thresholds{}), InvalidProfile);
}

TEST_CASE("cursor matches the eager stream") {
  PatientProfile p;
  p.blink_rate_per_hour = 30;
  const TimeMs dur = 2 * 3600 * 1000;
  std::vector<AnomalySpec> hr_anoms{{SensorKind::HeartRate, 60000, 5000, Step{-40}},
                                    {SensorKind::HeartRate, 120000, 60000, Ramp{30}}};
  std::vector<AnomalySpec> blink_anoms{{SensorKind::EyeBlink, 1000, 3000, Burst{4}},
                                       {SensorKind::EyeBlink, 500000, 1000, Burst{2}}};
  for (auto kind : kAllSensorKinds) {
    const auto& anoms = kind == SensorKind::HeartRate  ? hr_anoms
                        : kind == SensorKind::EyeBlink ? blink_anoms
                                                       : std::vector<AnomalySpec>{};
    auto eager = generate_stream(p, kind, 1000, dur, 555);
    for (const auto& a : anoms) eager = apply_anomaly(eager, a);
    StreamCursor cur(p, kind, 1000, dur, 555, anoms);
    CHECK(drain(cur) == eager.samples);
  }
}

TEST_CASE("unperturbed streams classify normal at a 6 sigma margin") {
  // Jitter chosen so baseline +/- 6 sd stays inside the default ranges.
  Thresholds th;
  PatientProfile p;
  p.baseline_bpm = 85;       // range [50,120], 35/85/6 = 0.068
  p.jitter_bpm = 0.06;
  p.baseline_temp_c = 36.75;  // [35,38.5], 1.75/36.75/6 = 0.0079
  p.jitter_temp = 0.0075;
  p.baseline_sys = 125;       // [90,160], 35/125/6 = 0.046
  p.jitter_sys = 0.04;
  p.baseline_dia = 80;        // [60,100], 20/80/6 = 0.041
  p.jitter_dia = 0.04;
  for (auto kind : kAnalogKinds) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      auto s = generate_stream(p, kind, 1000, 3600 * 1000, seed);
      std::size_t abnormal = 0;
      for (const auto& v : s.samples) abnormal += classify(v, th).normal() ? 0 : 1;
      CHECK(abnormal == 0);
    }
  }
}

TEST_CASE("pulse train reproduces its rate") {
  auto pulses = pulses_for_rate(75, 0, 10000);
  REQUIRE(pulses.size() >= 2);
  CHECK(compute_bpm(pulses, 10000) == doctest::Approx(75.0).epsilon(0.01));
}
