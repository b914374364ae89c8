#pragma once

// Seeded vital-sign generators. Analog kinds are sampled on a fixed period
// with multiplicative gaussian jitter; digital kinds are Poisson rising edges.
// Anomalies are layered on top declaratively.

#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

#include "wardsim/core/random.hpp"
#include "wardsim/core/types.hpp"

namespace wardsim {

struct PatientProfile {
  double baseline_bpm = 72.0;
  double baseline_temp_c = 36.8;
  double baseline_sys = 120.0;
  double baseline_dia = 80.0;
  // Relative standard deviations.
  double jitter_bpm = 0.02;
  double jitter_temp = 0.003;
  double jitter_sys = 0.02;
  double jitter_dia = 0.02;
  double blink_rate_per_hour = 2.0;
  double motion_rate_per_hour = 4.0;

  // Throws InvalidProfile on non-finite or non-physical values.
  void validate() const;
  // Additionally requires each baseline inside its normal range.
  void validate_against(const Thresholds& th) const;
};

struct Step {
  double delta = 0.0;
};
struct Ramp {
  double delta = 0.0;
};
struct Burst {
  std::uint32_t count = 1;
};
using AnomalyShape = std::variant<Step, Ramp, Burst>;

// Active on the half-open window [start_ms, start_ms + duration_ms).
struct AnomalySpec {
  SensorKind kind = SensorKind::HeartRate;
  TimeMs start_ms = 0;
  TimeMs duration_ms = 1;
  AnomalyShape shape = Step{};

  TimeMs end_ms() const { return start_ms + duration_ms; }
  bool covers(TimeMs t) const { return t >= start_ms && t < end_ms(); }
  // Throws InvalidAnomaly / ShapeMismatch.
  void validate() const;
};

struct SampleStream {
  SensorKind kind = SensorKind::HeartRate;
  TimeMs period_ms = 0;    // 0 for digital streams
  TimeMs duration_ms = 0;  // samples lie in [0, duration_ms)
  std::vector<VitalSample> samples;

  friend bool operator==(const SampleStream&, const SampleStream&) = default;
};

SampleStream generate_stream(const PatientProfile& profile, SensorKind kind,
                             TimeMs sample_period_ms, TimeMs duration_ms, std::uint64_t seed);

SampleStream apply_anomaly(SampleStream stream, const AnomalySpec& spec);

// Analog perturbation for one value at time t; identity outside the window.
Measurement perturb(const Measurement& value, TimeMs t_ms, const AnomalySpec& spec);

// Edge times a Burst contributes, clipped to [0, stream_duration_ms).
std::vector<TimeMs> burst_edges(const AnomalySpec& spec, TimeMs stream_duration_ms);

// Pull-based equivalent of generate_stream followed by apply_anomaly for each
// spec in order. Used for long scenarios so streams are never materialized.
class StreamCursor {
 public:
  StreamCursor(const PatientProfile& profile, SensorKind kind, TimeMs sample_period_ms,
               TimeMs duration_ms, std::uint64_t seed, std::vector<AnomalySpec> anomalies = {});

  const VitalSample* peek();
  std::optional<VitalSample> next();
  SensorKind kind() const { return kind_; }

 private:
  void fill();
  std::optional<TimeMs> next_poisson();

  PatientProfile profile_;
  SensorKind kind_;
  TimeMs period_;
  TimeMs duration_;
  Rng rng_;
  std::vector<AnomalySpec> anomalies_;

  std::optional<VitalSample> head_;
  Seq emitted_ = 0;
  // analog
  std::uint64_t index_ = 0;
  // digital
  double poisson_t_ = 0.0;
  TimeMs last_poisson_ = -1;
  std::optional<TimeMs> poisson_head_;
  bool poisson_done_ = false;
  std::vector<std::vector<TimeMs>> bursts_;
  std::vector<std::size_t> burst_pos_;
};

// Sample timestamps for a pulse train at the given heart rate; feeds the
// device's pulse-counting input path.
std::vector<TimeMs> pulses_for_rate(double bpm, TimeMs from_ms, TimeMs to_ms);

}  // namespace wardsim
