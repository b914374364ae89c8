#include "wardsim/sensors/sensor_sim.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "wardsim/core/errors.hpp"

namespace wardsim {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw InvalidProfile(what);
}

bool finite_nonneg(double v) { return std::isfinite(v) && v >= 0.0; }

double rate_per_hour(const PatientProfile& p, SensorKind kind) {
  return kind == SensorKind::EyeBlink ? p.blink_rate_per_hour : p.motion_rate_per_hour;
}

Measurement jittered(const PatientProfile& p, SensorKind kind, Rng& rng) {
  switch (kind) {
    case SensorKind::HeartRate:
      return Bpm{p.baseline_bpm * (1.0 + rng.normal() * p.jitter_bpm)};
    case SensorKind::BodyTemperature:
      return Celsius{p.baseline_temp_c * (1.0 + rng.normal() * p.jitter_temp)};
    case SensorKind::BloodPressure: {
      const double sys = p.baseline_sys * (1.0 + rng.normal() * p.jitter_sys);
      const double dia = p.baseline_dia * (1.0 + rng.normal() * p.jitter_dia);
      return Pressure{sys, dia};
    }
    default:
      return DigitalEdge{true};
  }
}

std::uint64_t stream_seed(std::uint64_t seed, SensorKind kind) {
  return derive_seed(seed, 0x5E45u, index_of(kind));
}

void check_overlap(const SampleStream& stream, const AnomalySpec& spec) {
  if (spec.kind != stream.kind) {
    throw InvalidAnomaly("anomaly kind " + std::string(to_string(spec.kind)) +
                         " does not match stream kind " + std::string(to_string(stream.kind)));
  }
  if (spec.start_ms >= stream.duration_ms || spec.end_ms() <= 0) {
    throw InvalidAnomaly("anomaly window does not overlap the stream");
  }
}

}  // namespace

void PatientProfile::validate() const {
  require(std::isfinite(baseline_bpm) && baseline_bpm > 0.0 && baseline_bpm < kBpmCeiling,
          "baseline_bpm must be in (0, 400)");
  require(std::isfinite(baseline_temp_c), "baseline_temp_c must be finite");
  require(std::isfinite(baseline_sys) && std::isfinite(baseline_dia) && baseline_dia > 0.0 &&
              baseline_sys > baseline_dia,
          "baseline pressure requires systolic > diastolic > 0");
  require(finite_nonneg(jitter_bpm) && finite_nonneg(jitter_temp) && finite_nonneg(jitter_sys) &&
              finite_nonneg(jitter_dia),
          "jitter fractions must be finite and >= 0");
  require(finite_nonneg(blink_rate_per_hour), "blink_rate_per_hour must be >= 0");
  require(finite_nonneg(motion_rate_per_hour), "motion_rate_per_hour must be >= 0");
}

void PatientProfile::validate_against(const Thresholds& th) const {
  validate();
  require(th.heart_rate.contains(baseline_bpm), "baseline_bpm outside heart-rate range");
  require(th.temperature.contains(baseline_temp_c), "baseline_temp_c outside temperature range");
  require(th.systolic.contains(baseline_sys), "baseline_sys outside systolic range");
  require(th.diastolic.contains(baseline_dia), "baseline_dia outside diastolic range");
}

void AnomalySpec::validate() const {
  if (duration_ms <= 0) throw InvalidAnomaly("anomaly duration_ms must be > 0");
  if (const auto* b = std::get_if<Burst>(&shape)) {
    if (is_analog(kind)) throw ShapeMismatch("Burst applies only to digital kinds");
    if (b->count < 1) throw InvalidAnomaly("Burst count must be >= 1");
  } else if (is_digital(kind)) {
    throw ShapeMismatch("Step/Ramp apply only to analog kinds");
  }
}

Measurement perturb(const Measurement& value, TimeMs t_ms, const AnomalySpec& spec) {
  if (!spec.covers(t_ms)) return value;
  double delta = 0.0;
  if (const auto* s = std::get_if<Step>(&spec.shape)) {
    delta = s->delta;
  } else if (const auto* r = std::get_if<Ramp>(&spec.shape)) {
    delta = r->delta * static_cast<double>(t_ms - spec.start_ms) /
            static_cast<double>(spec.duration_ms);
  } else {
    return value;
  }
  return std::visit(
      [delta](auto m) -> Measurement {
        using T = decltype(m);
        if constexpr (std::is_same_v<T, Bpm> || std::is_same_v<T, Celsius>) {
          m.value += delta;
        } else if constexpr (std::is_same_v<T, Pressure>) {
          m.systolic += delta;
          m.diastolic += delta;
        }
        return m;
      },
      value);
}

std::vector<TimeMs> burst_edges(const AnomalySpec& spec, TimeMs stream_duration_ms) {
  std::vector<TimeMs> edges;
  const auto* b = std::get_if<Burst>(&spec.shape);
  if (!b) return edges;
  for (std::uint32_t i = 0; i < b->count; ++i) {
    const TimeMs t = spec.start_ms + static_cast<TimeMs>(i) * spec.duration_ms / b->count;
    if (t >= 0 && t < stream_duration_ms) edges.push_back(t);
  }
  return edges;
}

SampleStream generate_stream(const PatientProfile& profile, SensorKind kind,
                             TimeMs sample_period_ms, TimeMs duration_ms, std::uint64_t seed) {
  SampleStream out;
  out.kind = kind;
  out.period_ms = is_analog(kind) ? sample_period_ms : 0;
  out.duration_ms = duration_ms;
  StreamCursor cursor(profile, kind, sample_period_ms, duration_ms, seed);
  while (auto s = cursor.next()) out.samples.push_back(std::move(*s));
  return out;
}

SampleStream apply_anomaly(SampleStream stream, const AnomalySpec& spec) {
  spec.validate();
  check_overlap(stream, spec);
  if (is_analog(stream.kind)) {
    for (auto& s : stream.samples) s.value = perturb(s.value, s.t_ms, spec);
    return stream;
  }
  for (TimeMs t : burst_edges(spec, stream.duration_ms)) {
    auto pos = std::upper_bound(stream.samples.begin(), stream.samples.end(), t,
                                [](TimeMs v, const VitalSample& s) { return v < s.t_ms; });
    VitalSample edge;
    edge.t_ms = t;
    edge.kind = stream.kind;
    edge.value = DigitalEdge{true};
    stream.samples.insert(pos, edge);
  }
  for (std::size_t i = 0; i < stream.samples.size(); ++i) stream.samples[i].seq = i;
  return stream;
}

StreamCursor::StreamCursor(const PatientProfile& profile, SensorKind kind,
                           TimeMs sample_period_ms, TimeMs duration_ms, std::uint64_t seed,
                           std::vector<AnomalySpec> anomalies)
    : profile_(profile),
      kind_(kind),
      period_(sample_period_ms),
      duration_(duration_ms),
      rng_(stream_seed(seed, kind)),
      anomalies_(std::move(anomalies)) {
  profile_.validate();
  if (is_analog(kind) && sample_period_ms <= 0) {
    throw InvalidProfile("sample_period_ms must be > 0 for analog kinds");
  }
  SampleStream span;
  span.kind = kind;
  span.duration_ms = duration_ms;
  for (const auto& a : anomalies_) {
    a.validate();
    check_overlap(span, a);
    if (is_digital(kind)) bursts_.push_back(burst_edges(a, duration_ms));
  }
  burst_pos_.assign(bursts_.size(), 0);
  if (is_digital(kind) && rate_per_hour(profile_, kind) <= 0.0) poisson_done_ = true;
}

std::optional<TimeMs> StreamCursor::next_poisson() {
  if (poisson_done_) return std::nullopt;
  const double rate_per_ms = rate_per_hour(profile_, kind_) / 3.6e6;
  poisson_t_ += rng_.exponential(rate_per_ms);
  if (!(poisson_t_ < static_cast<double>(duration_))) {
    poisson_done_ = true;
    return std::nullopt;
  }
  // Edges are strictly increasing in integer milliseconds.
  TimeMs t = static_cast<TimeMs>(std::floor(poisson_t_));
  if (t <= last_poisson_) t = last_poisson_ + 1;
  if (t >= duration_) {
    poisson_done_ = true;
    return std::nullopt;
  }
  last_poisson_ = t;
  return t;
}

void StreamCursor::fill() {
  if (head_) return;
  if (is_analog(kind_)) {
    const TimeMs t = static_cast<TimeMs>(index_) * period_;
    if (t >= duration_) return;
    VitalSample s;
    s.t_ms = t;
    s.kind = kind_;
    s.value = jittered(profile_, kind_, rng_);
    for (const auto& a : anomalies_) s.value = perturb(s.value, t, a);
    s.seq = emitted_;
    ++index_;
    head_ = std::move(s);
    return;
  }

  if (!poisson_head_ && !poisson_done_) poisson_head_ = next_poisson();
  // Ties: Poisson edges first, then bursts in declaration order.
  std::optional<TimeMs> best = poisson_head_;
  int source = best ? -1 : -2;
  for (std::size_t i = 0; i < bursts_.size(); ++i) {
    if (burst_pos_[i] >= bursts_[i].size()) continue;
    const TimeMs t = bursts_[i][burst_pos_[i]];
    if (!best || t < *best) {
      best = t;
      source = static_cast<int>(i);
    }
  }
  if (source == -2) return;
  if (source == -1) {
    poisson_head_.reset();
  } else {
    ++burst_pos_[static_cast<std::size_t>(source)];
  }
  VitalSample s;
  s.t_ms = *best;
  s.kind = kind_;
  s.value = DigitalEdge{true};
  s.seq = emitted_;
  head_ = std::move(s);
}

const VitalSample* StreamCursor::peek() {
  fill();
  return head_ ? &*head_ : nullptr;
}

std::optional<VitalSample> StreamCursor::next() {
  fill();
  if (!head_) return std::nullopt;
  std::optional<VitalSample> out = std::move(head_);
  head_.reset();
  ++emitted_;
  return out;
}

std::vector<TimeMs> pulses_for_rate(double bpm, TimeMs from_ms, TimeMs to_ms) {
  std::vector<TimeMs> out;
  if (!(bpm > 0.0)) return out;
  const double interval = 60000.0 / bpm;
  for (double t = static_cast<double>(from_ms); t < static_cast<double>(to_ms); t += interval) {
    out.push_back(static_cast<TimeMs>(std::llround(t)));
  }
  return out;
}

}  // namespace wardsim
