#include "wardsim/core/vitals.hpp"

#include <algorithm>

#include "wardsim/core/errors.hpp"

namespace wardsim {

double compute_bpm(std::span<const TimeMs> pulses, TimeMs window_ms) {
  if (window_ms <= 0 || pulses.size() < 2) throw NoReading();
  const TimeMs last = pulses.back();
  // Trailing window is closed: [last - window_ms, last].
  auto first = std::lower_bound(pulses.begin(), pulses.end(), last - window_ms);
  const auto n = static_cast<std::size_t>(std::distance(first, pulses.end()));
  if (n < 2) throw NoReading();
  const double span_ms = static_cast<double>(last - *first);
  if (span_ms <= 0.0) throw NoReading();
  return 60000.0 * static_cast<double>(n - 1) / span_ms;
}

Classification classify(SensorKind kind, const Measurement& value, const Thresholds& th) {
  auto range_check = [](double v, const Range& r, AlertCause low,
                         AlertCause high) -> std::optional<AlertCause> {
    if (v < r.min) return low;
    if (v > r.max) return high;
    return std::nullopt;
  };

  switch (kind) {
    case SensorKind::HeartRate: {
      const auto* b = std::get_if<Bpm>(&value);
      if (!b) throw KindMismatch("HeartRate sample without a Bpm measurement");
      return {range_check(b->value, th.heart_rate, AlertCause::LowHeartRate,
                          AlertCause::HighHeartRate)};
    }
    case SensorKind::BodyTemperature: {
      const auto* c = std::get_if<Celsius>(&value);
      if (!c) throw KindMismatch("BodyTemperature sample without a Celsius measurement");
      return {range_check(c->value, th.temperature, AlertCause::LowTemperature,
                          AlertCause::HighTemperature)};
    }
    case SensorKind::BloodPressure: {
      const auto* p = std::get_if<Pressure>(&value);
      if (!p) throw KindMismatch("BloodPressure sample without a Pressure measurement");
      const auto sys = range_check(p->systolic, th.systolic, AlertCause::LowBloodPressure,
                                   AlertCause::HighBloodPressure);
      const auto dia = range_check(p->diastolic, th.diastolic, AlertCause::LowBloodPressure,
                                   AlertCause::HighBloodPressure);
      // Low outranks High when the two components disagree.
      if (sys == AlertCause::LowBloodPressure || dia == AlertCause::LowBloodPressure) {
        return {AlertCause::LowBloodPressure};
      }
      if (sys || dia) return {AlertCause::HighBloodPressure};
      return {};
    }
    case SensorKind::EyeBlink:
    case SensorKind::BodyMotion:
      throw KindMismatch("classify requires an analog sensor kind");
  }
  throw KindMismatch("unknown sensor kind");
}

Classification classify(const VitalSample& sample, const Thresholds& th) {
  return classify(sample.kind, sample.value, th);
}

bool EdgeDetector::feed(TimeMs t_ms, int level) {
  const int prev = level_;
  level_ = level != 0 ? 1 : 0;
  if (prev != 0 || level_ == 0) return false;
  if (last_accepted_ && t_ms - *last_accepted_ < debounce_ms_) return false;
  last_accepted_ = t_ms;
  return true;
}

AlertCause responsiveness_cause(SensorKind digital_kind) {
  if (digital_kind == SensorKind::EyeBlink) return AlertCause::EyeBlinkDetected;
  if (digital_kind == SensorKind::BodyMotion) return AlertCause::BodyMotionDetected;
  throw KindMismatch("responsiveness events require a digital sensor kind");
}

std::vector<ResponsivenessEvent> detect_edges(std::span<const LevelSample> raw_levels,
                                              TimeMs debounce_ms, SensorKind kind) {
  const AlertCause cause = responsiveness_cause(kind);
  EdgeDetector detector(debounce_ms);
  std::vector<ResponsivenessEvent> events;
  for (const auto& s : raw_levels) {
    if (detector.feed(s.t_ms, s.level)) events.push_back({s.t_ms, cause});
  }
  return events;
}

}  // namespace wardsim
