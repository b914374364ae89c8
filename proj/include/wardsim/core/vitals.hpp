#pragma once

// Pure vital-sign computations: heart rate from pulse events, threshold
// classification and debounced responsiveness-event detection.

#include <optional>
#include <span>
#include <vector>

#include "wardsim/core/types.hpp"

namespace wardsim {

// Mean inter-beat interval, inverted, over the pulses inside the trailing
// window [t_last - window_ms, t_last]. Throws NoReading with < 2 pulses.
double compute_bpm(std::span<const TimeMs> pulse_timestamps, TimeMs window_ms);

struct Classification {
  std::optional<AlertCause> cause;  // nullopt = Normal
  bool normal() const { return !cause.has_value(); }
  friend bool operator==(const Classification&, const Classification&) = default;
};

// Throws KindMismatch for digital kinds or a measurement that does not
// belong to the sample's kind.
Classification classify(const VitalSample& sample, const Thresholds& th);
Classification classify(SensorKind kind, const Measurement& value, const Thresholds& th);

struct LevelSample {
  TimeMs t_ms = 0;
  int level = 0;  // 0 | 1
};

struct ResponsivenessEvent {
  TimeMs t_ms = 0;
  AlertCause cause = AlertCause::EyeBlinkDetected;
  friend bool operator==(const ResponsivenessEvent&, const ResponsivenessEvent&) = default;
};

// Incremental rising-edge detector with debounce. detect_edges() is a fold
// over this; the device emulator keeps one per digital kind.
class EdgeDetector {
 public:
  explicit EdgeDetector(TimeMs debounce_ms = 0) : debounce_ms_(debounce_ms) {}

  // Returns true when (t, level) is an accepted rising edge.
  bool feed(TimeMs t_ms, int level);

  std::optional<TimeMs> last_accepted() const { return last_accepted_; }
  void set_debounce(TimeMs debounce_ms) { debounce_ms_ = debounce_ms; }
  friend bool operator==(const EdgeDetector&, const EdgeDetector&) = default;

 private:
  TimeMs debounce_ms_;
  int level_ = 0;
  std::optional<TimeMs> last_accepted_;
};

// `kind` selects the reported cause (EyeBlink or BodyMotion).
std::vector<ResponsivenessEvent> detect_edges(std::span<const LevelSample> raw_levels,
                                              TimeMs debounce_ms,
                                              SensorKind kind = SensorKind::EyeBlink);

AlertCause responsiveness_cause(SensorKind digital_kind);

}  // namespace wardsim
