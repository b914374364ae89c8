#pragma once

// Domain types shared by every wardsim module.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace wardsim {

using TimeMs = std::int64_t;  // virtual-clock milliseconds since scenario start
using Seq = std::uint64_t;

enum class SensorKind : std::uint8_t {
  HeartRate,
  BodyTemperature,
  BloodPressure,
  EyeBlink,
  BodyMotion,
};

inline constexpr std::array<SensorKind, 5> kAllSensorKinds = {
    SensorKind::HeartRate, SensorKind::BodyTemperature, SensorKind::BloodPressure,
    SensorKind::EyeBlink, SensorKind::BodyMotion};

inline constexpr std::array<SensorKind, 3> kAnalogKinds = {
    SensorKind::HeartRate, SensorKind::BodyTemperature, SensorKind::BloodPressure};

constexpr bool is_digital(SensorKind k) {
  return k == SensorKind::EyeBlink || k == SensorKind::BodyMotion;
}
constexpr bool is_analog(SensorKind k) { return !is_digital(k); }
constexpr std::size_t index_of(SensorKind k) { return static_cast<std::size_t>(k); }

// Wire codes: HR, TEMP, BP, BLINK, MOTION.
std::string_view wire_code(SensorKind k);
std::optional<SensorKind> sensor_kind_from_wire(std::string_view code);

struct Bpm {
  double value = 0.0;
  friend bool operator==(const Bpm&, const Bpm&) = default;
};
struct Celsius {
  double value = 0.0;
  friend bool operator==(const Celsius&, const Celsius&) = default;
};
struct Pressure {
  double systolic = 0.0;
  double diastolic = 0.0;
  friend bool operator==(const Pressure&, const Pressure&) = default;
};
struct DigitalEdge {
  bool rising = true;
  friend bool operator==(const DigitalEdge&, const DigitalEdge&) = default;
};

using Measurement = std::variant<Bpm, Celsius, Pressure, DigitalEdge>;

inline constexpr double kBpmCeiling = 400.0;

// True when the measurement alternative belongs to `kind` and its value is
// physically plausible (finite, Bpm < 400, systolic > diastolic > 0).
bool measurement_valid(SensorKind kind, const Measurement& m);

struct VitalSample {
  std::string device_id;
  std::string patient_id;
  Seq seq = 0;
  TimeMs t_ms = 0;
  SensorKind kind = SensorKind::HeartRate;
  Measurement value = Bpm{};

  friend bool operator==(const VitalSample&, const VitalSample&) = default;
};

struct Range {
  double min = 0.0;
  double max = 0.0;
  bool contains(double v) const { return v >= min && v <= max; }
  friend bool operator==(const Range&, const Range&) = default;
};

struct Thresholds {
  Range heart_rate{50.0, 120.0};
  Range temperature{35.0, 38.5};
  Range systolic{90.0, 160.0};
  Range diastolic{60.0, 100.0};
  std::uint32_t debounce_ms = 200;

  // Throws InvalidThresholds when any range has min >= max.
  void validate() const;
  friend bool operator==(const Thresholds&, const Thresholds&) = default;
};

enum class AlertCause : std::uint8_t {
  LowHeartRate,
  HighHeartRate,
  LowTemperature,
  HighTemperature,
  LowBloodPressure,
  HighBloodPressure,
  EyeBlinkDetected,
  BodyMotionDetected,
};

inline constexpr std::array<AlertCause, 8> kAllAlertCauses = {
    AlertCause::LowHeartRate,     AlertCause::HighHeartRate,     AlertCause::LowTemperature,
    AlertCause::HighTemperature,  AlertCause::LowBloodPressure,  AlertCause::HighBloodPressure,
    AlertCause::EyeBlinkDetected, AlertCause::BodyMotionDetected};

enum class Severity : std::uint8_t { Critical, Notice };

SensorKind sensor_of(AlertCause c);
Severity severity_of(AlertCause c);
std::string_view wire_code(AlertCause c);  // LOW_HR, ..., BLINK, MOTION
std::optional<AlertCause> alert_cause_from_wire(std::string_view code);
std::string_view lcd_code(AlertCause c);   // LOW HR, ..., BLINK, MOTION
std::string_view wire_code(Severity s);    // CRIT | NOTE
std::optional<Severity> severity_from_wire(std::string_view code);

// WifiLink is the device-to-local-server hop; it never appears in a
// dispatch plan. LocalLed never traverses the network simulator.
enum class ChannelKind : std::uint8_t { Internet, GsmSms, LocalLed, WifiLink };

std::string_view to_string(ChannelKind k);
std::string_view to_string(SensorKind k);
std::string_view to_string(AlertCause c);
std::string_view to_string(Severity s);

enum class DispatchOutcome : std::uint8_t { InFlight, Delivered, Undelivered };

std::string_view to_string(DispatchOutcome o);

struct Dispatch {
  ChannelKind channel = ChannelKind::LocalLed;
  TimeMs dispatched_at_ms = 0;
  std::optional<TimeMs> delivered_at_ms;  // set iff outcome == Delivered
  DispatchOutcome outcome = DispatchOutcome::InFlight;
  friend bool operator==(const Dispatch&, const Dispatch&) = default;
};

struct Acknowledgement {
  std::string user_id;
  TimeMs ack_at_ms = 0;
  friend bool operator==(const Acknowledgement&, const Acknowledgement&) = default;
};

struct AlertEvent {
  std::string alert_id;
  std::string device_id;
  std::string patient_id;
  AlertCause cause = AlertCause::LowHeartRate;
  Severity severity = Severity::Critical;
  TimeMs raised_at_ms = 0;
  // The wire alert record does not carry the triggering sample, so the
  // server fills this only when it can match a stored sample.
  std::optional<Seq> sample_seq;
  std::vector<Dispatch> dispatches;
  std::optional<Acknowledgement> ack;

  friend bool operator==(const AlertEvent&, const AlertEvent&) = default;
};

// "<device_id>:<seq>" where seq is the alert record's own sequence number.
std::string make_alert_id(std::string_view device_id, Seq alert_seq);

}  // namespace wardsim
