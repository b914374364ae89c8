#include "wardsim/core/types.hpp"

#include <cmath>

#include "wardsim/core/errors.hpp"

namespace wardsim {

namespace {

struct CauseInfo {
  AlertCause cause;
  SensorKind kind;
  Severity severity;
  std::string_view wire;
  std::string_view lcd;
  std::string_view name;
};

constexpr std::array<CauseInfo, 8> kCauseTable = {{
    {AlertCause::LowHeartRate, SensorKind::HeartRate, Severity::Critical, "LOW_HR", "LOW HR",
     "LowHeartRate"},
    {AlertCause::HighHeartRate, SensorKind::HeartRate, Severity::Critical, "HIGH_HR", "HIGH HR",
     "HighHeartRate"},
    {AlertCause::LowTemperature, SensorKind::BodyTemperature, Severity::Critical, "LOW_TEMP",
     "LOW TEMP", "LowTemperature"},
    {AlertCause::HighTemperature, SensorKind::BodyTemperature, Severity::Critical, "HIGH_TEMP",
     "HIGH TEMP", "HighTemperature"},
    {AlertCause::LowBloodPressure, SensorKind::BloodPressure, Severity::Critical, "LOW_BP",
     "LOW BP", "LowBloodPressure"},
    {AlertCause::HighBloodPressure, SensorKind::BloodPressure, Severity::Critical, "HIGH_BP",
     "HIGH BP", "HighBloodPressure"},
    {AlertCause::EyeBlinkDetected, SensorKind::EyeBlink, Severity::Notice, "BLINK", "BLINK",
     "EyeBlinkDetected"},
    {AlertCause::BodyMotionDetected, SensorKind::BodyMotion, Severity::Notice, "MOTION", "MOTION",
     "BodyMotionDetected"},
}};

const CauseInfo& info(AlertCause c) { return kCauseTable[static_cast<std::size_t>(c)]; }

constexpr std::array<std::string_view, 5> kKindWire = {"HR", "TEMP", "BP", "BLINK", "MOTION"};
constexpr std::array<std::string_view, 5> kKindName = {"HeartRate", "BodyTemperature",
                                                       "BloodPressure", "EyeBlink", "BodyMotion"};

}  // namespace

std::string_view wire_code(SensorKind k) { return kKindWire[index_of(k)]; }

std::optional<SensorKind> sensor_kind_from_wire(std::string_view code) {
  for (auto k : kAllSensorKinds) {
    if (wire_code(k) == code) return k;
  }
  return std::nullopt;
}

bool measurement_valid(SensorKind kind, const Measurement& m) {
  switch (kind) {
    case SensorKind::HeartRate:
      if (const auto* b = std::get_if<Bpm>(&m)) {
        return std::isfinite(b->value) && b->value >= 0.0 && b->value < kBpmCeiling;
      }
      return false;
    case SensorKind::BodyTemperature:
      if (const auto* c = std::get_if<Celsius>(&m)) return std::isfinite(c->value);
      return false;
    case SensorKind::BloodPressure:
      if (const auto* p = std::get_if<Pressure>(&m)) {
        return std::isfinite(p->systolic) && std::isfinite(p->diastolic) && p->diastolic > 0.0 &&
               p->systolic > p->diastolic;
      }
      return false;
    case SensorKind::EyeBlink:
    case SensorKind::BodyMotion:
      return std::holds_alternative<DigitalEdge>(m);
  }
  return false;
}

void Thresholds::validate() const {
  auto check = [](const Range& r, const char* name) {
    if (!(r.min < r.max)) {
      throw InvalidThresholds(std::string(name) + " range requires min < max");
    }
  };
  check(heart_rate, "heart_rate");
  check(temperature, "temperature");
  check(systolic, "systolic");
  check(diastolic, "diastolic");
}

SensorKind sensor_of(AlertCause c) { return info(c).kind; }
Severity severity_of(AlertCause c) { return info(c).severity; }
std::string_view wire_code(AlertCause c) { return info(c).wire; }
std::string_view lcd_code(AlertCause c) { return info(c).lcd; }

std::optional<AlertCause> alert_cause_from_wire(std::string_view code) {
  for (const auto& ci : kCauseTable) {
    if (ci.wire == code) return ci.cause;
  }
  return std::nullopt;
}

std::string_view wire_code(Severity s) { return s == Severity::Critical ? "CRIT" : "NOTE"; }

std::optional<Severity> severity_from_wire(std::string_view code) {
  if (code == "CRIT") return Severity::Critical;
  if (code == "NOTE") return Severity::Notice;
  return std::nullopt;
}

std::string_view to_string(ChannelKind k) {
  switch (k) {
    case ChannelKind::Internet: return "Internet";
    case ChannelKind::GsmSms: return "GsmSms";
    case ChannelKind::LocalLed: return "LocalLed";
    case ChannelKind::WifiLink: return "WifiLink";
  }
  return "?";
}

std::string_view to_string(DispatchOutcome o) {
  switch (o) {
    case DispatchOutcome::InFlight: return "InFlight";
    case DispatchOutcome::Delivered: return "Delivered";
    case DispatchOutcome::Undelivered: return "Undelivered";
  }
  return "?";
}

std::string_view to_string(SensorKind k) { return kKindName[index_of(k)]; }
std::string_view to_string(AlertCause c) { return info(c).name; }
std::string_view to_string(Severity s) { return s == Severity::Critical ? "Critical" : "Notice"; }

std::string make_alert_id(std::string_view device_id, Seq alert_seq) {
  std::string id(device_id);
  id += ':';
  id += std::to_string(alert_seq);
  return id;
}

}  // namespace wardsim
