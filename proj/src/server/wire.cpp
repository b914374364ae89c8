#include "wardsim/server/wire.hpp"

#include "wardsim/core/text.hpp"

namespace wardsim::wire {

namespace {

using text::parse_double;
using text::parse_int;
using text::split;

void append_double(std::string& out, double v) { out += text::format_double(v); }

std::optional<Measurement> parse_value(SensorKind kind, std::string_view v) {
  switch (kind) {
    case SensorKind::HeartRate:
      if (auto d = parse_double(v)) return Bpm{*d};
      return std::nullopt;
    case SensorKind::BodyTemperature:
      if (auto d = parse_double(v)) return Celsius{*d};
      return std::nullopt;
    case SensorKind::BloodPressure: {
      const auto parts = split(v, '/');
      if (parts.size() != 2) return std::nullopt;
      auto sys = parse_double(parts[0]);
      auto dia = parse_double(parts[1]);
      if (!sys || !dia) return std::nullopt;
      return Pressure{*sys, *dia};
    }
    case SensorKind::EyeBlink:
    case SensorKind::BodyMotion:
      if (v == "1") return DigitalEdge{true};
      return std::nullopt;
  }
  return std::nullopt;
}

}  // namespace

bool valid_identifier(std::string_view id) {
  if (id.empty() || id.size() > 64) return false;
  for (char c : id) {
    if (c <= ' ' || c > '~' || c == '|') return false;
  }
  return true;
}

std::string format_value(SensorKind kind, const Measurement& m) {
  std::string out;
  switch (kind) {
    case SensorKind::HeartRate:
      append_double(out, std::get<Bpm>(m).value);
      break;
    case SensorKind::BodyTemperature:
      append_double(out, std::get<Celsius>(m).value);
      break;
    case SensorKind::BloodPressure: {
      const auto& p = std::get<Pressure>(m);
      append_double(out, p.systolic);
      out += '/';
      append_double(out, p.diastolic);
      break;
    }
    case SensorKind::EyeBlink:
    case SensorKind::BodyMotion:
      out += '1';
      break;
  }
  return out;
}

std::string format(const Record& r) {
  return std::visit(
      [](const auto& rec) -> std::string {
        using T = std::decay_t<decltype(rec)>;
        std::string out;
        if constexpr (std::is_same_v<T, SampleRecord>) {
          out = "V1|" + rec.device_id + '|' + std::to_string(rec.seq) + '|' +
                std::to_string(rec.t_ms) + '|' + std::string(wire_code(rec.kind)) + '|' +
                format_value(rec.kind, rec.value);
        } else if constexpr (std::is_same_v<T, AlertRecord>) {
          out = "A1|" + rec.device_id + '|' + std::to_string(rec.seq) + '|' +
                std::to_string(rec.t_ms) + '|' + std::string(wire_code(rec.cause)) + '|' +
                std::string(wire_code(rec.severity));
        } else {
          out = "ACK|" + rec.device_id + '|' + std::to_string(rec.seq);
        }
        return out;
      },
      r);
}

std::optional<Record> parse(std::string_view line) {
  if (!line.empty() && line.back() == '\n') line.remove_suffix(1);
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  const auto f = split(line, '|');
  if (f.empty()) return std::nullopt;

  if (f[0] == "V1" && f.size() == 6) {
    SampleRecord r;
    if (!valid_identifier(f[1])) return std::nullopt;
    r.device_id = std::string(f[1]);
    auto seq = parse_int<Seq>(f[2]);
    auto t = parse_int<TimeMs>(f[3]);
    auto kind = sensor_kind_from_wire(f[4]);
    if (!seq || !t || *t < 0 || !kind) return std::nullopt;
    auto value = parse_value(*kind, f[5]);
    if (!value) return std::nullopt;
    r.seq = *seq;
    r.t_ms = *t;
    r.kind = *kind;
    r.value = *value;
    return r;
  }
  if (f[0] == "A1" && f.size() == 6) {
    AlertRecord r;
    if (!valid_identifier(f[1])) return std::nullopt;
    r.device_id = std::string(f[1]);
    auto seq = parse_int<Seq>(f[2]);
    auto t = parse_int<TimeMs>(f[3]);
    auto cause = alert_cause_from_wire(f[4]);
    auto sev = severity_from_wire(f[5]);
    if (!seq || !t || *t < 0 || !cause || !sev) return std::nullopt;
    if (severity_of(*cause) != *sev) return std::nullopt;
    r.seq = *seq;
    r.t_ms = *t;
    r.cause = *cause;
    r.severity = *sev;
    return r;
  }
  if (f[0] == "ACK" && f.size() == 3) {
    auto seq = parse_int<Seq>(f[2]);
    if (!valid_identifier(f[1]) || !seq) return std::nullopt;
    return AckRecord{std::string(f[1]), *seq};
  }
  return std::nullopt;
}

SampleRecord to_record(const VitalSample& s) {
  return SampleRecord{s.device_id, s.seq, s.t_ms, s.kind, s.value};
}

VitalSample to_sample(const SampleRecord& r, std::string patient_id) {
  VitalSample s;
  s.device_id = r.device_id;
  s.patient_id = std::move(patient_id);
  s.seq = r.seq;
  s.t_ms = r.t_ms;
  s.kind = r.kind;
  s.value = r.value;
  return s;
}

}  // namespace wardsim::wire
