#pragma once

// Device <-> server line protocol. One ASCII record per line, '|'-separated:
//
//   V1|<device_id>|<seq>|<t_ms>|<HR|TEMP|BP|BLINK|MOTION>|<value>
//   A1|<device_id>|<seq>|<t_ms>|<cause code>|<CRIT|NOTE>
//   ACK|<device_id>|<seq>
//
// Values are decimal for HR/TEMP, "sys/dia" for BP and "1" for digital edges.

#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include "wardsim/core/types.hpp"

namespace wardsim::wire {

struct SampleRecord {
  std::string device_id;
  Seq seq = 0;
  TimeMs t_ms = 0;
  SensorKind kind = SensorKind::HeartRate;
  Measurement value = Bpm{};
  friend bool operator==(const SampleRecord&, const SampleRecord&) = default;
};

struct AlertRecord {
  std::string device_id;
  Seq seq = 0;
  TimeMs t_ms = 0;
  AlertCause cause = AlertCause::LowHeartRate;
  Severity severity = Severity::Critical;
  friend bool operator==(const AlertRecord&, const AlertRecord&) = default;
};

struct AckRecord {
  std::string device_id;
  Seq seq = 0;
  friend bool operator==(const AckRecord&, const AckRecord&) = default;
};

using Record = std::variant<SampleRecord, AlertRecord, AckRecord>;

// Identifiers: non-empty printable ASCII without '|' or whitespace.
bool valid_identifier(std::string_view id);

std::string format(const Record& r);
std::string format_value(SensorKind kind, const Measurement& m);

// nullopt for anything that does not parse exactly (trailing '\n' / "\r\n"
// is tolerated).
std::optional<Record> parse(std::string_view line);

SampleRecord to_record(const VitalSample& s);
VitalSample to_sample(const SampleRecord& r, std::string patient_id);

}  // namespace wardsim::wire
