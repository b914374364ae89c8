#pragma once

// Server-originated records that share the event log with device records:
//
//   P1|<patient_id>|<device_id>|<display_name>
//   T1|<patient_id>|<hr_min>|<hr_max>|<temp_min>|<temp_max>|<sys_min>|<sys_max>|<dia_min>|<dia_max>|<debounce_ms>
//   U1|<user_id>|<username>|<ADMIN|DOCTOR|NURSE>|<argon2 encoded hash>
//   K1|<alert_id>|<user_id>|<ack_at_ms>
//   D1|<alert_id>|<INTERNET|GSM|LED>|<dispatched_at_ms>|<delivered_at_ms or ->

#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include "wardsim/core/types.hpp"
#include "wardsim/server/access.hpp"

namespace wardsim::journal {

struct PatientRegistered {
  std::string patient_id;
  std::string device_id;
  std::string display_name;
  friend bool operator==(const PatientRegistered&, const PatientRegistered&) = default;
};

struct ThresholdsSet {
  std::string patient_id;
  Thresholds thresholds;
  friend bool operator==(const ThresholdsSet&, const ThresholdsSet&) = default;
};

struct UserCreated {
  UserAccount account;
  friend bool operator==(const UserCreated&, const UserCreated&) = default;
};

struct AlertAcked {
  std::string alert_id;
  std::string user_id;
  TimeMs ack_at_ms = 0;
  friend bool operator==(const AlertAcked&, const AlertAcked&) = default;
};

struct DispatchResolved {
  std::string alert_id;
  Dispatch dispatch;  // outcome Delivered or Undelivered
  friend bool operator==(const DispatchResolved&, const DispatchResolved&) = default;
};

using Record =
    std::variant<PatientRegistered, ThresholdsSet, UserCreated, AlertAcked, DispatchResolved>;

// Display names: printable ASCII (spaces allowed), no '|', 1..64 chars.
bool valid_display_name(std::string_view name);

std::string format(const Record& r);
std::optional<Record> parse(std::string_view line);

std::string_view channel_code(ChannelKind k);
std::optional<ChannelKind> channel_from_code(std::string_view code);

}  // namespace wardsim::journal
