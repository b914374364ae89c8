#pragma once

// Scenario files: INI sections, `key = value`, `#` comments.
//
//   [scenario]        seed, duration, tick_period, sample_period, drain,
//                     alert_policy, escalation_retry, nurse_ack_delay, cloud_sync
//   [retransmission]  base_backoff, max_retries, batch_size, ack_timeout,
//                     clear_hold, sms_retry, device_sms
//   [patient.N]       id, device, name, baseline_*, jitter_*, blink_rate,
//                     motion_rate, hr_min .. dia_max, debounce
//   [channel.wifi|internet|gsm]  loss, latency_mean, latency_jitter, outage
//   [anomaly.N]       patient, kind, shape, delta, count, start, length,
//                     repeat, every
//
// Durations accept ms (default), s, m and h suffixes; outages are written
// `FROM..TO`, one key per interval.

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "wardsim/device/device.hpp"
#include "wardsim/netsim/channel.hpp"
#include "wardsim/sensors/sensor_sim.hpp"
#include "wardsim/server/escalation.hpp"

namespace wardsim {

struct PatientConfig {
  std::string patient_id;
  std::string device_id;
  std::string display_name;
  PatientProfile profile;
  Thresholds thresholds;
};

struct AnomalyConfig {
  std::size_t patient = 0;  // index into ScenarioConfig::patients
  AnomalySpec spec;
  std::uint32_t repeat = 1;
  TimeMs every_ms = 0;

  // The spec shifted to each repetition.
  std::vector<AnomalySpec> occurrences() const;
};

struct ScenarioConfig {
  std::uint64_t seed = 1;
  TimeMs duration_ms = 3'600'000;
  TimeMs tick_period_ms = 500;
  TimeMs sample_period_ms = 1000;
  TimeMs drain_ms = 600'000;  // cap on the post-run quiescence phase
  std::vector<PatientConfig> patients;
  std::vector<AnomalyConfig> anomalies;
  ChannelModel wifi = ChannelModel::wifi_default();
  ChannelModel internet = ChannelModel::internet_default();
  ChannelModel gsm = ChannelModel::gsm_default();
  AlertPolicy alert_policy = AlertPolicy::Both;
  DevicePolicy device;
  TimeMs ack_timeout_ms = 1000;
  TimeMs escalation_retry_ms = 30'000;
  std::optional<TimeMs> nurse_ack_delay_ms;
  bool cloud_sync = false;

  // Throws ConfigError naming the offending field.
  void validate() const;
};

// Throws ConfigError with the line number of the offending entry.
ScenarioConfig parse_scenario(std::string_view text);
ScenarioConfig load_scenario(const std::filesystem::path& path);

// "500", "500ms", "30s", "15m", "24h".
std::optional<TimeMs> parse_duration(std::string_view s);

}  // namespace wardsim
