#pragma once

// Scenario metrics and their text/CSV renderings.
//
// CSV columns, in order (empty statistics render as n/a):
//   seed, simulated_ms, raw_delivery_rate, eventual_delivery_rate,
//   samples_emitted, samples_stored, samples_dead_lettered, samples_in_flight,
//   seq_gaps, duplicates, rejected, dropped_readings, wifi_sent, wifi_delivered,
//   wifi_lost, wifi_down, alerts_raised, alerts_stored, alerts_delivered,
//   alerts_acknowledged, alerts_pending, led_latency_max_ms,
//   sms_latency_mean_ms, sms_latency_p95_ms, e2e_latency_mean_ms,
//   e2e_latency_p95_ms, max_outbox_backlog, cloud_samples_stored

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "wardsim/core/types.hpp"

namespace wardsim {

struct MetricsReport {
  std::uint64_t seed = 0;
  TimeMs simulated_ms = 0;
  std::optional<double> raw_delivery_rate;       // per Wi-Fi transmission
  std::optional<double> eventual_delivery_rate;  // per emitted sample
  std::uint64_t samples_emitted = 0;
  std::uint64_t samples_stored = 0;
  std::uint64_t samples_dead_lettered = 0;
  std::uint64_t samples_in_flight = 0;
  std::uint64_t seq_gaps = 0;
  std::uint64_t duplicates = 0;
  std::uint64_t rejected = 0;
  std::uint64_t dropped_readings = 0;
  std::uint64_t wifi_sent = 0;
  std::uint64_t wifi_delivered = 0;
  std::uint64_t wifi_lost = 0;
  std::uint64_t wifi_down = 0;
  std::uint64_t alerts_raised = 0;
  std::uint64_t alerts_stored = 0;
  std::uint64_t alerts_delivered = 0;
  std::uint64_t alerts_acknowledged = 0;
  std::uint64_t alerts_pending = 0;
  std::optional<double> led_latency_max_ms;
  std::optional<double> sms_latency_mean_ms;
  std::optional<double> sms_latency_p95_ms;
  std::optional<double> e2e_latency_mean_ms;
  std::optional<double> e2e_latency_p95_ms;
  std::uint64_t max_outbox_backlog = 0;
  std::uint64_t cloud_samples_stored = 0;

  friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

std::string render_text(const MetricsReport& r);
std::string csv_header();
std::string render_csv_row(const MetricsReport& r);
// Header line plus one row.
std::string render_csv(const MetricsReport& r);

// Parses one data row in csv_header() order. nullopt when malformed.
std::optional<MetricsReport> parse_csv_row(std::string_view row);

// Mean and nearest-rank percentile of a sample set; nullopt when empty.
std::optional<double> mean_of(const std::vector<double>& xs);
std::optional<double> percentile_of(std::vector<double> xs, double p);

}  // namespace wardsim
