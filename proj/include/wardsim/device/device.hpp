#pragma once

// Bedside unit emulator. The firmware loop is a pure function over
// DeviceState; side effects come back as Effect values for the caller
// (the scenario harness) to carry out.

#include <array>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "wardsim/core/types.hpp"
#include "wardsim/core/vitals.hpp"
#include "wardsim/netsim/channel.hpp"

namespace wardsim {

enum class DeviceMode : std::uint8_t { Boot, Monitoring, AlertActive };

std::string_view to_string(DeviceMode m);

struct LedState {
  std::optional<Severity> on;  // nullopt = Off
  bool lit() const { return on.has_value(); }
  friend bool operator==(const LedState&, const LedState&) = default;
};

struct Reading {
  SensorKind kind = SensorKind::HeartRate;
  Measurement value = Bpm{};
  TimeMs t_ms = 0;
  friend bool operator==(const Reading&, const Reading&) = default;
};

struct LastReading {
  Measurement value = Bpm{};
  TimeMs t_ms = 0;
  friend bool operator==(const LastReading&, const LastReading&) = default;
};

struct AlertSkeleton {
  AlertCause cause = AlertCause::LowHeartRate;
  Severity severity = Severity::Critical;
  TimeMs raised_at_ms = 0;
  std::optional<Seq> sample_seq;
  friend bool operator==(const AlertSkeleton&, const AlertSkeleton&) = default;
};

struct OutboundRecord {
  Seq seq = 0;
  std::variant<VitalSample, AlertSkeleton> payload;
  unsigned attempts = 0;  // failed transmissions so far
  TimeMs next_attempt_at_ms = 0;
  bool in_flight = false;  // transmitted, outcome not yet known

  bool is_alert() const { return std::holds_alternative<AlertSkeleton>(payload); }
  friend bool operator==(const OutboundRecord&, const OutboundRecord&) = default;
};

// An alert the device itself must get out over GSM.
struct PendingSms {
  Seq alert_seq = 0;
  AlertCause cause = AlertCause::LowHeartRate;
  TimeMs raised_at_ms = 0;
  TimeMs next_attempt_at_ms = 0;
  bool in_flight = false;
  friend bool operator==(const PendingSms&, const PendingSms&) = default;
};

enum class DeviceSmsPolicy : std::uint8_t {
  WhenOffline,  // SMS when Wi-Fi is believed down, or an alert record dead-letters
  Never,
};

struct DevicePolicy {
  TimeMs base_backoff_ms = 500;
  unsigned max_retries = 5;
  std::size_t batch_size = 16;
  TimeMs clear_hold_ms = 10'000;
  TimeMs sms_retry_ms = 30'000;
  TimeMs pulse_window_ms = 10'000;
  DeviceSmsPolicy sms = DeviceSmsPolicy::WhenOffline;
};

// Delay before the next attempt after the n-th failure (n >= 1).
TimeMs backoff_delay(const DevicePolicy& policy, unsigned failures);

using LcdBuffer = std::array<std::string, 4>;

inline constexpr std::size_t kLcdRows = 4;
inline constexpr std::size_t kLcdCols = 20;

struct DeviceState {
  std::string device_id;
  std::string patient_id;
  std::array<std::optional<LastReading>, 5> last_reading;
  DeviceMode mode = DeviceMode::Boot;
  LcdBuffer lcd;
  LedState led;
  std::map<Seq, OutboundRecord> outbox;
  std::vector<OutboundRecord> dead_letter;
  std::map<Seq, PendingSms> sms_queue;
  Seq next_seq = 1;
  bool wifi_believed_up = true;

  // Alert latching: analog causes re-arm when the reading returns to
  // normal, digital ones after clear_hold_ms without an accepted edge.
  std::array<std::optional<AlertCause>, 3> analog_latch;
  std::array<EdgeDetector, 2> edge_detectors;
  std::array<std::optional<TimeMs>, 2> digital_quiet_at;
  std::optional<TimeMs> last_abnormal_ms;
  std::optional<AlertCause> display_cause;
  std::vector<TimeMs> pulses;  // trailing pulse_window_ms
  std::optional<TimeMs> last_tick_ms;

  std::uint64_t samples_enqueued = 0;
  std::uint64_t alerts_enqueued = 0;
  std::uint64_t dropped_readings = 0;

  const std::optional<LastReading>& last(SensorKind k) const { return last_reading[index_of(k)]; }
};

DeviceState make_device(std::string device_id, std::string patient_id);

namespace effect {
struct LcdUpdated {
  friend bool operator==(const LcdUpdated&, const LcdUpdated&) = default;
};
struct LedChanged {
  LedState state;
  friend bool operator==(const LedChanged&, const LedChanged&) = default;
};
struct EnqueuedSample {
  Seq seq = 0;
  friend bool operator==(const EnqueuedSample&, const EnqueuedSample&) = default;
};
struct RaisedAlert {
  AlertCause cause = AlertCause::LowHeartRate;
  Seq alert_seq = 0;
  std::optional<Seq> sample_seq;
  TimeMs trigger_t_ms = 0;  // timestamp of the reading that tripped it
  friend bool operator==(const RaisedAlert&, const RaisedAlert&) = default;
};
struct TransmitBatch {
  std::vector<Seq> seqs;
  friend bool operator==(const TransmitBatch&, const TransmitBatch&) = default;
};
struct SmsRequested {
  AlertCause cause = AlertCause::LowHeartRate;
  Seq alert_seq = 0;
  friend bool operator==(const SmsRequested&, const SmsRequested&) = default;
};
}  // namespace effect

using Effect = std::variant<effect::LcdUpdated, effect::LedChanged, effect::EnqueuedSample,
                            effect::RaisedAlert, effect::TransmitBatch, effect::SmsRequested>;

struct TickInputs {
  std::vector<Reading> readings;  // at most one per kind; extras are dropped
  std::vector<TimeMs> pulses;     // raw pulse timestamps, optional HR source
};

struct TickResult {
  DeviceState state;
  std::vector<Effect> effects;
};

// One pass of the firmware loop: ingest, classify, render, transmit.
TickResult tick(DeviceState state, const TickInputs& inputs, TimeMs now_ms,
                const Thresholds& thresholds, const DevicePolicy& policy);

LcdBuffer render_lcd(const DeviceState& state);

DeviceState on_ack(DeviceState state, const std::vector<Seq>& acked_seqs);

// Delivered leaves the record in place until acked. Lost consumes an attempt
// and schedules a backoff, dead-lettering at max_retries + 1 failures.
// ChannelDown consumes nothing and marks Wi-Fi as down.
DeviceState on_send_result(DeviceState state, Seq seq, DeliveryStatus result, TimeMs now_ms,
                           const DevicePolicy& policy);

DeviceState on_sms_result(DeviceState state, Seq alert_seq, DeliveryStatus result, TimeMs now_ms,
                          const DevicePolicy& policy);

// Wi-Fi association status reported by the radio.
DeviceState on_link_change(DeviceState state, bool wifi_up);

// Wire line for an outbox record of this device.
std::string wire_line(const DeviceState& state, const OutboundRecord& record);

// Throws InvariantViolation when a DeviceState invariant does not hold.
void check_invariants(const DeviceState& state, const DevicePolicy& policy);

}  // namespace wardsim
