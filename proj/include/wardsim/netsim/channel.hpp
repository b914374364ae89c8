#pragma once

// Lossy, delayed, schedulable communication channels.
//
// Draw order contract: every channel_send/sms_send consumes exactly two
// uniforms from the caller's Rng (loss, then latency) whatever the outcome,
// so a run's random stream depends only on the sequence of calls. Lost iff
// the loss draw is < loss_prob, which makes reliability monotone in loss_prob.

#include <vector>

#include "wardsim/core/random.hpp"
#include "wardsim/core/types.hpp"

namespace wardsim {

struct Outage {
  TimeMs from_ms = 0;  // inclusive
  TimeMs to_ms = 0;    // exclusive
  friend bool operator==(const Outage&, const Outage&) = default;
};

struct ChannelModel {
  ChannelKind kind = ChannelKind::Internet;
  double loss_prob = 0.0;
  TimeMs latency_mean_ms = 0;
  TimeMs latency_jitter_ms = 0;
  std::vector<Outage> outages;  // sorted, non-overlapping

  // Throws InvalidChannel.
  void validate() const;

  static ChannelModel wifi_default();
  static ChannelModel internet_default();
  static ChannelModel gsm_default();
};

enum class DeliveryStatus { Delivered, Lost, ChannelDown };

struct DeliveryResult {
  DeliveryStatus status = DeliveryStatus::Lost;
  TimeMs latency_ms = 0;  // meaningful only when Delivered

  bool delivered() const { return status == DeliveryStatus::Delivered; }
  static DeliveryResult delivered_after(TimeMs latency) {
    return {DeliveryStatus::Delivered, latency};
  }
  static DeliveryResult lost() { return {DeliveryStatus::Lost, 0}; }
  static DeliveryResult down() { return {DeliveryStatus::ChannelDown, 0}; }
  friend bool operator==(const DeliveryResult&, const DeliveryResult&) = default;
};

std::string_view to_string(DeliveryStatus s);

bool is_up(const ChannelModel& model, TimeMs t_ms);

// Next instant > t_ms at which is_up may change, if any.
std::optional<TimeMs> next_transition(const ChannelModel& model, TimeMs t_ms);

DeliveryResult channel_send(const ChannelModel& model, TimeMs t_ms, Rng& rng);

// Same as channel_send; throws InvalidChannel unless model.kind is GsmSms.
DeliveryResult sms_send(const ChannelModel& model, const AlertEvent& alert, TimeMs t_ms, Rng& rng);

// Probability a record survives at least one of max_retries + 1 independent
// attempts: 1 - loss_prob^(max_retries + 1).
double eventual_delivery_prob(double loss_prob, unsigned max_retries);

}  // namespace wardsim
