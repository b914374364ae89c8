#pragma once

// Alert dispatch planning and the alert lifecycle book.
//
// Every raised alert is always in exactly one of: Acknowledged, Delivered
// (some remote channel confirmed), InFlight (a remote dispatch outstanding),
// Pending (waiting for a channel to come back). Nothing else.

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "wardsim/core/types.hpp"
#include "wardsim/netsim/channel.hpp"

namespace wardsim {

enum class AlertPolicy : std::uint8_t { Both, FallbackOnly };

std::string_view to_string(AlertPolicy p);  // both | fallback_only
std::optional<AlertPolicy> alert_policy_from_string(std::string_view s);

enum class DispatchReason : std::uint8_t { Primary, Fallback, Always };

std::string_view to_string(DispatchReason r);

struct PlannedDispatch {
  ChannelKind channel = ChannelKind::LocalLed;
  DispatchReason reason = DispatchReason::Always;
  friend bool operator==(const PlannedDispatch&, const PlannedDispatch&) = default;
};

struct DispatchPlan {
  std::string alert_id;
  std::vector<PlannedDispatch> steps;  // LocalLed first, always present

  bool has_remote() const;
  friend bool operator==(const DispatchPlan&, const DispatchPlan&) = default;
};

struct ChannelStates {
  bool internet_up = true;
  bool gsm_up = true;
};

// Both: LocalLed + Internet (if up) + GsmSms (if up).
// FallbackOnly: LocalLed + Internet when usable, else LocalLed + GsmSms.
// FallbackOnly goes to GSM right after a failed Internet dispatch when GSM
// is up; otherwise it retries the Internet.
DispatchPlan plan_dispatch(const AlertEvent& alert, ChannelStates states, AlertPolicy policy);

enum class AlertStatus : std::uint8_t { Acknowledged, Delivered, InFlight, Pending };

std::string_view to_string(AlertStatus s);

class AlertBook {
 public:
  // Idempotent: a second raise with the same id returns the existing alert.
  const AlertEvent& raise(AlertEvent alert, TimeMs now_ms);

  // Plans and records the remote dispatches as in flight. With no remote
  // channel available the alert joins the pending queue.
  DispatchPlan dispatch(const std::string& alert_id, ChannelStates states, AlertPolicy policy,
                        TimeMs now_ms);

  // Resolves the oldest in-flight dispatch on `channel`. Returns false when
  // there is none.
  bool record_result(const std::string& alert_id, ChannelKind channel, const DeliveryResult& r,
                     TimeMs now_ms);

  // Re-dispatches pending, unacknowledged alerts for which a remote channel
  // is now available.
  std::vector<DispatchPlan> escalate_pending(ChannelStates states, AlertPolicy policy,
                                             TimeMs now_ms);

  // First writer wins; later acks return the stored alert unchanged.
  const AlertEvent& acknowledge(const std::string& alert_id, const std::string& user_id,
                                TimeMs now_ms);

  // Replay of a journalled outcome (no in-flight bookkeeping).
  void restore_dispatch(const std::string& alert_id, const Dispatch& d);

  // Alerts that came back from replay with no remote delivery and no ack
  // are re-queued for escalation.
  void requeue_undelivered();

  const AlertEvent* find(const std::string& alert_id) const;
  AlertStatus status(const std::string& alert_id) const;
  std::vector<AlertEvent> updated_since(TimeMs since_ms) const;
  std::vector<AlertEvent> all() const;
  std::size_t size() const { return alerts_.size(); }
  std::size_t pending_count() const { return pending_.size(); }
  const std::set<std::string>& pending() const { return pending_; }

 private:
  struct Entry {
    AlertEvent alert;
    int in_flight = 0;
    TimeMs updated_at_ms = 0;
  };

  Entry& entry(const std::string& alert_id);
  static bool delivered_remote(const AlertEvent& a);

  std::map<std::string, Entry> alerts_;
  std::set<std::string> pending_;
};

}  // namespace wardsim
