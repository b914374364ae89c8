#include "wardsim/server/escalation.hpp"

#include <algorithm>

#include "wardsim/core/errors.hpp"

namespace wardsim {

std::string_view to_string(AlertPolicy p) {
  return p == AlertPolicy::Both ? "both" : "fallback_only";
}

std::optional<AlertPolicy> alert_policy_from_string(std::string_view s) {
  if (s == "both") return AlertPolicy::Both;
  if (s == "fallback_only") return AlertPolicy::FallbackOnly;
  return std::nullopt;
}

std::string_view to_string(DispatchReason r) {
  switch (r) {
    case DispatchReason::Primary: return "Primary";
    case DispatchReason::Fallback: return "Fallback";
    case DispatchReason::Always: return "Always";
  }
  return "?";
}

std::string_view to_string(AlertStatus s) {
  switch (s) {
    case AlertStatus::Acknowledged: return "Acknowledged";
    case AlertStatus::Delivered: return "Delivered";
    case AlertStatus::InFlight: return "InFlight";
    case AlertStatus::Pending: return "Pending";
  }
  return "?";
}

bool DispatchPlan::has_remote() const {
  return std::any_of(steps.begin(), steps.end(),
                     [](const PlannedDispatch& s) { return s.channel != ChannelKind::LocalLed; });
}

DispatchPlan plan_dispatch(const AlertEvent& alert, ChannelStates states, AlertPolicy policy) {
  DispatchPlan plan;
  plan.alert_id = alert.alert_id;
  plan.steps.push_back({ChannelKind::LocalLed, DispatchReason::Always});

  if (policy == AlertPolicy::Both) {
    if (states.internet_up) plan.steps.push_back({ChannelKind::Internet, DispatchReason::Primary});
    if (states.gsm_up) plan.steps.push_back({ChannelKind::GsmSms, DispatchReason::Always});
    return plan;
  }

  // Fall back to GSM right after a failed Internet attempt; otherwise prefer
  // the Internet whenever it is up.
  bool internet_just_failed = false;
  for (auto it = alert.dispatches.rbegin(); it != alert.dispatches.rend(); ++it) {
    if (it->channel == ChannelKind::LocalLed) continue;
    internet_just_failed =
        it->channel == ChannelKind::Internet && it->outcome == DispatchOutcome::Undelivered;
    break;
  }
  if (states.internet_up && !(internet_just_failed && states.gsm_up)) {
    plan.steps.push_back({ChannelKind::Internet, DispatchReason::Primary});
  } else if (states.gsm_up) {
    plan.steps.push_back({ChannelKind::GsmSms, DispatchReason::Fallback});
  }
  return plan;
}

bool AlertBook::delivered_remote(const AlertEvent& a) {
  return std::any_of(a.dispatches.begin(), a.dispatches.end(), [](const Dispatch& d) {
    return d.channel != ChannelKind::LocalLed && d.outcome == DispatchOutcome::Delivered;
  });
}

AlertBook::Entry& AlertBook::entry(const std::string& alert_id) {
  auto it = alerts_.find(alert_id);
  if (it == alerts_.end()) throw UnknownAlert(alert_id);
  return it->second;
}

const AlertEvent& AlertBook::raise(AlertEvent alert, TimeMs now_ms) {
  auto it = alerts_.find(alert.alert_id);
  if (it != alerts_.end()) return it->second.alert;
  Entry e;
  e.updated_at_ms = now_ms;
  e.alert = std::move(alert);
  auto [pos, inserted] = alerts_.emplace(e.alert.alert_id, std::move(e));
  // Pending until a remote dispatch is under way.
  pending_.insert(pos->first);
  return pos->second.alert;
}

DispatchPlan AlertBook::dispatch(const std::string& alert_id, ChannelStates states,
                                 AlertPolicy policy, TimeMs now_ms) {
  Entry& e = entry(alert_id);
  DispatchPlan plan = plan_dispatch(e.alert, states, policy);
  const bool first = e.alert.dispatches.empty();
  for (const auto& step : plan.steps) {
    Dispatch d;
    d.channel = step.channel;
    if (step.channel == ChannelKind::LocalLed) {
      // The bedside LED lit in the tick that raised the alert.
      if (!first) continue;
      d.dispatched_at_ms = e.alert.raised_at_ms;
      d.delivered_at_ms = e.alert.raised_at_ms;
      d.outcome = DispatchOutcome::Delivered;
    } else {
      d.dispatched_at_ms = std::max(now_ms, e.alert.raised_at_ms);
      d.outcome = DispatchOutcome::InFlight;
      ++e.in_flight;
    }
    e.alert.dispatches.push_back(d);
  }
  e.updated_at_ms = now_ms;
  if (plan.has_remote()) {
    pending_.erase(alert_id);
  } else if (!e.alert.ack && !delivered_remote(e.alert)) {
    pending_.insert(alert_id);
  }
  return plan;
}

bool AlertBook::record_result(const std::string& alert_id, ChannelKind channel,
                              const DeliveryResult& r, TimeMs now_ms) {
  Entry& e = entry(alert_id);
  for (auto& d : e.alert.dispatches) {
    if (d.channel != channel || d.outcome != DispatchOutcome::InFlight) continue;
    if (r.delivered()) {
      d.outcome = DispatchOutcome::Delivered;
      d.delivered_at_ms = std::max(now_ms, d.dispatched_at_ms);
    } else {
      d.outcome = DispatchOutcome::Undelivered;
    }
    --e.in_flight;
    e.updated_at_ms = now_ms;
    if (e.in_flight == 0 && !e.alert.ack && !delivered_remote(e.alert)) {
      pending_.insert(alert_id);
    }
    return true;
  }
  return false;
}

std::vector<DispatchPlan> AlertBook::escalate_pending(ChannelStates states, AlertPolicy policy,
                                                      TimeMs now_ms) {
  std::vector<DispatchPlan> plans;
  if (!states.internet_up && !states.gsm_up) return plans;
  const std::vector<std::string> ids(pending_.begin(), pending_.end());
  for (const auto& id : ids) {
    Entry& e = entry(id);
    if (e.alert.ack || delivered_remote(e.alert)) {
      pending_.erase(id);
      continue;
    }
    if (!plan_dispatch(e.alert, states, policy).has_remote()) continue;
    plans.push_back(dispatch(id, states, policy, now_ms));
  }
  return plans;
}

const AlertEvent& AlertBook::acknowledge(const std::string& alert_id, const std::string& user_id,
                                         TimeMs now_ms) {
  Entry& e = entry(alert_id);
  if (!e.alert.ack) {
    e.alert.ack = Acknowledgement{user_id, now_ms};
    e.updated_at_ms = now_ms;
    pending_.erase(alert_id);
  }
  return e.alert;
}

void AlertBook::restore_dispatch(const std::string& alert_id, const Dispatch& d) {
  Entry& e = entry(alert_id);
  e.alert.dispatches.push_back(d);
  if (d.outcome == DispatchOutcome::Delivered && d.channel != ChannelKind::LocalLed) {
    pending_.erase(alert_id);
  }
}

void AlertBook::requeue_undelivered() {
  for (auto& [id, e] : alerts_) {
    e.in_flight = 0;
    if (!e.alert.ack && !delivered_remote(e.alert)) pending_.insert(id);
  }
}

const AlertEvent* AlertBook::find(const std::string& alert_id) const {
  auto it = alerts_.find(alert_id);
  return it == alerts_.end() ? nullptr : &it->second.alert;
}

AlertStatus AlertBook::status(const std::string& alert_id) const {
  auto it = alerts_.find(alert_id);
  if (it == alerts_.end()) throw UnknownAlert(alert_id);
  const Entry& e = it->second;
  if (e.alert.ack) return AlertStatus::Acknowledged;
  if (delivered_remote(e.alert)) return AlertStatus::Delivered;
  if (e.in_flight > 0) return AlertStatus::InFlight;
  if (pending_.count(alert_id) != 0) return AlertStatus::Pending;
  throw InvariantViolation("alert " + alert_id + " is neither acknowledged, delivered, in flight "
                           "nor pending");
}

std::vector<AlertEvent> AlertBook::updated_since(TimeMs since_ms) const {
  std::vector<const Entry*> hits;
  for (const auto& [id, e] : alerts_) {
    if (e.updated_at_ms >= since_ms) hits.push_back(&e);
  }
  std::sort(hits.begin(), hits.end(), [](const Entry* a, const Entry* b) {
    if (a->alert.raised_at_ms != b->alert.raised_at_ms) {
      return a->alert.raised_at_ms > b->alert.raised_at_ms;
    }
    return a->alert.alert_id < b->alert.alert_id;
  });
  std::vector<AlertEvent> out;
  out.reserve(hits.size());
  for (const auto* e : hits) out.push_back(e->alert);
  return out;
}

std::vector<AlertEvent> AlertBook::all() const {
  std::vector<AlertEvent> out;
  out.reserve(alerts_.size());
  for (const auto& [id, e] : alerts_) out.push_back(e.alert);
  return out;
}

}  // namespace wardsim
