#include "wardsim/netsim/channel.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "wardsim/core/errors.hpp"

namespace wardsim {

void ChannelModel::validate() const {
  const std::string name(to_string(kind));
  if (kind == ChannelKind::LocalLed) throw InvalidChannel("LocalLed is not a network channel");
  if (!(loss_prob >= 0.0 && loss_prob <= 1.0)) {
    throw InvalidChannel(name + ": loss_prob must be in [0, 1]");
  }
  if (latency_mean_ms < 0 || latency_jitter_ms < 0) {
    throw InvalidChannel(name + ": latencies must be >= 0");
  }
  if (latency_jitter_ms > latency_mean_ms) {
    throw InvalidChannel(name + ": latency_jitter_ms must not exceed latency_mean_ms");
  }
  for (std::size_t i = 0; i < outages.size(); ++i) {
    if (outages[i].to_ms <= outages[i].from_ms) {
      throw InvalidChannel(name + ": outage intervals must be non-empty");
    }
    if (i > 0 && outages[i].from_ms < outages[i - 1].to_ms) {
      throw InvalidChannel(name + ": outage intervals must be sorted and non-overlapping");
    }
  }
}

ChannelModel ChannelModel::wifi_default() {
  return {ChannelKind::WifiLink, 0.02, 40, 20, {}};
}

ChannelModel ChannelModel::internet_default() {
  return {ChannelKind::Internet, 0.02, 150, 50, {}};
}

ChannelModel ChannelModel::gsm_default() {
  return {ChannelKind::GsmSms, 0.0, 4200, 600, {}};
}

std::string_view to_string(DeliveryStatus s) {
  switch (s) {
    case DeliveryStatus::Delivered: return "DELIVERED";
    case DeliveryStatus::Lost: return "LOST";
    case DeliveryStatus::ChannelDown: return "DOWN";
  }
  return "?";
}

bool is_up(const ChannelModel& model, TimeMs t_ms) {
  // Last outage starting at or before t.
  auto it = std::upper_bound(model.outages.begin(), model.outages.end(), t_ms,
                             [](TimeMs t, const Outage& o) { return t < o.from_ms; });
  if (it == model.outages.begin()) return true;
  --it;
  return t_ms >= it->to_ms;
}

std::optional<TimeMs> next_transition(const ChannelModel& model, TimeMs t_ms) {
  for (const auto& o : model.outages) {
    if (o.from_ms > t_ms) return o.from_ms;
    if (o.to_ms > t_ms) return o.to_ms;
  }
  return std::nullopt;
}

DeliveryResult channel_send(const ChannelModel& model, TimeMs t_ms, Rng& rng) {
  const double loss_draw = rng.uniform();
  const double latency_draw = rng.uniform();
  if (!is_up(model, t_ms)) return DeliveryResult::down();
  if (loss_draw < model.loss_prob) return DeliveryResult::lost();
  const double jitter = (2.0 * latency_draw - 1.0) * static_cast<double>(model.latency_jitter_ms);
  const TimeMs latency = model.latency_mean_ms + static_cast<TimeMs>(std::llround(jitter));
  return DeliveryResult::delivered_after(latency);
}

DeliveryResult sms_send(const ChannelModel& model, const AlertEvent& /*alert*/, TimeMs t_ms,
                        Rng& rng) {
  if (model.kind != ChannelKind::GsmSms) throw InvalidChannel("sms_send requires a GsmSms model");
  return channel_send(model, t_ms, rng);
}

double eventual_delivery_prob(double loss_prob, unsigned max_retries) {
  return 1.0 - std::pow(loss_prob, static_cast<double>(max_retries) + 1.0);
}

}  // namespace wardsim
