#include "wardsim/server/journal.hpp"

#include "wardsim/core/text.hpp"
#include "wardsim/server/wire.hpp"

namespace wardsim::journal {

using text::format_double;
using text::parse_double;
using text::parse_int;

bool valid_display_name(std::string_view name) {
  if (name.empty() || name.size() > 64) return false;
  for (char c : name) {
    if (c < ' ' || c > '~' || c == '|') return false;
  }
  return true;
}

std::string_view channel_code(ChannelKind k) {
  switch (k) {
    case ChannelKind::Internet: return "INTERNET";
    case ChannelKind::GsmSms: return "GSM";
    case ChannelKind::LocalLed: return "LED";
    case ChannelKind::WifiLink: return "WIFI";
  }
  return "?";
}

std::optional<ChannelKind> channel_from_code(std::string_view code) {
  if (code == "INTERNET") return ChannelKind::Internet;
  if (code == "GSM") return ChannelKind::GsmSms;
  if (code == "LED") return ChannelKind::LocalLed;
  if (code == "WIFI") return ChannelKind::WifiLink;
  return std::nullopt;
}

std::string format(const Record& r) {
  return std::visit(
      [](const auto& rec) -> std::string {
        using T = std::decay_t<decltype(rec)>;
        if constexpr (std::is_same_v<T, PatientRegistered>) {
          return "P1|" + rec.patient_id + '|' + rec.device_id + '|' + rec.display_name;
        } else if constexpr (std::is_same_v<T, ThresholdsSet>) {
          const auto& th = rec.thresholds;
          std::string out = "T1|" + rec.patient_id;
          for (double v : {th.heart_rate.min, th.heart_rate.max, th.temperature.min,
                           th.temperature.max, th.systolic.min, th.systolic.max, th.diastolic.min,
                           th.diastolic.max}) {
            out += '|';
            out += format_double(v);
          }
          out += '|' + std::to_string(th.debounce_ms);
          return out;
        } else if constexpr (std::is_same_v<T, UserCreated>) {
          const auto& a = rec.account;
          return "U1|" + a.user_id + '|' + a.username + '|' + std::string(to_string(a.role)) +
                 '|' + a.secret_hash;
        } else if constexpr (std::is_same_v<T, AlertAcked>) {
          return "K1|" + rec.alert_id + '|' + rec.user_id + '|' + std::to_string(rec.ack_at_ms);
        } else {
          const auto& d = rec.dispatch;
          return "D1|" + rec.alert_id + '|' + std::string(channel_code(d.channel)) + '|' +
                 std::to_string(d.dispatched_at_ms) + '|' +
                 (d.delivered_at_ms ? std::to_string(*d.delivered_at_ms) : std::string("-"));
        }
      },
      r);
}

std::optional<Record> parse(std::string_view line) {
  if (!line.empty() && line.back() == '\n') line.remove_suffix(1);
  const auto f = text::split(line, '|');
  if (f.empty()) return std::nullopt;

  if (f[0] == "P1" && f.size() == 4) {
    if (!wire::valid_identifier(f[1]) || !wire::valid_identifier(f[2]) ||
        !valid_display_name(f[3])) {
      return std::nullopt;
    }
    return PatientRegistered{std::string(f[1]), std::string(f[2]), std::string(f[3])};
  }
  if (f[0] == "T1" && f.size() == 11) {
    if (!wire::valid_identifier(f[1])) return std::nullopt;
    double v[8];
    for (int i = 0; i < 8; ++i) {
      auto d = parse_double(f[2 + i]);
      if (!d) return std::nullopt;
      v[i] = *d;
    }
    auto debounce = parse_int<std::uint32_t>(f[10]);
    if (!debounce) return std::nullopt;
    ThresholdsSet t;
    t.patient_id = std::string(f[1]);
    t.thresholds = Thresholds{{v[0], v[1]}, {v[2], v[3]}, {v[4], v[5]}, {v[6], v[7]}, *debounce};
    return t;
  }
  if (f[0] == "U1" && f.size() == 5) {
    auto role = role_from_string(f[3]);
    if (!wire::valid_identifier(f[1]) || !wire::valid_identifier(f[2]) || !role ||
        f[4].empty()) {
      return std::nullopt;
    }
    UserCreated u;
    u.account = UserAccount{std::string(f[1]), std::string(f[2]), std::string(f[4]), *role};
    return u;
  }
  if (f[0] == "K1" && f.size() == 4) {
    auto t = parse_int<TimeMs>(f[3]);
    if (!wire::valid_identifier(f[1]) || !wire::valid_identifier(f[2]) || !t) return std::nullopt;
    return AlertAcked{std::string(f[1]), std::string(f[2]), *t};
  }
  if (f[0] == "D1" && f.size() == 5) {
    auto channel = channel_from_code(f[2]);
    auto sent = parse_int<TimeMs>(f[3]);
    if (!wire::valid_identifier(f[1]) || !channel || !sent) return std::nullopt;
    DispatchResolved d;
    d.alert_id = std::string(f[1]);
    d.dispatch.channel = *channel;
    d.dispatch.dispatched_at_ms = *sent;
    if (f[4] == "-") {
      d.dispatch.outcome = DispatchOutcome::Undelivered;
    } else {
      auto delivered = parse_int<TimeMs>(f[4]);
      if (!delivered) return std::nullopt;
      d.dispatch.delivered_at_ms = *delivered;
      d.dispatch.outcome = DispatchOutcome::Delivered;
    }
    return d;
  }
  return std::nullopt;
}

}  // namespace wardsim::journal
