#include "wardsim/device/device.hpp"

#include <algorithm>
#include <cmath>

#include "wardsim/core/errors.hpp"
#include "wardsim/core/text.hpp"
#include "wardsim/server/wire.hpp"

namespace wardsim {

namespace {

std::string pad(std::string line) {
  line.resize(kLcdCols, ' ');
  return line;
}

std::size_t digital_index(SensorKind k) { return k == SensorKind::EyeBlink ? 0 : 1; }

Severity worse(std::optional<Severity> a, Severity b) {
  if (a == Severity::Critical || b == Severity::Critical) return Severity::Critical;
  return Severity::Notice;
}

struct Fresh {
  SensorKind kind;
  Seq seq;
  TimeMs t_ms;
  Measurement value;
};

}  // namespace

std::string_view to_string(DeviceMode m) {
  switch (m) {
    case DeviceMode::Boot: return "Boot";
    case DeviceMode::Monitoring: return "Monitoring";
    case DeviceMode::AlertActive: return "AlertActive";
  }
  return "?";
}

TimeMs backoff_delay(const DevicePolicy& policy, unsigned failures) {
  if (failures == 0) return 0;
  const unsigned shift = std::min(failures - 1, 40u);
  return policy.base_backoff_ms * (TimeMs{1} << shift);
}

DeviceState make_device(std::string device_id, std::string patient_id) {
  DeviceState s;
  s.device_id = std::move(device_id);
  s.patient_id = std::move(patient_id);
  s.lcd = render_lcd(s);
  return s;
}

LcdBuffer render_lcd(const DeviceState& s) {
  LcdBuffer lcd;
  const auto& hr = s.last(SensorKind::HeartRate);
  const auto& temp = s.last(SensorKind::BodyTemperature);
  const auto& bp = s.last(SensorKind::BloodPressure);

  std::string l1 = "HR:";
  if (const Bpm* b = hr ? std::get_if<Bpm>(&hr->value) : nullptr) {
    l1 += std::to_string(std::llround(b->value));
  } else {
    l1 += "--";
  }
  l1 += " BPM";

  std::string l2 = "T:";
  if (const Celsius* c = temp ? std::get_if<Celsius>(&temp->value) : nullptr) {
    l2 += text::format_fixed(c->value, 1);
  } else {
    l2 += "--";
  }
  l2 += "C";

  std::string l3 = "BP:";
  if (const Pressure* p = bp ? std::get_if<Pressure>(&bp->value) : nullptr) {
    l3 += std::to_string(std::llround(p->systolic)) + "/" + std::to_string(std::llround(p->diastolic));
  } else {
    l3 += "--/--";
  }

  std::string l4;
  switch (s.mode) {
    case DeviceMode::Boot: l4 = "STATUS: BOOT"; break;
    case DeviceMode::Monitoring: l4 = "STATUS: OK"; break;
    case DeviceMode::AlertActive:
      l4 = "ALERT: ";
      l4 += s.display_cause ? lcd_code(*s.display_cause) : std::string_view("?");
      break;
  }

  lcd[0] = pad(std::move(l1));
  lcd[1] = pad(std::move(l2));
  lcd[2] = pad(std::move(l3));
  lcd[3] = pad(std::move(l4));
  return lcd;
}

TickResult tick(DeviceState s, const TickInputs& inputs, TimeMs now_ms, const Thresholds& th,
                const DevicePolicy& policy) {
  std::vector<Effect> fx;
  if (s.last_tick_ms) now_ms = std::max(now_ms, *s.last_tick_ms);
  s.last_tick_ms = now_ms;

  // (1) Ingest.
  std::array<bool, 5> seen{};
  std::vector<Fresh> fresh;
  auto ingest = [&](const Reading& r) {
    const auto k = index_of(r.kind);
    if (seen[k] || !measurement_valid(r.kind, r.value)) {
      ++s.dropped_readings;
      return;
    }
    seen[k] = true;
    const Seq seq = s.next_seq++;
    s.last_reading[k] = LastReading{r.value, r.t_ms};
    OutboundRecord rec;
    rec.seq = seq;
    rec.payload = VitalSample{s.device_id, s.patient_id, seq, r.t_ms, r.kind, r.value};
    rec.next_attempt_at_ms = now_ms;
    s.outbox.emplace(seq, std::move(rec));
    ++s.samples_enqueued;
    fx.emplace_back(effect::EnqueuedSample{seq});
    fresh.push_back(Fresh{r.kind, seq, r.t_ms, r.value});
  };
  for (const auto& r : inputs.readings) ingest(r);

  if (!inputs.pulses.empty()) {
    for (TimeMs p : inputs.pulses) {
      if (s.pulses.empty() || p > s.pulses.back()) s.pulses.push_back(p);
    }
    const TimeMs newest = s.pulses.back();
    std::erase_if(s.pulses, [&](TimeMs p) { return p < newest - policy.pulse_window_ms; });
    if (!seen[index_of(SensorKind::HeartRate)]) {
      try {
        ingest(Reading{SensorKind::HeartRate,
                       Bpm{compute_bpm(s.pulses, policy.pulse_window_ms)}, newest});
      } catch (const NoReading&) {
      }
    }
  }

  // (2) Classify and raise.
  auto raise = [&](AlertCause cause, const Fresh& trigger) {
    const Seq alert_seq = s.next_seq++;
    const Severity sev = severity_of(cause);
    OutboundRecord rec;
    rec.seq = alert_seq;
    rec.payload = AlertSkeleton{cause, sev, now_ms, trigger.seq};
    rec.next_attempt_at_ms = now_ms;
    s.outbox.emplace(alert_seq, std::move(rec));
    ++s.alerts_enqueued;

    s.mode = DeviceMode::AlertActive;
    s.display_cause = cause;
    const LedState led{worse(s.led.on, sev)};
    if (led != s.led) {
      s.led = led;
      fx.emplace_back(effect::LedChanged{led});
    }
    fx.emplace_back(effect::RaisedAlert{cause, alert_seq, trigger.seq, trigger.t_ms});
    if (policy.sms == DeviceSmsPolicy::WhenOffline && !s.wifi_believed_up) {
      s.sms_queue[alert_seq] = PendingSms{alert_seq, cause, now_ms, now_ms, true};
      fx.emplace_back(effect::SmsRequested{cause, alert_seq});
    }
  };

  bool raised = false;
  for (const auto& f : fresh) {
    if (is_analog(f.kind)) {
      const auto cause = classify(f.kind, f.value, th).cause;
      auto& latch = s.analog_latch[index_of(f.kind)];
      if (cause) {
        s.last_abnormal_ms = std::max(s.last_abnormal_ms.value_or(f.t_ms), f.t_ms);
        if (cause != latch) {
          raise(*cause, f);
          raised = true;
        }
      }
      latch = cause;
    } else {
      const auto d = digital_index(f.kind);
      auto& detector = s.edge_detectors[d];
      detector.set_debounce(th.debounce_ms);
      const bool rising = std::get<DigitalEdge>(f.value).rising;
      const bool accepted = detector.feed(f.t_ms, rising ? 1 : 0);
      if (rising) detector.feed(f.t_ms, 0);
      if (!accepted) continue;
      s.last_abnormal_ms = std::max(s.last_abnormal_ms.value_or(f.t_ms), f.t_ms);
      auto& quiet_at = s.digital_quiet_at[d];
      if (!quiet_at || f.t_ms >= *quiet_at) {
        raise(responsiveness_cause(f.kind), f);
        raised = true;
      }
      quiet_at = f.t_ms + policy.clear_hold_ms;
    }
  }

  if (s.mode == DeviceMode::Boot) s.mode = DeviceMode::Monitoring;
  if (s.mode == DeviceMode::AlertActive && !raised) {
    bool all_normal = true;
    for (SensorKind k : kAnalogKinds) {
      const auto& last = s.last(k);
      if (last && !classify(k, last->value, th).normal()) all_normal = false;
    }
    const bool quiet = !s.last_abnormal_ms || now_ms - *s.last_abnormal_ms >= policy.clear_hold_ms;
    if (all_normal && quiet) {
      s.mode = DeviceMode::Monitoring;
      s.display_cause.reset();
      s.led = LedState{};
      fx.emplace_back(effect::LedChanged{s.led});
    }
  }

  // Retries of device-side SMS, and SMS for dead-lettered alert records.
  for (auto& [seq, sms] : s.sms_queue) {
    if (sms.in_flight || sms.next_attempt_at_ms > now_ms) continue;
    sms.in_flight = true;
    fx.emplace_back(effect::SmsRequested{sms.cause, seq});
  }

  // (3) Render.
  LcdBuffer lcd = render_lcd(s);
  if (lcd != s.lcd) {
    s.lcd = std::move(lcd);
    fx.emplace_back(effect::LcdUpdated{});
  }

  // (4) Transmit.
  if (s.wifi_believed_up && policy.batch_size > 0) {
    effect::TransmitBatch batch;
    for (auto& [seq, rec] : s.outbox) {
      if (rec.in_flight || rec.next_attempt_at_ms > now_ms) continue;
      rec.in_flight = true;
      batch.seqs.push_back(seq);
      if (batch.seqs.size() == policy.batch_size) break;
    }
    if (!batch.seqs.empty()) fx.emplace_back(std::move(batch));
  }

  return TickResult{std::move(s), std::move(fx)};
}

DeviceState on_ack(DeviceState state, const std::vector<Seq>& acked_seqs) {
  for (Seq seq : acked_seqs) state.outbox.erase(seq);
  return state;
}

DeviceState on_send_result(DeviceState state, Seq seq, DeliveryStatus result, TimeMs now_ms,
                           const DevicePolicy& policy) {
  auto it = state.outbox.find(seq);
  if (it == state.outbox.end()) return state;
  OutboundRecord& rec = it->second;
  switch (result) {
    case DeliveryStatus::Delivered:
      break;
    case DeliveryStatus::ChannelDown:
      rec.in_flight = false;
      rec.next_attempt_at_ms = now_ms;
      state.wifi_believed_up = false;
      break;
    case DeliveryStatus::Lost:
      rec.in_flight = false;
      ++rec.attempts;
      if (rec.attempts >= policy.max_retries + 1) {
        if (const auto* a = std::get_if<AlertSkeleton>(&rec.payload);
            a && policy.sms == DeviceSmsPolicy::WhenOffline && !state.sms_queue.count(seq)) {
          state.sms_queue[seq] = PendingSms{seq, a->cause, a->raised_at_ms, now_ms, false};
        }
        state.dead_letter.push_back(std::move(rec));
        state.outbox.erase(it);
      } else {
        rec.next_attempt_at_ms = now_ms + backoff_delay(policy, rec.attempts);
      }
      break;
  }
  return state;
}

DeviceState on_sms_result(DeviceState state, Seq alert_seq, DeliveryStatus result, TimeMs now_ms,
                          const DevicePolicy& policy) {
  auto it = state.sms_queue.find(alert_seq);
  if (it == state.sms_queue.end()) return state;
  if (result == DeliveryStatus::Delivered) {
    state.sms_queue.erase(it);
  } else {
    it->second.in_flight = false;
    it->second.next_attempt_at_ms = now_ms + policy.sms_retry_ms;
  }
  return state;
}

DeviceState on_link_change(DeviceState state, bool wifi_up) {
  state.wifi_believed_up = wifi_up;
  return state;
}

std::string wire_line(const DeviceState& state, const OutboundRecord& record) {
  if (const auto* sample = std::get_if<VitalSample>(&record.payload)) {
    return wire::format(wire::to_record(*sample));
  }
  const auto& a = std::get<AlertSkeleton>(record.payload);
  return wire::format(wire::AlertRecord{state.device_id, record.seq, a.raised_at_ms, a.cause,
                                        a.severity});
}

void check_invariants(const DeviceState& s, const DevicePolicy& policy) {
  for (const auto& line : s.lcd) {
    if (line.size() != kLcdCols) throw InvariantViolation("lcd line is not 20 columns");
    for (char c : line) {
      if (c < ' ' || c > '~') throw InvariantViolation("lcd holds a non-printable character");
    }
  }
  if (s.led.lit() != (s.mode == DeviceMode::AlertActive)) {
    throw InvariantViolation("led must be lit exactly while an alert is active");
  }
  for (const auto& [seq, rec] : s.outbox) {
    if (rec.seq != seq) throw InvariantViolation("outbox key does not match record seq");
    if (seq >= s.next_seq) throw InvariantViolation("outbox seq not below next_seq");
    if (rec.attempts > policy.max_retries + 1) {
      throw InvariantViolation("outbox record exceeded its attempt budget");
    }
  }
  for (const auto& rec : s.dead_letter) {
    if (rec.seq >= s.next_seq) throw InvariantViolation("dead-letter seq not below next_seq");
    if (s.outbox.count(rec.seq)) throw InvariantViolation("record both queued and dead-lettered");
  }
}

}  // namespace wardsim
