#include <doctest.h>

#include <algorithm>
#include <random>

#include "wardsim/core/errors.hpp"
#include "wardsim/device/device.hpp"

using namespace wardsim;

namespace {

const Thresholds kTh{};
const DevicePolicy kPol{};

Reading hr(double bpm, TimeMs t) { return {SensorKind::HeartRate, Bpm{bpm}, t}; }

template <typename E>
std::size_t count_of(const std::vector<Effect>& fx) {
  return static_cast<std::size_t>(
      std::count_if(fx.begin(), fx.end(), [](const Effect& e) { return std::holds_alternative<E>(e); }));
}

template <typename E>
const E* first_of(const std::vector<Effect>& fx) {
  for (const auto& e : fx) {
    if (const auto* p = std::get_if<E>(&e)) return p;
  }
  return nullptr;
}

DeviceState run(DeviceState s, std::vector<Reading> rs, TimeMs now,
                std::vector<Effect>* fx = nullptr, const DevicePolicy& pol = kPol) {
  auto r = tick(std::move(s), TickInputs{std::move(rs), {}}, now, kTh, pol);
  if (fx) *fx = r.effects;
  return std::move(r.state);
}

// Fills every analog kind with a normal value.
DeviceState normal_state() {
  auto s = make_device("d1", "p1");
  return run(std::move(s),
             {hr(72, 0), {SensorKind::BodyTemperature, Celsius{36.62}, 0},
              {SensorKind::BloodPressure, Pressure{120.2, 80.4}, 0}},
             0);
}

}  // namespace

TEST_CASE("happy path effect order") {
  auto s = make_device("d1", "p1");
  std::vector<Effect> fx;
  s = run(s, {hr(72, 0)}, 0, &fx);
  REQUIRE(fx.size() == 3);
  CHECK(std::holds_alternative<effect::EnqueuedSample>(fx[0]));
  CHECK(std::holds_alternative<effect::LcdUpdated>(fx[1]));
  const auto& tb = std::get<effect::TransmitBatch>(fx[2]);
  CHECK(tb.seqs == std::vector<Seq>{std::get<effect::EnqueuedSample>(fx[0]).seq});
  CHECK(s.mode == DeviceMode::Monitoring);
}

TEST_CASE("low heart rate lights the LED in the same tick") {
  auto s = make_device("d1", "p1");
  std::vector<Effect> fx;
  s = run(s, {hr(45, 0)}, 0, &fx);
  const auto* ra = first_of<effect::RaisedAlert>(fx);
  REQUIRE(ra != nullptr);
  CHECK(ra->cause == AlertCause::LowHeartRate);
  CHECK(ra->trigger_t_ms == 0);
  const auto* led = first_of<effect::LedChanged>(fx);
  REQUIRE(led != nullptr);
  CHECK(led->state.on == Severity::Critical);
  CHECK(s.mode == DeviceMode::AlertActive);
  CHECK(s.outbox.at(ra->alert_seq).is_alert());
  CHECK(ra->sample_seq.has_value());
  CHECK(*ra->sample_seq < ra->alert_seq);
}

TEST_CASE("analog alerts latch until the reading is normal again") {
  auto s = make_device("d1", "p1");
  std::vector<Effect> fx;
  std::size_t raised = 0;
  for (TimeMs t = 0; t < 5000; t += 1000) {
    s = run(s, {hr(45, t)}, t, &fx);
    raised += count_of<effect::RaisedAlert>(fx);
  }
  CHECK(raised == 1);
  s = run(s, {hr(72, 5000)}, 5000, &fx);
  s = run(s, {hr(40, 6000)}, 6000, &fx);
  CHECK(count_of<effect::RaisedAlert>(fx) == 1);
}

TEST_CASE("alert mode clears after the hold time") {
  auto s = normal_state();
  std::vector<Effect> fx;
  s = run(s, {hr(45, 1000)}, 1000, &fx);
  CHECK(s.mode == DeviceMode::AlertActive);
  s = run(s, {hr(72, 2000)}, 2000, &fx);
  CHECK(s.mode == DeviceMode::AlertActive);
  s = run(s, {hr(72, 1000 + kPol.clear_hold_ms)}, 1000 + kPol.clear_hold_ms, &fx);
  CHECK(s.mode == DeviceMode::Monitoring);
  const auto* led = first_of<effect::LedChanged>(fx);
  REQUIRE(led != nullptr);
  CHECK_FALSE(led->state.lit());
}

TEST_CASE("digital edges raise notice alerts") {
  auto s = normal_state();
  std::vector<Effect> fx;
  s = run(s, {{SensorKind::EyeBlink, DigitalEdge{}, 1000}}, 1000, &fx);
  const auto* ra = first_of<effect::RaisedAlert>(fx);
  REQUIRE(ra != nullptr);
  CHECK(ra->cause == AlertCause::EyeBlinkDetected);
  CHECK(s.led.on == Severity::Notice);
  // A second edge inside clear_hold does not raise again.
  s = run(s, {{SensorKind::EyeBlink, DigitalEdge{}, 3000}}, 3000, &fx);
  CHECK(count_of<effect::RaisedAlert>(fx) == 0);
  // Critical outranks notice on the LED.
  s = run(s, {hr(45, 3500)}, 3500, &fx);
  CHECK(s.led.on == Severity::Critical);
}

TEST_CASE("wifi down buffers without transmitting") {
  auto s = on_link_change(make_device("d1", "p1"), false);
  std::size_t batches = 0;
  std::vector<Effect> fx;
  for (TimeMs t = 0; t < 3000; t += 1000) {
    s = run(s, {hr(72, t)}, t, &fx);
    batches += count_of<effect::TransmitBatch>(fx);
  }
  CHECK(batches == 0);
  CHECK(s.outbox.size() == 3);
  s = on_link_change(s, true);
  s = run(s, {}, 3000, &fx);
  const auto* tb = first_of<effect::TransmitBatch>(fx);
  REQUIRE(tb != nullptr);
  CHECK(tb->seqs.size() == 3);
}

TEST_CASE("alert while offline requests an SMS") {
  auto s = on_link_change(make_device("d1", "p1"), false);
  std::vector<Effect> fx;
  s = run(s, {hr(45, 0)}, 0, &fx);
  const auto* sms = first_of<effect::SmsRequested>(fx);
  REQUIRE(sms != nullptr);
  CHECK(sms->cause == AlertCause::LowHeartRate);
  CHECK(s.sms_queue.size() == 1);

  // Lost SMS retries after sms_retry_ms, delivered SMS leaves the queue.
  s = on_sms_result(s, sms->alert_seq, DeliveryStatus::Lost, 5000, kPol);
  s = run(s, {}, 5000 + kPol.sms_retry_ms - 1, &fx);
  CHECK(count_of<effect::SmsRequested>(fx) == 0);
  s = run(s, {}, 5000 + kPol.sms_retry_ms, &fx);
  CHECK(count_of<effect::SmsRequested>(fx) == 1);
  s = on_sms_result(s, sms->alert_seq, DeliveryStatus::Delivered, 40000, kPol);
  CHECK(s.sms_queue.empty());

  DevicePolicy never = kPol;
  never.sms = DeviceSmsPolicy::Never;
  auto q = on_link_change(make_device("d2", "p2"), false);
  q = run(q, {hr(45, 0)}, 0, &fx, never);
  CHECK(count_of<effect::SmsRequested>(fx) == 0);
}

TEST_CASE("render_lcd") {
  auto s = normal_state();
  auto lcd = render_lcd(s);
  CHECK(lcd == LcdBuffer{"HR:72 BPM           ", "T:36.6C             ", "BP:120/80           ",
                         "STATUS: OK          "});

  auto fresh = render_lcd(make_device("d1", "p1"));
  CHECK(fresh[0] == "HR:-- BPM           ");
  CHECK(fresh[1] == "T:--C               ");
  CHECK(fresh[2] == "BP:--/--            ");
  CHECK(fresh[3] == "STATUS: BOOT        ");

  s = run(s, {hr(45, 1000)}, 1000);
  CHECK(render_lcd(s)[3] == "ALERT: LOW HR       ");
}

TEST_CASE("lcd is always 4 x 20 printable") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> any(-1e6, 1e6);
  auto s = make_device("d1", "p1");
  for (int i = 0; i < 2000; ++i) {
    const TimeMs t = i * 500;
    std::vector<Reading> rs;
    switch (rng() % 4) {
      case 0: rs.push_back(hr(any(rng), t)); break;
      case 1: rs.push_back({SensorKind::BodyTemperature, Celsius{any(rng)}, t}); break;
      case 2: rs.push_back({SensorKind::BloodPressure, Pressure{any(rng), any(rng)}, t}); break;
      default: rs.push_back(hr(static_cast<double>(rng() % 400), t)); break;
    }
    s = run(s, rs, t);
    for (const auto& line : s.lcd) {
      REQUIRE(line.size() == kLcdCols);
      for (char c : line) CHECK((c >= 0x20 && c < 0x7f));
    }
    s = on_ack(s, [&] {
      std::vector<Seq> all;
      for (const auto& [seq, r] : s.outbox) all.push_back(seq);
      return all;
    }());
  }
  CHECK(s.dropped_readings > 0);
}

TEST_CASE("on_ack") {
  auto s = on_link_change(make_device("d1", "p1"), false);
  for (TimeMs t = 0; t < 3000; t += 1000) s = run(s, {hr(72, t)}, t);
  std::vector<Seq> seqs;
  for (const auto& [seq, r] : s.outbox) seqs.push_back(seq);
  REQUIRE(seqs.size() == 3);

  auto same = on_ack(s, {});
  CHECK(same.outbox == s.outbox);
  same = on_ack(s, {99});
  CHECK(same.outbox == s.outbox);
  auto two = on_ack(s, {seqs[0], seqs[1]});
  REQUIRE(two.outbox.size() == 1);
  CHECK(two.outbox.begin()->first == seqs[2]);
}

TEST_CASE("backoff doubles") {
  CHECK(backoff_delay(kPol, 1) == 500);
  CHECK(backoff_delay(kPol, 2) == 1000);
  CHECK(backoff_delay(kPol, 3) == 2000);
  CHECK(backoff_delay(kPol, 4) == 4000);
  CHECK(backoff_delay(kPol, 5) == 8000);
}

TEST_CASE("losses back off then dead-letter") {
  auto s = make_device("d1", "p1");
  std::vector<Effect> fx;
  s = run(s, {hr(72, 0)}, 0, &fx);
  const Seq seq = std::get<effect::EnqueuedSample>(fx[0]).seq;
  TimeMs now = 0;
  for (unsigned n = 1; n <= 5; ++n) {
    now += 1000;
    s = on_send_result(s, seq, DeliveryStatus::Lost, now, kPol);
    REQUIRE(s.outbox.count(seq) == 1);
    CHECK(s.outbox.at(seq).attempts == n);
    CHECK(s.outbox.at(seq).next_attempt_at_ms - now == 500 * (1 << (n - 1)));
    check_invariants(s, kPol);
    // Not due yet: no retransmission.
    s = run(s, {}, s.outbox.at(seq).next_attempt_at_ms - 1, &fx);
    CHECK(count_of<effect::TransmitBatch>(fx) == 0);
    now = s.outbox.at(seq).next_attempt_at_ms;
    s = run(s, {}, now, &fx);
    REQUIRE(count_of<effect::TransmitBatch>(fx) == 1);
  }
  const auto before = s.outbox.size();
  s = on_send_result(s, seq, DeliveryStatus::Lost, now + 1000, kPol);
  CHECK(s.outbox.size() == before - 1);
  REQUIRE(s.dead_letter.size() == 1);
  CHECK(s.dead_letter[0].seq == seq);
  check_invariants(s, kPol);
}

TEST_CASE("delivered waits for the ack and channel-down costs nothing") {
  auto s = make_device("d1", "p1");
  std::vector<Effect> fx;
  s = run(s, {hr(72, 0)}, 0, &fx);
  const Seq seq = std::get<effect::EnqueuedSample>(fx[0]).seq;
  auto d = on_send_result(s, seq, DeliveryStatus::Delivered, 10, kPol);
  CHECK(d.outbox.size() == 1);
  CHECK(on_ack(d, {seq}).outbox.empty());

  auto down = on_send_result(s, seq, DeliveryStatus::ChannelDown, 10, kPol);
  CHECK(down.outbox.at(seq).attempts == 0);
  CHECK_FALSE(down.outbox.at(seq).in_flight);
  CHECK_FALSE(down.wifi_believed_up);
}

TEST_CASE("dead-lettered alert records go out by SMS") {
  DevicePolicy pol = kPol;
  pol.max_retries = 0;
  auto s = make_device("d1", "p1");
  std::vector<Effect> fx;
  s = run(s, {hr(45, 0)}, 0, &fx, pol);
  const auto* ra = first_of<effect::RaisedAlert>(fx);
  REQUIRE(ra != nullptr);
  s = on_send_result(s, ra->alert_seq, DeliveryStatus::Lost, 100, pol);
  CHECK(s.sms_queue.count(ra->alert_seq) == 1);
}

TEST_CASE("tick is deterministic and seqs strictly increase") {
  std::mt19937_64 rng(8);
  auto a = make_device("d1", "p1");
  auto b = make_device("d1", "p1");
  Seq last = 0;
  for (int i = 0; i < 500; ++i) {
    const TimeMs t = i * 500;
    std::vector<Reading> rs{hr(40 + static_cast<double>(rng() % 100), t)};
    if (rng() % 10 == 0) rs.push_back({SensorKind::BodyMotion, DigitalEdge{}, t});
    auto ra = tick(a, {rs, {}}, t, kTh, kPol);
    auto rb = tick(b, {rs, {}}, t, kTh, kPol);
    CHECK(ra.effects == rb.effects);
    for (const auto& e : ra.effects) {
      if (const auto* es = std::get_if<effect::EnqueuedSample>(&e)) {
        CHECK(es->seq > last);
        last = es->seq;
      }
    }
    a = std::move(ra.state);
    b = std::move(rb.state);
    if (i % 3 == 0) {
      std::vector<Seq> acked;
      for (const auto& [seq, r] : a.outbox) acked.push_back(seq);
      a = on_ack(a, acked);
      b = on_ack(b, acked);
    }
    check_invariants(a, kPol);
  }
  CHECK(a.outbox == b.outbox);
  CHECK(a.lcd == b.lcd);
}

TEST_CASE("pulses stand in for a missing HR reading") {
  auto s = make_device("d1", "p1");
  TickInputs in;
  in.pulses = {0, 1000, 2000, 3000};
  auto r = tick(s, in, 3000, kTh, kPol);
  REQUIRE(r.state.last(SensorKind::HeartRate).has_value());
  CHECK(std::get<Bpm>(r.state.last(SensorKind::HeartRate)->value).value == doctest::Approx(60.0));
}

TEST_CASE("wire lines for outbox records") {
  auto s = on_link_change(make_device("d1", "p1"), false);
  std::vector<Effect> fx;
  s = run(s, {hr(45, 0)}, 0, &fx);
  const auto* ra = first_of<effect::RaisedAlert>(fx);
  REQUIRE(ra != nullptr);
  const Seq sample = std::get<effect::EnqueuedSample>(fx[0]).seq;
  CHECK(wire_line(s, s.outbox.at(sample)) == "V1|d1|" + std::to_string(sample) + "|0|HR|45");
  CHECK(wire_line(s, s.outbox.at(ra->alert_seq)) ==
        "A1|d1|" + std::to_string(ra->alert_seq) + "|0|LOW_HR|CRIT");
}
