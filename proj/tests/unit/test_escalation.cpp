#include <doctest.h>

#include <vector>

#include "wardsim/core/errors.hpp"
#include "wardsim/server/escalation.hpp"

using namespace wardsim;

namespace {

using Steps = std::vector<PlannedDispatch>;

AlertEvent alert(const std::string& id = "d1:5") {
  AlertEvent a;
  a.alert_id = id;
  a.device_id = "d1";
  a.patient_id = "p1";
  a.raised_at_ms = 1000;
  return a;
}

// Resolves every in-flight remote dispatch as if the channel's state at send
// time decided the outcome.
void settle(AlertBook& book, const std::string& id, ChannelStates st, TimeMs now) {
  const auto* a = book.find(id);
  std::vector<ChannelKind> open;
  for (const auto& d : a->dispatches) {
    if (d.outcome == DispatchOutcome::InFlight) open.push_back(d.channel);
  }
  for (auto ch : open) {
    const bool up = ch == ChannelKind::Internet ? st.internet_up : st.gsm_up;
    book.record_result(id, ch, up ? DeliveryResult::delivered_after(10) : DeliveryResult::lost(),
                       now);
  }
}

}  // namespace

TEST_CASE("plan examples") {
  auto a = alert();
  CHECK(plan_dispatch(a, {true, true}, AlertPolicy::Both).steps ==
        Steps{{ChannelKind::LocalLed, DispatchReason::Always},
              {ChannelKind::Internet, DispatchReason::Primary},
              {ChannelKind::GsmSms, DispatchReason::Always}});
  CHECK(plan_dispatch(a, {false, true}, AlertPolicy::FallbackOnly).steps ==
        Steps{{ChannelKind::LocalLed, DispatchReason::Always},
              {ChannelKind::GsmSms, DispatchReason::Fallback}});
  CHECK(plan_dispatch(a, {true, true}, AlertPolicy::FallbackOnly).steps ==
        Steps{{ChannelKind::LocalLed, DispatchReason::Always},
              {ChannelKind::Internet, DispatchReason::Primary}});
  for (auto pol : {AlertPolicy::Both, AlertPolicy::FallbackOnly}) {
    auto p = plan_dispatch(a, {false, false}, pol);
    CHECK(p.steps == Steps{{ChannelKind::LocalLed, DispatchReason::Always}});
    CHECK_FALSE(p.has_remote());
  }
}

TEST_CASE("fallback switches to GSM after an internet failure") {
  AlertBook book;
  book.raise(alert(), 1000);
  book.dispatch("d1:5", {true, true}, AlertPolicy::FallbackOnly, 1000);
  CHECK(book.status("d1:5") == AlertStatus::InFlight);
  book.record_result("d1:5", ChannelKind::Internet, DeliveryResult::lost(), 2000);
  CHECK(book.status("d1:5") == AlertStatus::Pending);
  auto plans = book.escalate_pending({true, true}, AlertPolicy::FallbackOnly, 2000);
  REQUIRE(plans.size() == 1);
  CHECK(plans[0].steps.back().channel == ChannelKind::GsmSms);
  book.record_result("d1:5", ChannelKind::GsmSms, DeliveryResult::delivered_after(4200), 6200);
  CHECK(book.status("d1:5") == AlertStatus::Delivered);
}

TEST_CASE("both remote channels down leaves the alert pending until recovery") {
  AlertBook book;
  book.raise(alert(), 1000);
  auto plan = book.dispatch("d1:5", {false, false}, AlertPolicy::Both, 1000);
  CHECK_FALSE(plan.has_remote());
  CHECK(book.status("d1:5") == AlertStatus::Pending);
  CHECK(book.escalate_pending({false, false}, AlertPolicy::Both, 5000).empty());
  auto plans = book.escalate_pending({true, false}, AlertPolicy::Both, 9000);
  REQUIRE(plans.size() == 1);
  CHECK(plans[0].steps == Steps{{ChannelKind::LocalLed, DispatchReason::Always},
                                {ChannelKind::Internet, DispatchReason::Primary}});
  book.record_result("d1:5", ChannelKind::Internet, DeliveryResult::delivered_after(150), 9150);
  CHECK(book.status("d1:5") == AlertStatus::Delivered);
  CHECK(book.pending_count() == 0);
  // LocalLed recorded once, at raise time.
  int leds = 0;
  for (const auto& d : book.find("d1:5")->dispatches) leds += d.channel == ChannelKind::LocalLed;
  CHECK(leds == 1);
}

TEST_CASE("a raised alert is pending before its first dispatch") {
  AlertBook book;
  book.raise(alert(), 1000);
  CHECK(book.status("d1:5") == AlertStatus::Pending);
}

TEST_CASE("raise is idempotent and ack is first-writer-wins") {
  AlertBook book;
  book.raise(alert(), 1000);
  auto again = alert();
  again.raised_at_ms = 9999;
  CHECK(book.raise(again, 2000).raised_at_ms == 1000);
  CHECK(book.size() == 1);
  book.acknowledge("d1:5", "nurse", 3000);
  auto& a = book.acknowledge("d1:5", "doctor", 4000);
  CHECK(a.ack->user_id == "nurse");
  CHECK(a.ack->ack_at_ms == 3000);
  CHECK(book.status("d1:5") == AlertStatus::Acknowledged);
  CHECK_THROWS_AS(book.acknowledge("nope", "nurse", 1), UnknownAlert);
}

TEST_CASE("never drop over every channel state and policy") {
  for (auto pol : {AlertPolicy::Both, AlertPolicy::FallbackOnly}) {
    for (bool inet : {false, true}) {
      for (bool gsm : {false, true}) {
        CAPTURE(inet);
        CAPTURE(gsm);
        CAPTURE(to_string(pol));
        AlertBook book;
        const ChannelStates st{inet, gsm};
        book.raise(alert("a"), 0);
        book.raise(alert("b"), 0);
        book.dispatch("a", st, pol, 0);
        book.dispatch("b", st, pol, 0);
        settle(book, "a", st, 100);
        settle(book, "b", st, 100);
        book.acknowledge("b", "nurse", 200);

        const auto sa = book.status("a");
        if (inet || gsm) {
          CHECK(sa == AlertStatus::Delivered);
        } else {
          CHECK(sa == AlertStatus::Pending);
        }
        CHECK(book.status("b") == AlertStatus::Acknowledged);

        // Channels come back: every unacked alert ends delivered.
        for (int round = 0; round < 3 && book.pending_count() > 0; ++round) {
          book.escalate_pending({true, true}, pol, 1000 + round);
          settle(book, "a", {true, true}, 2000 + round);
        }
        CHECK(book.status("a") == AlertStatus::Delivered);
        CHECK(book.pending_count() == 0);
      }
    }
  }
}

TEST_CASE("replayed undelivered alerts are requeued") {
  AlertBook book;
  book.raise(alert(), 0);
  book.dispatch("d1:5", {true, true}, AlertPolicy::Both, 0);
  book.requeue_undelivered();
  CHECK(book.status("d1:5") == AlertStatus::Pending);
}

TEST_CASE("updated_since orders newest first") {
  AlertBook book;
  auto a = alert("x");
  a.raised_at_ms = 100;
  auto b = alert("y");
  b.raised_at_ms = 200;
  book.raise(a, 100);
  book.raise(b, 200);
  auto all = book.updated_since(0);
  REQUIRE(all.size() == 2);
  CHECK(all[0].alert_id == "y");
  CHECK(book.updated_since(150).size() == 1);
  book.acknowledge("x", "n", 300);
  CHECK(book.updated_since(250).front().alert_id == "x");
}

TEST_CASE("policy names") {
  CHECK(alert_policy_from_string("both") == AlertPolicy::Both);
  CHECK(alert_policy_from_string("fallback_only") == AlertPolicy::FallbackOnly);
  CHECK_FALSE(alert_policy_from_string("sometimes").has_value());
}

TEST_CASE("fallback retries the internet while GSM is down") {
  AlertBook book;
  book.raise(alert(), 0);
  book.dispatch("d1:5", {true, false}, AlertPolicy::FallbackOnly, 0);
  book.record_result("d1:5", ChannelKind::Internet, DeliveryResult::lost(), 1000);
  auto plans = book.escalate_pending({true, false}, AlertPolicy::FallbackOnly, 30000);
  REQUIRE(plans.size() == 1);
  CHECK(plans[0].steps.back().channel == ChannelKind::Internet);
  book.record_result("d1:5", ChannelKind::Internet, DeliveryResult::lost(), 31000);
  plans = book.escalate_pending({true, true}, AlertPolicy::FallbackOnly, 60000);
  REQUIRE(plans.size() == 1);
  CHECK(plans[0].steps.back().channel == ChannelKind::GsmSms);
  // After a GSM failure the internet gets the next try.
  book.record_result("d1:5", ChannelKind::GsmSms, DeliveryResult::lost(), 65000);
  plans = book.escalate_pending({true, true}, AlertPolicy::FallbackOnly, 90000);
  REQUIRE(plans.size() == 1);
  CHECK(plans[0].steps.back().channel == ChannelKind::Internet);
}
