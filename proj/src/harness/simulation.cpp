#include "wardsim/harness/simulation.hpp"

#include <fstream>
#include <istream>
#include <queue>
#include <unordered_map>

#include "wardsim/core/errors.hpp"
#include "wardsim/core/text.hpp"
#include "wardsim/sensors/sensor_sim.hpp"

namespace wardsim {

namespace {

enum class EventKind : std::uint8_t {
  Tick,
  Arrival,
  SendFailed,
  DispatchDone,
  SmsDone,
  LinkChange,
  Escalate,
  NurseAck,
  CloudArrival,
};

struct Event {
  TimeMs t = 0;
  std::uint64_t order = 0;
  EventKind kind = EventKind::Tick;
  std::size_t device = 0;
  Seq seq = 0;
  std::string text;  // wire line or alert id
  ChannelKind channel = ChannelKind::Internet;
  DeliveryStatus status = DeliveryStatus::Delivered;
  TimeMs latency_ms = 0;
  std::optional<TimeMs> sample_t_ms;  // Arrival of a sample record
};

Event make_event(TimeMs t, EventKind kind, std::size_t device = 0, Seq seq = 0) {
  Event e;
  e.t = t;
  e.kind = kind;
  e.device = device;
  e.seq = seq;
  return e;
}

struct Later {
  bool operator()(const Event& a, const Event& b) const {
    if (a.t != b.t) return a.t > b.t;
    return a.order > b.order;
  }
};

struct DeviceSlot {
  PatientConfig patient;
  DeviceState state;
  std::vector<StreamCursor> cursors;
  Rng wifi_rng{0};
  Rng sms_rng{0};
  std::uint64_t max_backlog = 0;
};

// Buffered trace sink; writes through to a file and/or keeps the text.
class TraceSink {
 public:
  explicit TraceSink(bool keep) : keep_(keep) {}
  void open(const std::filesystem::path& path) {
    file_.open(path, std::ios::binary | std::ios::trunc);
    if (!file_) throw std::runtime_error("cannot write " + path.string());
  }
  bool active() const { return keep_ || file_.is_open(); }
  void line(TimeMs t, std::string_view rest) {
    if (!active()) return;
    buf_ += std::to_string(t);
    buf_ += ' ';
    buf_ += rest;
    buf_ += '\n';
    if (buf_.size() > (1u << 20)) flush();
  }
  void raw(std::string_view text) {
    if (!active()) return;
    buf_ += text;
  }
  void flush() {
    if (file_.is_open()) file_.write(buf_.data(), static_cast<std::streamsize>(buf_.size()));
    if (keep_) kept_ += buf_;
    buf_.clear();
  }
  void close() {
    flush();
    if (file_.is_open()) file_.close();
  }
  const std::string& kept() const { return kept_; }

 private:
  bool keep_;
  std::ofstream file_;
  std::string buf_;
  std::string kept_;
};

std::string channel_name(ChannelKind k) {
  switch (k) {
    case ChannelKind::Internet: return "INTERNET";
    case ChannelKind::GsmSms: return "GSM";
    case ChannelKind::LocalLed: return "LED";
    case ChannelKind::WifiLink: return "WIFI";
  }
  return "?";
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

ServerConfig server_config(const ScenarioConfig& cfg, const SimulationOptions& opts) {
  ServerConfig sc;
  sc.alert_policy = cfg.alert_policy;
  if (opts.out_dir) sc.log_path = *opts.out_dir / "events.log";
  return sc;
}

}  // namespace

struct Simulation::Impl {
  ScenarioConfig cfg;
  SimulationOptions opts;
  std::unique_ptr<Server> server;
  std::unique_ptr<Server> cloud;
  std::vector<DeviceSlot> slots;
  std::vector<DeviceState> device_view;
  std::vector<AlertTrack> tracks;
  std::unordered_map<std::string, std::size_t> track_by_id;
  std::priority_queue<Event, std::vector<Event>, Later> queue;
  std::uint64_t next_order = 0;
  std::uint64_t transient = 0;  // scheduled one-shot events not yet run
  TraceSink trace;
  Rng internet_rng;
  Rng gsm_rng;
  Rng cloud_rng;
  std::vector<std::string> cloud_queue;
  Session nurse{"sim-nurse", Role::Nurse, "", 0};

  std::uint64_t wifi_delivered = 0;
  std::uint64_t wifi_lost = 0;
  std::uint64_t wifi_down = 0;
  std::uint64_t ack_failures = 0;
  std::vector<double> e2e_latencies;
  bool ran = false;
  bool drained = false;
  TimeMs now = 0;

  Impl(ScenarioConfig c, SimulationOptions o)
      : cfg(std::move(c)),
        opts(std::move(o)),
        trace(opts.keep_trace),
        internet_rng(derive_seed(cfg.seed, 0x1E7)),
        gsm_rng(derive_seed(cfg.seed, 0x65A)),
        cloud_rng(derive_seed(cfg.seed, 0xC10D)) {}

  void setup() {
    cfg.validate();
    if (opts.out_dir) {
      std::filesystem::create_directories(*opts.out_dir);
      std::filesystem::remove(*opts.out_dir / "events.log");
      trace.open(*opts.out_dir / "trace.txt");
    }
    server = std::make_unique<Server>(server_config(cfg, opts));
    if (cfg.cloud_sync) {
      ServerConfig cc;
      cc.alert_policy = cfg.alert_policy;
      cloud = std::make_unique<Server>(cc);
    }
    trace.raw("# wardsim trace v1\n");
    for (std::size_t i = 0; i < cfg.patients.size(); ++i) {
      const auto& p = cfg.patients[i];
      PatientRecord rec{p.patient_id, p.display_name, p.device_id, p.thresholds};
      server->register_patient(rec, 0);
      if (cloud) cloud->register_patient(rec, 0);
      trace.raw("#register " + p.patient_id + " " + p.device_id + " " + p.display_name + "\n");

      DeviceSlot slot;
      slot.patient = p;
      slot.state = make_device(p.device_id, p.patient_id);
      slot.wifi_rng = Rng(derive_seed(cfg.seed, 0x3141, i));
      slot.sms_rng = Rng(derive_seed(cfg.seed, 0x1618, i));
      const std::uint64_t stream_seed = derive_seed(cfg.seed, 0xBED, i);
      for (SensorKind k : kAllSensorKinds) {
        std::vector<AnomalySpec> specs;
        for (const auto& a : cfg.anomalies) {
          if (a.patient != i || a.spec.kind != k) continue;
          for (auto& s : a.occurrences()) specs.push_back(s);
        }
        slot.cursors.emplace_back(p.profile, k, cfg.sample_period_ms, cfg.duration_ms,
                                  stream_seed, std::move(specs));
      }
      slots.push_back(std::move(slot));
      schedule(make_event(0, EventKind::Tick, i));
    }
    for (const ChannelModel* c : {&cfg.wifi, &cfg.internet, &cfg.gsm}) {
      for (const auto& o : c->outages) {
        Event down = make_event(o.from_ms, EventKind::LinkChange);
        down.channel = c->kind;
        down.status = DeliveryStatus::ChannelDown;
        schedule(down);
        Event up = make_event(o.to_ms, EventKind::LinkChange);
        up.channel = c->kind;
        up.status = DeliveryStatus::Delivered;
        schedule(up);
      }
    }
    schedule(make_event(cfg.escalation_retry_ms, EventKind::Escalate));
  }

  void schedule(Event e) {
    e.order = next_order++;
    if (e.kind != EventKind::Tick && e.kind != EventKind::Escalate &&
        e.kind != EventKind::LinkChange) {
      ++transient;
    }
    queue.push(std::move(e));
  }

  ChannelStates remote_states(TimeMs t) const {
    return ChannelStates{is_up(cfg.internet, t), is_up(cfg.gsm, t)};
  }

  TimeMs failure_timeout(const ChannelModel& m) const {
    return m.latency_mean_ms + m.latency_jitter_ms + cfg.ack_timeout_ms;
  }

  AlertTrack* track(const std::string& alert_id) {
    auto it = track_by_id.find(alert_id);
    return it == track_by_id.end() ? nullptr : &tracks[it->second];
  }

  void note_remote(const std::string& alert_id, ChannelKind channel, TimeMs t) {
    AlertTrack* tr = track(alert_id);
    if (!tr) return;
    if (!tr->first_remote_at_ms) tr->first_remote_at_ms = t;
    if (channel == ChannelKind::GsmSms && !tr->first_sms_at_ms) tr->first_sms_at_ms = t;
  }

  // ---- event handlers ----

  void on_tick(const Event& e) {
    DeviceSlot& slot = slots[e.device];
    TickInputs in;
    for (auto& cursor : slot.cursors) {
      const VitalSample* head = cursor.peek();
      if (head && head->t_ms <= now) {
        in.readings.push_back(Reading{head->kind, head->value, head->t_ms});
        cursor.next();
      }
    }
    auto result = wardsim::tick(std::move(slot.state), in, now, slot.patient.thresholds, cfg.device);
    slot.state = std::move(result.state);
    for (const auto& fx : result.effects) {
      if (const auto* raised = std::get_if<effect::RaisedAlert>(&fx)) {
        AlertTrack tr;
        tr.alert_id = make_alert_id(slot.state.device_id, raised->alert_seq);
        tr.device = e.device;
        tr.cause = raised->cause;
        tr.raised_at_ms = now;
        tr.trigger_t_ms = raised->trigger_t_ms;
        if (slot.state.led.lit()) tr.led_lit_at_ms = now;
        track_by_id.emplace(tr.alert_id, tracks.size());
        tracks.push_back(std::move(tr));
        trace.line(now, "ALERT " + slot.state.device_id + " " + std::to_string(raised->alert_seq) +
                            " " + std::string(wire_code(raised->cause)));
      } else if (const auto* batch = std::get_if<effect::TransmitBatch>(&fx)) {
        for (Seq seq : batch->seqs) transmit(e.device, seq);
      } else if (const auto* sms = std::get_if<effect::SmsRequested>(&fx)) {
        device_sms(e.device, *sms);
      }
    }
    slot.max_backlog = std::max<std::uint64_t>(slot.max_backlog, slot.state.outbox.size());
    schedule(make_event(now + cfg.tick_period_ms, EventKind::Tick, e.device));
  }

  void transmit(std::size_t device, Seq seq) {
    DeviceSlot& slot = slots[device];
    auto it = slot.state.outbox.find(seq);
    if (it == slot.state.outbox.end()) return;
    const OutboundRecord& rec = it->second;
    const DeliveryResult r = channel_send(cfg.wifi, now, slot.wifi_rng);
    const std::string where = slot.state.device_id + " " + std::to_string(seq);
    switch (r.status) {
      case DeliveryStatus::Delivered: {
        ++wifi_delivered;
        Event arrival = make_event(now + r.latency_ms, EventKind::Arrival, device, seq);
        arrival.text = wire_line(slot.state, rec);
        if (const auto* s = std::get_if<VitalSample>(&rec.payload)) arrival.sample_t_ms = s->t_ms;
        schedule(std::move(arrival));
        break;
      }
      case DeliveryStatus::Lost:
        ++wifi_lost;
        trace.line(now, "LOST " + where);
        schedule(make_event(now + cfg.ack_timeout_ms, EventKind::SendFailed, device, seq));
        break;
      case DeliveryStatus::ChannelDown:
        ++wifi_down;
        trace.line(now, "DOWN " + where);
        slot.state = on_send_result(std::move(slot.state), seq, DeliveryStatus::ChannelDown, now,
                                    cfg.device);
        break;
    }
  }

  void device_sms(std::size_t device, const effect::SmsRequested& req) {
    DeviceSlot& slot = slots[device];
    AlertEvent alert;
    alert.alert_id = make_alert_id(slot.state.device_id, req.alert_seq);
    alert.device_id = slot.state.device_id;
    alert.patient_id = slot.state.patient_id;
    alert.cause = req.cause;
    alert.severity = severity_of(req.cause);
    alert.raised_at_ms = now;
    const DeliveryResult r = sms_send(cfg.gsm, alert, now, slot.sms_rng);
    TimeMs at = now;
    if (r.status == DeliveryStatus::Delivered) at = now + r.latency_ms;
    if (r.status == DeliveryStatus::Lost) at = now + failure_timeout(cfg.gsm);
    Event done = make_event(at, EventKind::SmsDone, device, req.alert_seq);
    done.status = r.status;
    schedule(std::move(done));
  }

  void on_arrival(const Event& e) {
    DeviceSlot& slot = slots[e.device];
    trace.line(now, "RX " + e.text);
    const IngestResult res = server->ingest(e.text, now);
    if (!res.accepted) return;
    slot.state = on_ack(std::move(slot.state), {e.seq});
    if (res.duplicate) return;
    if (e.sample_t_ms) e2e_latencies.push_back(static_cast<double>(now - *e.sample_t_ms));
    if (cloud) cloud_queue.push_back(e.text);
    if (res.new_alert_id) {
      dispatch(*res.new_alert_id);
      if (cfg.nurse_ack_delay_ms) {
        Event ack = make_event(now + *cfg.nurse_ack_delay_ms, EventKind::NurseAck);
        ack.text = *res.new_alert_id;
        schedule(std::move(ack));
      }
    }
  }

  void on_send_failed(const Event& e) {
    DeviceSlot& slot = slots[e.device];
    const auto dead_before = slot.state.dead_letter.size();
    slot.state = on_send_result(std::move(slot.state), e.seq, DeliveryStatus::Lost, now, cfg.device);
    if (slot.state.dead_letter.size() > dead_before) {
      trace.line(now, "DLQ " + slot.state.device_id + " " + std::to_string(e.seq));
    }
  }

  void execute(const DispatchPlan& plan) {
    const auto alert = server->alert(plan.alert_id);
    if (!alert) return;
    for (const auto& step : plan.steps) {
      if (step.channel == ChannelKind::LocalLed) continue;
      DeliveryResult r;
      TimeMs at = now;
      if (step.channel == ChannelKind::Internet) {
        r = channel_send(cfg.internet, now, internet_rng);
        if (r.status == DeliveryStatus::Lost) at = now + failure_timeout(cfg.internet);
      } else {
        r = sms_send(cfg.gsm, *alert, now, gsm_rng);
        if (r.status == DeliveryStatus::Lost) at = now + failure_timeout(cfg.gsm);
      }
      if (r.status == DeliveryStatus::Delivered) at = now + r.latency_ms;
      Event done = make_event(at, EventKind::DispatchDone);
      done.text = plan.alert_id;
      done.channel = step.channel;
      done.status = r.status;
      done.latency_ms = r.latency_ms;
      schedule(std::move(done));
    }
  }

  void dispatch(const std::string& alert_id) {
    execute(server->dispatch_alert(alert_id, remote_states(now), now));
  }

  void escalate() {
    for (const auto& plan : server->escalate_pending(remote_states(now), now)) execute(plan);
  }

  void on_dispatch_done(const Event& e) {
    server->record_dispatch_result(e.text, e.channel, DeliveryResult{e.status, e.latency_ms}, now);
    trace.line(now, "DISPATCH " + e.text + " " + channel_name(e.channel) + " " +
                        std::string(to_string(e.status)));
    if (e.status == DeliveryStatus::Delivered) note_remote(e.text, e.channel, now);
  }

  void on_sms_done(const Event& e) {
    DeviceSlot& slot = slots[e.device];
    slot.state = on_sms_result(std::move(slot.state), e.seq, e.status, now, cfg.device);
    trace.line(now, "SMS " + slot.state.device_id + " " + std::to_string(e.seq) + " " +
                        std::string(to_string(e.status)));
    if (e.status == DeliveryStatus::Delivered) {
      note_remote(make_alert_id(slot.state.device_id, e.seq), ChannelKind::GsmSms, now);
    }
  }

  void on_link_change(const Event& e) {
    const bool up = e.status == DeliveryStatus::Delivered;
    trace.line(now, "LINK " + channel_name(e.channel) + (up ? " UP" : " DOWN"));
    if (e.channel == ChannelKind::WifiLink) {
      for (auto& slot : slots) slot.state = wardsim::on_link_change(std::move(slot.state), up);
    } else if (up) {
      escalate();
    }
  }

  void on_nurse_ack(const Event& e) {
    try {
      const AlertEvent a = server->acknowledge_alert(e.text, nurse, now);
      if (a.ack && a.ack->ack_at_ms == now) trace.line(now, "ACK " + e.text + " " + nurse.user_id);
    } catch (const Error&) {
      ++ack_failures;
    }
  }

  void flush_cloud() {
    std::vector<std::string> keep;
    for (auto& line : cloud_queue) {
      const DeliveryResult r = channel_send(cfg.internet, now, cloud_rng);
      if (r.delivered()) {
        Event arrival = make_event(now + r.latency_ms, EventKind::CloudArrival);
        arrival.text = std::move(line);
        schedule(std::move(arrival));
      } else {
        keep.push_back(std::move(line));
      }
    }
    cloud_queue = std::move(keep);
  }

  bool quiescent() {
    if (transient != 0 || !cloud_queue.empty()) return false;
    for (const auto& slot : slots) {
      if (!slot.state.outbox.empty() || !slot.state.sms_queue.empty()) return false;
    }
    for (auto& slot : slots) {
      for (auto& cursor : slot.cursors) {
        if (cursor.peek()) return false;
      }
    }
    return server->stats().pending_alerts == 0;
  }

  MetricsReport run() {
    if (ran) throw std::logic_error("Simulation::run() may only be called once");
    ran = true;
    setup();
    const TimeMs cap = cfg.duration_ms + cfg.drain_ms;
    while (!queue.empty()) {
      Event e = queue.top();
      if (e.t >= cap) break;  // the run window is half-open, like outages
      queue.pop();
      now = e.t;
      if (e.kind != EventKind::Tick && e.kind != EventKind::Escalate &&
          e.kind != EventKind::LinkChange) {
        --transient;
      }
      switch (e.kind) {
        case EventKind::Tick: on_tick(e); break;
        case EventKind::Arrival: on_arrival(e); break;
        case EventKind::SendFailed: on_send_failed(e); break;
        case EventKind::DispatchDone: on_dispatch_done(e); break;
        case EventKind::SmsDone: on_sms_done(e); break;
        case EventKind::LinkChange: on_link_change(e); break;
        case EventKind::Escalate:
          escalate();
          if (cloud) flush_cloud();
          schedule(make_event(now + cfg.escalation_retry_ms, EventKind::Escalate));
          break;
        case EventKind::NurseAck: on_nurse_ack(e); break;
        case EventKind::CloudArrival: cloud->ingest(e.text, now); break;
      }
      if (now >= cfg.duration_ms && quiescent()) {
        drained = true;
        break;
      }
    }
    trace.close();

    MetricsReport r = collect();
    if (opts.out_dir) {
      write_file(*opts.out_dir / "report.txt", render_text(r));
      write_file(*opts.out_dir / "report.csv", render_csv(r));
    }
    device_view.clear();
    for (const auto& slot : slots) device_view.push_back(slot.state);
    return r;
  }

  MetricsReport collect() {
    MetricsReport r;
    r.seed = cfg.seed;
    r.simulated_ms = now;
    std::uint64_t in_flight = 0;
    for (const auto& slot : slots) {
      check_invariants(slot.state, cfg.device);
      r.samples_emitted += slot.state.samples_enqueued;
      r.dropped_readings += slot.state.dropped_readings;
      for (const auto& d : slot.state.dead_letter) {
        if (!d.is_alert()) ++r.samples_dead_lettered;
      }
      for (const auto& [seq, rec] : slot.state.outbox) {
        if (!rec.is_alert()) ++in_flight;
      }
      r.max_outbox_backlog = std::max(r.max_outbox_backlog, slot.max_backlog);
    }
    r.samples_in_flight = in_flight;

    const ServerStats st = server->stats();
    r.samples_stored = st.samples_stored;
    r.seq_gaps = st.seq_gaps;
    r.duplicates = st.duplicates;
    r.rejected = st.rejected;
    if (r.samples_emitted != r.samples_stored + r.samples_dead_lettered + r.samples_in_flight) {
      throw InvariantViolation(
          "conservation violated: emitted " + std::to_string(r.samples_emitted) + " != stored " +
          std::to_string(r.samples_stored) + " + dead-lettered " +
          std::to_string(r.samples_dead_lettered) + " + in flight " + std::to_string(in_flight));
    }

    r.wifi_sent = wifi_delivered + wifi_lost;
    r.wifi_delivered = wifi_delivered;
    r.wifi_lost = wifi_lost;
    r.wifi_down = wifi_down;
    if (r.wifi_sent > 0) {
      r.raw_delivery_rate = static_cast<double>(wifi_delivered) / static_cast<double>(r.wifi_sent);
    }
    const auto settled = r.samples_stored + r.samples_dead_lettered;
    if (settled > 0) {
      r.eventual_delivery_rate = static_cast<double>(r.samples_stored) / static_cast<double>(settled);
    }

    r.alerts_raised = tracks.size();
    for (const auto& a : server->alerts()) {
      ++r.alerts_stored;
      if (a.ack) ++r.alerts_acknowledged;
      if (server->alert_status(a.alert_id) == AlertStatus::Pending) ++r.alerts_pending;
    }
    std::vector<double> led;
    std::vector<double> sms;
    for (const auto& t : tracks) {
      if (t.first_remote_at_ms) ++r.alerts_delivered;
      if (t.led_lit_at_ms) led.push_back(static_cast<double>(*t.led_lit_at_ms - t.trigger_t_ms));
      if (t.first_sms_at_ms) sms.push_back(static_cast<double>(*t.first_sms_at_ms - t.raised_at_ms));
    }
    if (!led.empty()) r.led_latency_max_ms = *std::max_element(led.begin(), led.end());
    r.sms_latency_mean_ms = mean_of(sms);
    r.sms_latency_p95_ms = percentile_of(sms, 95);
    r.e2e_latency_mean_ms = mean_of(e2e_latencies);
    r.e2e_latency_p95_ms = percentile_of(e2e_latencies, 95);
    if (cloud) r.cloud_samples_stored = cloud->stats().samples_stored;
    return r;
  }
};

Simulation::Simulation(ScenarioConfig config, SimulationOptions options)
    : impl_(std::make_unique<Impl>(std::move(config), std::move(options))) {}

Simulation::~Simulation() = default;

MetricsReport Simulation::run() { return impl_->run(); }

Server& Simulation::server() {
  if (!impl_->server) throw std::logic_error("simulation has not been run");
  return *impl_->server;
}

const Server* Simulation::cloud() const { return impl_->cloud.get(); }
const std::vector<DeviceState>& Simulation::devices() const { return impl_->device_view; }
const std::vector<AlertTrack>& Simulation::alerts() const { return impl_->tracks; }
const std::string& Simulation::trace() const { return impl_->trace.kept(); }
const ScenarioConfig& Simulation::config() const { return impl_->cfg; }
bool Simulation::drained() const { return impl_->drained; }
std::uint64_t Simulation::ack_failures() const { return impl_->ack_failures; }

MetricsReport run_scenario(const ScenarioConfig& config, const SimulationOptions& options) {
  Simulation sim(config, options);
  return sim.run();
}

ReplayResult replay_trace(std::istream& trace, Server& server) {
  ReplayResult out;
  std::string line;
  while (std::getline(trace, line)) {
    if (line.rfind("#register ", 0) == 0) {
      const auto parts = text::split(std::string_view(line).substr(10), ' ');
      if (parts.size() < 3) continue;
      const std::string patient(parts[0]);
      const std::string device(parts[1]);
      const auto name_at = 10 + parts[0].size() + parts[1].size() + 2;
      if (server.patient(patient)) continue;
      server.register_patient(PatientRecord{patient, line.substr(name_at), device, Thresholds{}}, 0);
      ++out.registrations;
      continue;
    }
    const auto sp1 = line.find(' ');
    if (sp1 == std::string::npos || line.compare(sp1 + 1, 3, "RX ") != 0) continue;
    const auto t = text::parse_int<TimeMs>(std::string_view(line).substr(0, sp1));
    if (!t) continue;
    ++out.records;
    const IngestResult r = server.ingest(std::string_view(line).substr(sp1 + 4), *t);
    if (!r.accepted) {
      ++out.rejected;
    } else if (r.duplicate) {
      ++out.duplicates;
    } else {
      ++out.ingested;
    }
  }
  return out;
}

}  // namespace wardsim
