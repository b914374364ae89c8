#include "wardsim/server/server.hpp"

#include <mutex>
#include <stdexcept>

#include "wardsim/core/errors.hpp"
#include "wardsim/server/journal.hpp"
#include "wardsim/server/wire.hpp"

namespace wardsim {

std::string_view to_string(RejectReason r) {
  return r == RejectReason::MalformedRecord ? "MalformedRecord" : "UnknownDevice";
}

std::string IngestResult::ack_line() const {
  if (!accepted) return {};
  return wire::format(wire::AckRecord{device_id, seq});
}

Server::Server(ServerConfig config) : config_(std::move(config)), users_(config_.auth) {}

void Server::append_locked(LogEntry entry) {
  if (config_.log_path && !writer_.is_open()) {
    std::error_code ec;
    const auto size = std::filesystem::file_size(*config_.log_path, ec);
    if (!ec && size > 0 && log_.empty()) {
      throw std::logic_error("existing event log must be recovered before appending");
    }
    writer_ = LogWriter(*config_.log_path, ec ? 0 : size, config_.durable);
  }
  writer_.append(entry);
  log_.push_back(std::move(entry));
}

void Server::journal_locked(const std::string& payload, TimeMs now_ms) {
  append_locked(LogEntry{now_ms, payload});
}

RecoveryReport Server::recover() {
  std::unique_lock lock(mu_);
  if (!log_.empty()) throw std::logic_error("recover() requires a fresh server");
  RecoveryReport report;
  if (!config_.log_path) return report;
  std::error_code ec;
  const auto size = std::filesystem::exists(*config_.log_path, ec)
                        ? std::filesystem::file_size(*config_.log_path)
                        : 0;
  LogScan scan = event_log::read_file(*config_.log_path);
  for (const auto& e : scan.entries) {
    if (!apply_entry_locked(e)) ++report.skipped;
    log_.push_back(e);
  }
  alerts_.requeue_undelivered();
  report.entries = scan.entries.size();
  report.torn_tail = scan.torn_tail;
  report.discarded_bytes = size - scan.valid_bytes;
  if (scan.torn_tail) ++counters_.torn_tail_warnings;
  writer_ = LogWriter(*config_.log_path, scan.valid_bytes, config_.durable);
  return report;
}

RecoveryReport Server::recover_from(const std::vector<LogEntry>& entries) {
  std::unique_lock lock(mu_);
  if (!log_.empty()) throw std::logic_error("recover_from() requires a fresh server");
  RecoveryReport report;
  for (const auto& e : entries) {
    if (!apply_entry_locked(e)) ++report.skipped;
    log_.push_back(e);
  }
  alerts_.requeue_undelivered();
  report.entries = entries.size();
  return report;
}

bool Server::apply_entry_locked(const LogEntry& entry) {
  std::string_view line = entry.payload;
  if (line.size() >= 2 && (line.substr(0, 3) == "V1|" || line.substr(0, 3) == "A1|")) {
    return apply_wire_locked(line, entry.recv_at_ms, true).accepted;
  }
  auto rec = journal::parse(line);
  if (!rec) return false;
  try {
    std::visit(
        [&](const auto& r) {
          using T = std::decay_t<decltype(r)>;
          if constexpr (std::is_same_v<T, journal::PatientRegistered>) {
            PatientRecord p;
            if (const auto* existing = patients_.find(r.patient_id)) p = *existing;
            p.patient_id = r.patient_id;
            p.assigned_device_id = r.device_id;
            p.display_name = r.display_name;
            patients_.upsert(std::move(p));
          } else if constexpr (std::is_same_v<T, journal::ThresholdsSet>) {
            patients_.set_thresholds(r.patient_id, r.thresholds);
          } else if constexpr (std::is_same_v<T, journal::UserCreated>) {
            users_.restore_user(r.account);
          } else if constexpr (std::is_same_v<T, journal::AlertAcked>) {
            alerts_.acknowledge(r.alert_id, r.user_id, r.ack_at_ms);
          } else {
            alerts_.restore_dispatch(r.alert_id, r.dispatch);
          }
        },
        *rec);
  } catch (const Error&) {
    return false;
  } catch (const std::invalid_argument&) {
    return false;
  }
  return true;
}

IngestResult Server::apply_wire_locked(std::string_view line, TimeMs now_ms, bool replaying) {
  IngestResult result;
  auto rec = wire::parse(line);
  const bool ingestible = rec && !std::holds_alternative<wire::AckRecord>(*rec);
  if (!ingestible) {
    result.reason = RejectReason::MalformedRecord;
    if (!replaying) ++counters_.rejected;
    return result;
  }

  std::string device_id;
  Seq seq = 0;
  if (const auto* s = std::get_if<wire::SampleRecord>(&*rec)) {
    if (!measurement_valid(s->kind, s->value)) {
      result.reason = RejectReason::MalformedRecord;
      if (!replaying) ++counters_.rejected;
      return result;
    }
    device_id = s->device_id;
    seq = s->seq;
  } else {
    const auto& a = std::get<wire::AlertRecord>(*rec);
    device_id = a.device_id;
    seq = a.seq;
  }
  result.device_id = device_id;
  result.seq = seq;

  const auto patient_id = patients_.patient_for_device(device_id);
  if (!patient_id) {
    result.reason = RejectReason::UnknownDevice;
    if (!replaying) ++counters_.rejected;
    return result;
  }

  result.accepted = true;
  if (store_.seen(device_id, seq)) {
    result.duplicate = true;
    if (!replaying) ++counters_.duplicates;
    return result;
  }

  // Write-ahead: the entry is durable before indices change.
  if (!replaying) {
    std::string_view verbatim = line;
    while (!verbatim.empty() && (verbatim.back() == '\n' || verbatim.back() == '\r')) {
      verbatim.remove_suffix(1);
    }
    append_locked(LogEntry{now_ms, std::string(verbatim)});
  }
  store_.mark(device_id, seq);

  if (auto* s = std::get_if<wire::SampleRecord>(&*rec)) {
    store_.add_sample(wire::to_sample(*s, *patient_id));
  } else {
    const auto& a = std::get<wire::AlertRecord>(*rec);
    AlertEvent ev;
    ev.alert_id = make_alert_id(a.device_id, a.seq);
    ev.device_id = a.device_id;
    ev.patient_id = *patient_id;
    ev.cause = a.cause;
    ev.severity = a.severity;
    ev.raised_at_ms = a.t_ms;
    ev.sample_seq = store_.latest_sample_before(a.device_id, sensor_of(a.cause), a.seq);
    result.new_alert_id = alerts_.raise(std::move(ev), now_ms).alert_id;
  }
  return result;
}

void Server::register_patient(PatientRecord record, TimeMs now_ms) {
  std::unique_lock lock(mu_);
  if (!wire::valid_identifier(record.patient_id) ||
      !wire::valid_identifier(record.assigned_device_id)) {
    throw std::invalid_argument("patient and device ids must be plain identifiers");
  }
  if (record.display_name.empty()) record.display_name = record.patient_id;
  if (!journal::valid_display_name(record.display_name)) {
    throw std::invalid_argument("invalid display name");
  }
  patients_.upsert(record);
  journal_locked(journal::format(journal::PatientRegistered{
                     record.patient_id, record.assigned_device_id, record.display_name}),
                 now_ms);
  journal_locked(journal::format(journal::ThresholdsSet{record.patient_id, record.thresholds}),
                 now_ms);
}

void Server::register_patient(const Session& s, PatientRecord record, TimeMs now_ms) {
  require(s, Action::ManagePatients);
  register_patient(std::move(record), now_ms);
}

void Server::set_thresholds(const Session& s, const std::string& patient_id,
                            const Thresholds& th, TimeMs now_ms) {
  require(s, Action::EditThresholds);
  std::unique_lock lock(mu_);
  patients_.set_thresholds(patient_id, th);
  journal_locked(journal::format(journal::ThresholdsSet{patient_id, th}), now_ms);
}

UserAccount Server::create_user(std::string username, std::string_view secret, Role role,
                                TimeMs now_ms) {
  std::unique_lock lock(mu_);
  UserAccount account = users_.create_user(std::move(username), secret, role);
  journal_locked(journal::format(journal::UserCreated{account}), now_ms);
  return account;
}

UserAccount Server::create_user(const Session& s, std::string username, std::string_view secret,
                                Role role, TimeMs now_ms) {
  require(s, Action::ManageUsers);
  return create_user(std::move(username), secret, role, now_ms);
}

AuthResult Server::authenticate(std::string_view username, std::string_view secret,
                                TimeMs now_ms) {
  std::unique_lock lock(mu_);
  return users_.authenticate(username, secret, now_ms);
}

Session Server::session(std::string_view token, TimeMs now_ms) const {
  std::shared_lock lock(mu_);
  auto s = users_.session(token, now_ms);
  if (!s) throw Unauthenticated();
  return *s;
}

void Server::require(const Session& s, Action action) {
  if (!authorize(s.role, action)) throw Forbidden();
}

IngestResult Server::ingest(std::string_view wire_line, TimeMs now_ms) {
  std::unique_lock lock(mu_);
  return apply_wire_locked(wire_line, now_ms, false);
}

std::vector<VitalSample> Server::query_vitals(const std::string& patient_id, TimeMs from_ms,
                                              TimeMs to_ms,
                                              const std::vector<SensorKind>& kinds) const {
  std::shared_lock lock(mu_);
  if (!patients_.find(patient_id)) throw UnknownPatient(patient_id);
  return store_.query(patient_id, from_ms, to_ms, kinds);
}

AlertEvent Server::acknowledge_alert(const std::string& alert_id, const Session& s,
                                     TimeMs now_ms) {
  require(s, Action::AcknowledgeAlert);
  std::unique_lock lock(mu_);
  const AlertEvent* existing = alerts_.find(alert_id);
  if (!existing) throw UnknownAlert(alert_id);
  if (existing->ack) return *existing;
  journal_locked(journal::format(journal::AlertAcked{alert_id, s.user_id, now_ms}), now_ms);
  return alerts_.acknowledge(alert_id, s.user_id, now_ms);
}

DispatchPlan Server::dispatch_alert(const std::string& alert_id, ChannelStates states,
                                    TimeMs now_ms) {
  std::unique_lock lock(mu_);
  const bool first = alerts_.find(alert_id) && alerts_.find(alert_id)->dispatches.empty();
  DispatchPlan plan = alerts_.dispatch(alert_id, states, config_.alert_policy, now_ms);
  if (first) {
    const auto& d = alerts_.find(alert_id)->dispatches;
    for (const auto& dispatch : d) {
      if (dispatch.channel == ChannelKind::LocalLed) {
        journal_locked(journal::format(journal::DispatchResolved{alert_id, dispatch}), now_ms);
      }
    }
  }
  return plan;
}

void Server::record_dispatch_result(const std::string& alert_id, ChannelKind channel,
                                    const DeliveryResult& result, TimeMs now_ms) {
  std::unique_lock lock(mu_);
  const AlertEvent* a = alerts_.find(alert_id);
  if (!a) throw UnknownAlert(alert_id);
  // record_result resolves the oldest in-flight dispatch on the channel.
  std::optional<std::size_t> index;
  for (std::size_t i = 0; i < a->dispatches.size(); ++i) {
    const auto& d = a->dispatches[i];
    if (d.channel == channel && d.outcome == DispatchOutcome::InFlight) {
      index = i;
      break;
    }
  }
  if (!index || !alerts_.record_result(alert_id, channel, result, now_ms)) return;
  const Dispatch resolved = alerts_.find(alert_id)->dispatches[*index];
  journal_locked(journal::format(journal::DispatchResolved{alert_id, resolved}), now_ms);
}

std::vector<DispatchPlan> Server::escalate_pending(ChannelStates states, TimeMs now_ms) {
  std::unique_lock lock(mu_);
  return alerts_.escalate_pending(states, config_.alert_policy, now_ms);
}

std::optional<AlertEvent> Server::alert(const std::string& alert_id) const {
  std::shared_lock lock(mu_);
  const AlertEvent* a = alerts_.find(alert_id);
  if (!a) return std::nullopt;
  return *a;
}

AlertStatus Server::alert_status(const std::string& alert_id) const {
  std::shared_lock lock(mu_);
  return alerts_.status(alert_id);
}

std::vector<AlertEvent> Server::alerts_since(TimeMs since_ms) const {
  std::shared_lock lock(mu_);
  return alerts_.updated_since(since_ms);
}

std::vector<AlertEvent> Server::alerts() const {
  std::shared_lock lock(mu_);
  return alerts_.all();
}

std::vector<PatientRecord> Server::patients() const {
  std::shared_lock lock(mu_);
  return patients_.list();
}

std::optional<PatientRecord> Server::patient(const std::string& patient_id) const {
  std::shared_lock lock(mu_);
  const auto* p = patients_.find(patient_id);
  if (!p) return std::nullopt;
  return *p;
}

std::vector<UserAccount> Server::users() const {
  std::shared_lock lock(mu_);
  return users_.users();
}

ServerStats Server::stats() const {
  std::shared_lock lock(mu_);
  ServerStats s = counters_;
  s.log_entries = log_.size();
  s.samples_stored = store_.sample_count();
  s.alerts = alerts_.size();
  s.pending_alerts = alerts_.pending_count();
  s.seq_gaps = store_.seq_gaps();
  return s;
}

std::vector<LogEntry> Server::log_entries() const {
  std::shared_lock lock(mu_);
  return log_;
}

void Server::compact() {
  std::unique_lock lock(mu_);
  if (!config_.log_path) return;
  writer_.close();
  rewrite_log(*config_.log_path, log_);
  std::error_code ec;
  writer_ = LogWriter(*config_.log_path, std::filesystem::file_size(*config_.log_path, ec),
                      config_.durable);
}

}  // namespace wardsim
