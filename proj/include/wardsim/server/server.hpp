#pragma once

// Central monitoring service. All state is a fold over the append-only event
// log, so recover() on a copy of the log reproduces it. Every public member
// is safe to call concurrently: writers are serialized, readers share.

#include <filesystem>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "wardsim/core/types.hpp"
#include "wardsim/server/access.hpp"
#include "wardsim/server/escalation.hpp"
#include "wardsim/server/event_log.hpp"
#include "wardsim/server/store.hpp"

namespace wardsim {

struct ServerConfig {
  AlertPolicy alert_policy = AlertPolicy::Both;
  AuthPolicy auth;
  std::optional<std::filesystem::path> log_path;  // nullopt: memory only
  bool durable = false;                           // fdatasync every append
};

enum class RejectReason : std::uint8_t { MalformedRecord, UnknownDevice };

std::string_view to_string(RejectReason r);

struct IngestResult {
  bool accepted = false;
  RejectReason reason = RejectReason::MalformedRecord;  // when !accepted
  std::string device_id;
  Seq seq = 0;
  bool duplicate = false;
  std::optional<std::string> new_alert_id;

  // "ACK|<device_id>|<seq>" for accepted records, empty otherwise.
  std::string ack_line() const;
};

struct RecoveryReport {
  std::size_t entries = 0;
  bool torn_tail = false;
  std::uint64_t discarded_bytes = 0;
  std::size_t skipped = 0;  // well-formed entries that could not be applied
};

struct ServerStats {
  std::size_t log_entries = 0;
  std::size_t samples_stored = 0;
  std::size_t alerts = 0;
  std::size_t pending_alerts = 0;
  std::uint64_t seq_gaps = 0;
  std::uint64_t duplicates = 0;
  std::uint64_t rejected = 0;
  std::uint64_t torn_tail_warnings = 0;
};

class Server {
 public:
  explicit Server(ServerConfig config = {});
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  // Replays config.log_path into this (fresh) server and reopens it for
  // appending with any torn tail cut off. Throws CorruptLog.
  RecoveryReport recover();
  // Same, from an explicit entry list (no file involved).
  RecoveryReport recover_from(const std::vector<LogEntry>& entries);

  // Administrative mutations, journalled. The session overloads enforce the
  // role matrix first.
  void register_patient(PatientRecord record, TimeMs now_ms = 0);
  void register_patient(const Session& s, PatientRecord record, TimeMs now_ms);
  void set_thresholds(const Session& s, const std::string& patient_id, const Thresholds& th,
                      TimeMs now_ms);
  UserAccount create_user(std::string username, std::string_view secret, Role role,
                          TimeMs now_ms = 0);
  UserAccount create_user(const Session& s, std::string username, std::string_view secret,
                          Role role, TimeMs now_ms);

  AuthResult authenticate(std::string_view username, std::string_view secret, TimeMs now_ms);
  // Throws Unauthenticated.
  Session session(std::string_view token, TimeMs now_ms) const;
  // Throws Forbidden.
  static void require(const Session& s, Action action);

  IngestResult ingest(std::string_view wire_line, TimeMs now_ms);

  // Throws UnknownPatient.
  std::vector<VitalSample> query_vitals(const std::string& patient_id, TimeMs from_ms,
                                        TimeMs to_ms,
                                        const std::vector<SensorKind>& kinds = {}) const;

  // Throws UnknownAlert, Forbidden.
  AlertEvent acknowledge_alert(const std::string& alert_id, const Session& s, TimeMs now_ms);

  DispatchPlan dispatch_alert(const std::string& alert_id, ChannelStates states, TimeMs now_ms);
  void record_dispatch_result(const std::string& alert_id, ChannelKind channel,
                              const DeliveryResult& result, TimeMs now_ms);
  std::vector<DispatchPlan> escalate_pending(ChannelStates states, TimeMs now_ms);

  std::optional<AlertEvent> alert(const std::string& alert_id) const;
  AlertStatus alert_status(const std::string& alert_id) const;
  std::vector<AlertEvent> alerts_since(TimeMs since_ms) const;
  std::vector<AlertEvent> alerts() const;
  std::vector<PatientRecord> patients() const;
  std::optional<PatientRecord> patient(const std::string& patient_id) const;
  std::vector<UserAccount> users() const;

  ServerStats stats() const;
  std::vector<LogEntry> log_entries() const;
  const ServerConfig& config() const { return config_; }

  // Rewrites the log file to exactly the current entries.
  void compact();

 private:
  void append_locked(LogEntry entry);
  void journal_locked(const std::string& payload, TimeMs now_ms);
  IngestResult apply_wire_locked(std::string_view line, TimeMs now_ms, bool replaying);
  bool apply_entry_locked(const LogEntry& entry);

  ServerConfig config_;
  mutable std::shared_mutex mu_;
  std::vector<LogEntry> log_;
  LogWriter writer_;
  TelemetryStore store_;
  PatientRegistry patients_;
  UserDirectory users_;
  AlertBook alerts_;
  ServerStats counters_;
};

}  // namespace wardsim
