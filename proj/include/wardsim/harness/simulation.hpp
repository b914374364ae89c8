#pragma once

// Discrete-event scenario runner over a virtual clock. Events at equal times
// run in scheduling order, so a (config, seed) pair fixes every output byte.
//
// Trace file (trace.txt), one event per line:
//   # wardsim trace v1
//   #register <patient_id> <device_id> <display name>
//   <t> RX <wire record>                 record arriving at the server
//   <t> LOST|DOWN <device_id> <seq>      failed Wi-Fi transmission
//   <t> DLQ <device_id> <seq>            record dead-lettered
//   <t> ALERT <device_id> <seq> <cause>  raised on the device
//   <t> SMS <device_id> <seq> <status>   device-side SMS outcome
//   <t> DISPATCH <alert_id> <channel> <status>
//   <t> LINK <channel> UP|DOWN
//   <t> ACK <alert_id> <user_id>
// Only #register and RX lines matter to replay.

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "wardsim/harness/config.hpp"
#include "wardsim/harness/report.hpp"
#include "wardsim/server/server.hpp"

namespace wardsim {

struct SimulationOptions {
  // When set: trace.txt, report.txt, report.csv and events.log are written
  // here (existing files are replaced).
  std::optional<std::filesystem::path> out_dir;
  bool keep_trace = false;  // also keep the trace text in memory
};

struct AlertTrack {
  std::string alert_id;
  std::size_t device = 0;
  AlertCause cause = AlertCause::LowHeartRate;
  TimeMs raised_at_ms = 0;
  TimeMs trigger_t_ms = 0;
  std::optional<TimeMs> led_lit_at_ms;
  std::optional<TimeMs> first_sms_at_ms;
  std::optional<TimeMs> first_remote_at_ms;
};

class Simulation {
 public:
  explicit Simulation(ScenarioConfig config, SimulationOptions options = {});
  ~Simulation();
  Simulation(const Simulation&) = delete;
  Simulation& operator=(const Simulation&) = delete;

  // Runs to quiescence or until duration + drain (exclusive). Throws InvariantViolation when
  // the conservation check fails. May be called once.
  MetricsReport run();

  Server& server();
  const Server* cloud() const;  // nullptr unless cloud_sync
  const std::vector<DeviceState>& devices() const;
  const std::vector<AlertTrack>& alerts() const;
  const std::string& trace() const;  // empty unless keep_trace
  const ScenarioConfig& config() const;

  // Quiescence reached before the drain cap.
  bool drained() const;
  // Local acknowledgements that threw.
  std::uint64_t ack_failures() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

MetricsReport run_scenario(const ScenarioConfig& config, const SimulationOptions& options = {});

struct ReplayResult {
  std::uint64_t records = 0;
  std::uint64_t ingested = 0;
  std::uint64_t duplicates = 0;
  std::uint64_t rejected = 0;
  std::uint64_t registrations = 0;
};

// Feeds a trace into `server`: registers the listed patients, then ingests
// every RX record at its timestamp.
ReplayResult replay_trace(std::istream& trace, Server& server);

}  // namespace wardsim
