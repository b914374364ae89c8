// wardsim command-line entry point: run | serve | replay.

#include <CLI11.hpp>

#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "wardsim/core/errors.hpp"
#include "wardsim/harness/config.hpp"
#include "wardsim/harness/simulation.hpp"
#include "wardsim/server/http_api.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitInvariant = 3;

int run_command(const std::string& scenario, std::optional<std::uint64_t> seed,
                const std::string& out) {
  wardsim::ScenarioConfig cfg = wardsim::load_scenario(scenario);
  if (seed) cfg.seed = *seed;
  wardsim::SimulationOptions opts;
  opts.out_dir = out;
  const wardsim::MetricsReport report = wardsim::run_scenario(cfg, opts);
  std::cout << wardsim::render_text(report);
  return kExitOk;
}

int serve_command(int port, const std::string& data, const std::string& host,
                  const std::string& policy, const std::string& ttl, bool durable,
                  const std::string& admin_user) {
  wardsim::ServerConfig sc;
  auto p = wardsim::alert_policy_from_string(policy);
  if (!p) throw wardsim::ConfigError(0, "--alert-policy: expected both or fallback_only");
  sc.alert_policy = *p;
  auto ttl_ms = wardsim::parse_duration(ttl);
  if (!ttl_ms || *ttl_ms <= 0) throw wardsim::ConfigError(0, "--session-ttl: expected a duration");
  sc.auth.session_ttl_ms = *ttl_ms;
  sc.durable = durable;
  std::filesystem::create_directories(data);
  sc.log_path = std::filesystem::path(data) / "events.log";

  wardsim::Server server(sc);
  const auto rec = server.recover();
  std::cerr << "recovered " << rec.entries << " log entries";
  if (rec.torn_tail) std::cerr << " (dropped " << rec.discarded_bytes << " byte torn tail)";
  std::cerr << "\n";

  if (server.users().empty()) {
    const char* secret = std::getenv("WARDSIM_ADMIN_PASSWORD");
    if (!secret || !*secret) {
      std::cerr << "no users exist; set WARDSIM_ADMIN_PASSWORD to create '" << admin_user
                << "'\n";
    } else {
      server.create_user(admin_user, secret, wardsim::Role::Admin, wardsim::wall_clock_ms());
      std::cerr << "created admin user '" << admin_user << "'\n";
    }
  }

  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  wardsim::HttpApi api(server);
  const int bound = api.start(host, port);
  if (bound < 0) {
    std::cerr << "cannot listen on " << host << ":" << port << "\n";
    return kExitFailure;
  }
  std::cerr << "listening on http://" << host << ":" << bound << "\n";
  int sig = 0;
  sigwait(&signals, &sig);
  api.stop();
  return kExitOk;
}

int replay_command(const std::string& trace_path, const std::string& data) {
  std::ifstream trace(trace_path, std::ios::binary);
  if (!trace) throw wardsim::ConfigError(0, "cannot read trace file " + trace_path);
  std::filesystem::create_directories(data);
  wardsim::ServerConfig sc;
  sc.log_path = std::filesystem::path(data) / "events.log";
  wardsim::Server server(sc);
  server.recover();
  const auto r = wardsim::replay_trace(trace, server);
  const auto st = server.stats();
  std::cout << "records " << r.records << "\ningested " << r.ingested << "\nduplicates "
            << r.duplicates << "\nrejected " << r.rejected << "\nsamples_stored "
            << st.samples_stored << "\nalerts " << st.alerts << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"wardsim: patient-monitoring system simulator and server"};
  app.require_subcommand(1);

  std::string scenario;
  std::string out;
  std::optional<std::uint64_t> seed;
  auto* run = app.add_subcommand("run", "Run a scenario on the virtual clock");
  run->add_option("--scenario", scenario, "Scenario INI file")->required();
  run->add_option("--seed", seed, "Override the scenario seed");
  run->add_option("--out", out, "Output directory")->required();

  int port = 8080;
  std::string data;
  std::string host = "127.0.0.1";
  std::string policy = "both";
  std::string ttl = "8h";
  bool durable = false;
  std::string admin_user = "admin";
  auto* serve = app.add_subcommand("serve", "Serve the HTTP API over a data directory");
  serve->add_option("--port", port, "Listen port (0 picks a free one)");
  serve->add_option("--data", data, "Data directory")->required();
  serve->add_option("--host", host, "Listen address");
  serve->add_option("--alert-policy", policy, "both | fallback_only");
  serve->add_option("--session-ttl", ttl, "Session lifetime, e.g. 8h");
  serve->add_flag("--durable", durable, "fdatasync after every log append");
  serve->add_option("--admin-user", admin_user, "Bootstrap admin name");

  std::string trace;
  std::string replay_data;
  auto* replay = app.add_subcommand("replay", "Re-ingest a trace into a data directory");
  replay->add_option("--trace", trace, "Trace file from a run")->required();
  replay->add_option("--data", replay_data, "Data directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*run) return run_command(scenario, seed, out);
    if (*serve) {
      return serve_command(port, data, host, policy, ttl, durable, admin_user);
    }
    return replay_command(trace, replay_data);
  } catch (const wardsim::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const wardsim::InvariantViolation& e) {
    std::cerr << "invariant violation: " << e.what() << "\n";
    return kExitInvariant;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}
