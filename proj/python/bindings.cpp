// Python module wardsim._wardsim: scenario runs, the server core and a few
// pure helpers.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "wardsim/core/errors.hpp"
#include "wardsim/core/vitals.hpp"
#include "wardsim/harness/config.hpp"
#include "wardsim/harness/report.hpp"
#include "wardsim/harness/simulation.hpp"
#include "wardsim/netsim/channel.hpp"
#include "wardsim/server/server.hpp"
#include "wardsim/server/wire.hpp"

namespace py = pybind11;
using namespace wardsim;

namespace {

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

// Column name -> int | float | None, in CSV column order.
py::dict metrics_dict(const MetricsReport& r) {
  const auto names = split_csv(csv_header());
  const auto cells = split_csv(render_csv_row(r));
  py::dict d;
  for (std::size_t i = 0; i < names.size() && i < cells.size(); ++i) {
    const auto& c = cells[i];
    py::object v = py::none();
    if (c != "n/a") {
      if (c.find_first_of(".eE") == std::string::npos) {
        v = py::int_(std::stoll(c));
      } else {
        v = py::float_(std::stod(c));
      }
    }
    d[py::str(names[i])] = v;
  }
  return d;
}

py::dict ingest_dict(const IngestResult& r) {
  py::dict d;
  d["accepted"] = r.accepted;
  d["duplicate"] = r.duplicate;
  d["device_id"] = r.device_id;
  d["seq"] = r.seq;
  d["reason"] = r.accepted ? py::object(py::none()) : py::object(py::str(std::string(to_string(r.reason))));
  d["alert_id"] = r.new_alert_id ? py::object(py::str(*r.new_alert_id)) : py::object(py::none());
  d["ack"] = r.ack_line();
  return d;
}

ServerConfig server_config(std::optional<std::filesystem::path> log_path, bool fast_hashing) {
  ServerConfig c;
  c.log_path = std::move(log_path);
  if (fast_hashing) c.auth.hashing = PasswordHashing::fast_for_tests();
  return c;
}

}  // namespace

PYBIND11_MODULE(_wardsim, m) {
  m.doc() = "Ward monitoring simulator core";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<CorruptLog>(m, "CorruptLog", PyExc_RuntimeError);
  py::register_exception<UnknownPatient>(m, "UnknownPatient", PyExc_KeyError);

  m.def("compute_bpm", [](std::vector<TimeMs> pulses, TimeMs window_ms) {
    return compute_bpm(pulses, window_ms);
  }, py::arg("pulse_timestamps_ms"), py::arg("window_ms") = 60000);
  m.def("eventual_delivery_prob", &eventual_delivery_prob, py::arg("loss_prob"),
        py::arg("max_retries"));

  py::class_<ScenarioConfig>(m, "Scenario")
      .def_static("parse", [](const std::string& text) { return parse_scenario(text); })
      .def_static("load", [](const std::filesystem::path& p) { return load_scenario(p); })
      .def_readwrite("seed", &ScenarioConfig::seed)
      .def_readwrite("duration_ms", &ScenarioConfig::duration_ms)
      .def_property_readonly("patient_count",
                             [](const ScenarioConfig& c) { return c.patients.size(); })
      .def("validate", &ScenarioConfig::validate);

  m.def("run_scenario", [](const ScenarioConfig& cfg, std::optional<std::filesystem::path> out_dir) {
    MetricsReport r;
    {
      py::gil_scoped_release release;
      r = run_scenario(cfg, SimulationOptions{std::move(out_dir), false});
    }
    return metrics_dict(r);
  }, py::arg("scenario"), py::arg("out_dir") = py::none());

  py::class_<Server>(m, "Server")
      .def(py::init([](std::optional<std::filesystem::path> log_path, bool fast_hashing) {
             return std::make_unique<Server>(server_config(std::move(log_path), fast_hashing));
           }),
           py::arg("log_path") = py::none(), py::arg("fast_hashing") = false)
      .def("recover", [](Server& s) {
        const auto r = s.recover();
        py::dict d;
        d["entries"] = r.entries;
        d["torn_tail"] = r.torn_tail;
        d["discarded_bytes"] = r.discarded_bytes;
        return d;
      })
      .def("register_patient",
           [](Server& s, const std::string& patient_id, const std::string& device_id,
              const std::string& display_name) {
             s.register_patient(PatientRecord{patient_id, display_name, device_id, {}});
           },
           py::arg("patient_id"), py::arg("device_id"), py::arg("display_name") = "")
      .def("ingest", [](Server& s, const std::string& line, TimeMs now) {
        return ingest_dict(s.ingest(line, now));
      }, py::arg("line"), py::arg("now_ms") = 0)
      .def("query_vitals",
           [](const Server& s, const std::string& patient_id, TimeMs from, TimeMs to) {
             std::vector<std::string> out;
             for (const auto& v : s.query_vitals(patient_id, from, to)) {
               out.push_back(wire::format(wire::to_record(v)));
             }
             return out;
           },
           py::arg("patient_id"), py::arg("from_ms") = 0, py::arg("to_ms") = 1LL << 50)
      .def("create_user",
           [](Server& s, const std::string& username, const std::string& secret,
              const std::string& role) {
             const auto r = role_from_string(role);
             if (!r) throw py::value_error("unknown role: " + role);
             return s.create_user(username, secret, *r).user_id;
           })
      .def("authenticate",
           [](Server& s, const std::string& username, const std::string& secret, TimeMs now)
               -> std::optional<std::string> {
             auto r = s.authenticate(username, secret, now);
             if (auto* session = std::get_if<Session>(&r)) return session->token;
             return std::nullopt;
           },
           py::arg("username"), py::arg("secret"), py::arg("now_ms") = 0)
      .def("acknowledge_alert",
           [](Server& s, const std::string& alert_id, const std::string& token, TimeMs now) {
             return s.acknowledge_alert(alert_id, s.session(token, now), now).ack->user_id;
           },
           py::arg("alert_id"), py::arg("token"), py::arg("now_ms") = 0)
      .def("alert_status", [](const Server& s, const std::string& id) {
        return std::string(to_string(s.alert_status(id)));
      })
      .def("alert_ids", [](const Server& s) {
        std::vector<std::string> ids;
        for (const auto& a : s.alerts()) ids.push_back(a.alert_id);
        return ids;
      })
      .def("stats", [](const Server& s) {
        const auto st = s.stats();
        py::dict d;
        d["log_entries"] = st.log_entries;
        d["samples_stored"] = st.samples_stored;
        d["alerts"] = st.alerts;
        d["pending_alerts"] = st.pending_alerts;
        d["seq_gaps"] = st.seq_gaps;
        d["duplicates"] = st.duplicates;
        d["rejected"] = st.rejected;
        return d;
      });

  m.def("replay_trace", [](const std::string& trace, Server& server) {
    std::istringstream in(trace);
    const auto r = replay_trace(in, server);
    py::dict d;
    d["records"] = r.records;
    d["ingested"] = r.ingested;
    d["duplicates"] = r.duplicates;
    d["rejected"] = r.rejected;
    d["registrations"] = r.registrations;
    return d;
  });
}
