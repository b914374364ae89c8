#include "wardsim/server/http_api.hpp"

#include <httplib.h>

#include <chrono>
#include <json.hpp>
#include <thread>

#include "wardsim/core/errors.hpp"
#include "wardsim/core/text.hpp"

namespace wardsim {

using nlohmann::json;

namespace {

struct HttpError {
  int status;
  std::string message;
};

json to_json(const Thresholds& th) {
  return json{{"hr_min", th.heart_rate.min},   {"hr_max", th.heart_rate.max},
              {"temp_min", th.temperature.min}, {"temp_max", th.temperature.max},
              {"sys_min", th.systolic.min},     {"sys_max", th.systolic.max},
              {"dia_min", th.diastolic.min},    {"dia_max", th.diastolic.max},
              {"debounce_ms", th.debounce_ms}};
}

Thresholds thresholds_from(const json& j, Thresholds th) {
  auto field = [&](const char* key, double& out) {
    if (j.contains(key)) out = j.at(key).get<double>();
  };
  field("hr_min", th.heart_rate.min);
  field("hr_max", th.heart_rate.max);
  field("temp_min", th.temperature.min);
  field("temp_max", th.temperature.max);
  field("sys_min", th.systolic.min);
  field("sys_max", th.systolic.max);
  field("dia_min", th.diastolic.min);
  field("dia_max", th.diastolic.max);
  if (j.contains("debounce_ms")) th.debounce_ms = j.at("debounce_ms").get<std::uint32_t>();
  return th;
}

json to_json(const PatientRecord& p) {
  return json{{"patient_id", p.patient_id},
              {"display_name", p.display_name},
              {"device_id", p.assigned_device_id},
              {"thresholds", to_json(p.thresholds)}};
}

json value_json(const Measurement& m) {
  return std::visit(
      [](const auto& v) -> json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Pressure>) {
          return json{{"systolic", v.systolic}, {"diastolic", v.diastolic}};
        } else if constexpr (std::is_same_v<T, DigitalEdge>) {
          return v.rising ? 1 : 0;
        } else {
          return v.value;
        }
      },
      m);
}

json to_json(const VitalSample& s) {
  return json{{"device_id", s.device_id},
              {"seq", s.seq},
              {"t_ms", s.t_ms},
              {"kind", std::string(wire_code(s.kind))},
              {"value", value_json(s.value)}};
}

json to_json(const AlertEvent& a, AlertStatus status) {
  json dispatches = json::array();
  for (const auto& d : a.dispatches) {
    dispatches.push_back(json{
        {"channel", std::string(to_string(d.channel))},
        {"dispatched_at_ms", d.dispatched_at_ms},
        {"delivered_at_ms", d.delivered_at_ms ? json(*d.delivered_at_ms) : json(nullptr)},
        {"outcome", std::string(to_string(d.outcome))}});
  }
  json j{{"alert_id", a.alert_id},
         {"device_id", a.device_id},
         {"patient_id", a.patient_id},
         {"cause", std::string(wire_code(a.cause))},
         {"severity", std::string(wire_code(a.severity))},
         {"raised_at_ms", a.raised_at_ms},
         {"sample_seq", a.sample_seq ? json(*a.sample_seq) : json(nullptr)},
         {"status", std::string(to_string(status))},
         {"dispatches", std::move(dispatches)}};
  j["ack"] = a.ack ? json{{"user_id", a.ack->user_id}, {"ack_at_ms", a.ack->ack_at_ms}}
                   : json(nullptr);
  return j;
}

json parse_body(const httplib::Request& req) {
  try {
    json j = json::parse(req.body);
    if (!j.is_object()) throw HttpError{400, "request body must be a JSON object"};
    return j;
  } catch (const json::parse_error&) {
    throw HttpError{400, "request body is not valid JSON"};
  }
}

std::string required_string(const json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_string()) {
    throw HttpError{400, std::string("missing string field '") + key + "'"};
  }
  return j.at(key).get<std::string>();
}

template <typename T>
T query_int(const httplib::Request& req, const char* key, T fallback) {
  if (!req.has_param(key)) return fallback;
  auto v = text::parse_int<T>(req.get_param_value(key));
  if (!v) throw HttpError{400, std::string("query parameter '") + key + "' must be an integer"};
  return *v;
}

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

}  // namespace

TimeMs wall_clock_ms() {
  using namespace std::chrono;
  return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

struct HttpApi::Impl {
  Server& server;
  Clock clock;
  httplib::Server http;
  std::thread worker;

  Impl(Server& s, Clock c) : server(s), clock(std::move(c)) { routes(); }

  Session session_of(const httplib::Request& req) {
    const auto auth = req.get_header_value("Authorization");
    constexpr std::string_view prefix = "Bearer ";
    if (auth.size() <= prefix.size() || auth.compare(0, prefix.size(), prefix) != 0) {
      throw Unauthenticated();
    }
    return server.session(std::string_view(auth).substr(prefix.size()), clock());
  }

  // Runs a handler and maps domain errors onto HTTP statuses.
  template <typename F>
  httplib::Server::Handler guarded(F f) {
    return [this, f](const httplib::Request& req, httplib::Response& res) {
      try {
        f(req, res);
      } catch (const HttpError& e) {
        send_json(res, e.status, json{{"error", e.message}});
      } catch (const Unauthenticated& e) {
        send_json(res, 401, json{{"error", e.what()}});
      } catch (const Forbidden& e) {
        send_json(res, 403, json{{"error", e.what()}});
      } catch (const UnknownPatient& e) {
        send_json(res, 404, json{{"error", e.what()}});
      } catch (const UnknownAlert& e) {
        send_json(res, 404, json{{"error", e.what()}});
      } catch (const InvalidThresholds& e) {
        send_json(res, 400, json{{"error", e.what()}});
      } catch (const std::invalid_argument& e) {
        send_json(res, 400, json{{"error", e.what()}});
      } catch (const json::exception& e) {
        send_json(res, 400, json{{"error", e.what()}});
      }
    };
  }

  void routes() {
    http.Post("/api/login", guarded([this](const auto& req, auto& res) {
      const json body = parse_body(req);
      const auto result = server.authenticate(required_string(body, "username"),
                                              required_string(body, "password"), clock());
      if (const auto* err = std::get_if<AuthError>(&result)) {
        if (err->kind == AuthError::Kind::Locked) throw HttpError{423, "account locked"};
        throw HttpError{401, "invalid credentials"};
      }
      const auto& s = std::get<Session>(result);
      send_json(res, 200,
                json{{"token", s.token},
                     {"user_id", s.user_id},
                     {"role", std::string(to_string(s.role))},
                     {"expires_at_ms", s.expires_at_ms}});
    }));

    http.Get("/api/health", guarded([this](const auto&, auto& res) {
      const auto st = server.stats();
      send_json(res, 200,
                json{{"status", "ok"},
                     {"server_time_ms", clock()},
                     {"log_entries", st.log_entries},
                     {"samples", st.samples_stored},
                     {"alerts", st.alerts},
                     {"pending_alerts", st.pending_alerts},
                     {"seq_gaps", st.seq_gaps},
                     {"duplicates", st.duplicates},
                     {"rejected", st.rejected},
                     {"torn_tail_warnings", st.torn_tail_warnings}});
    }));

    http.Get("/api/patients", guarded([this](const auto& req, auto& res) {
      Server::require(session_of(req), Action::ReadPatients);
      json out = json::array();
      for (const auto& p : server.patients()) out.push_back(to_json(p));
      send_json(res, 200, json{{"patients", out}});
    }));

    http.Post("/api/patients", guarded([this](const auto& req, auto& res) {
      const Session s = session_of(req);
      const json body = parse_body(req);
      PatientRecord p;
      p.patient_id = required_string(body, "patient_id");
      p.assigned_device_id = required_string(body, "device_id");
      p.display_name = body.value("display_name", p.patient_id);
      if (body.contains("thresholds")) p.thresholds = thresholds_from(body.at("thresholds"), {});
      server.register_patient(s, p, clock());
      send_json(res, 201, to_json(*server.patient(p.patient_id)));
    }));

    http.Put(R"(/api/patients/([^/]+)/thresholds)", guarded([this](const auto& req, auto& res) {
      const Session s = session_of(req);
      const std::string id = req.matches[1];
      const auto current = server.patient(id);
      if (!current) throw UnknownPatient(id);
      const Thresholds th = thresholds_from(parse_body(req), current->thresholds);
      server.set_thresholds(s, id, th, clock());
      send_json(res, 200, to_json(*server.patient(id)));
    }));

    http.Get(R"(/api/patients/([^/]+)/vitals)", guarded([this](const auto& req, auto& res) {
      Server::require(session_of(req), Action::ReadVitals);
      const std::string id = req.matches[1];
      const TimeMs from = query_int<TimeMs>(req, "from", std::numeric_limits<TimeMs>::min());
      const TimeMs to = query_int<TimeMs>(req, "to", std::numeric_limits<TimeMs>::max());
      if (from > to) throw HttpError{400, "'from' must not exceed 'to'"};
      std::vector<SensorKind> kinds;
      if (req.has_param("kinds") && !req.get_param_value("kinds").empty()) {
        for (auto code : text::split(req.get_param_value("kinds"), ',')) {
          auto k = sensor_kind_from_wire(code);
          if (!k) throw HttpError{400, "unknown sensor kind '" + std::string(code) + "'"};
          kinds.push_back(*k);
        }
      }
      json out = json::array();
      for (const auto& s : server.query_vitals(id, from, to, kinds)) out.push_back(to_json(s));
      send_json(res, 200, json{{"patient_id", id}, {"samples", out}});
    }));

    http.Get("/api/alerts", guarded([this](const auto& req, auto& res) {
      Server::require(session_of(req), Action::ReadAlerts);
      const TimeMs now = clock();
      const TimeMs since = query_int<TimeMs>(req, "since", std::numeric_limits<TimeMs>::min());
      json out = json::array();
      for (const auto& a : server.alerts_since(since)) {
        out.push_back(to_json(a, server.alert_status(a.alert_id)));
      }
      send_json(res, 200, json{{"server_time_ms", now}, {"alerts", out}});
    }));

    http.Post(R"(/api/alerts/([^/]+)/ack)", guarded([this](const auto& req, auto& res) {
      const Session s = session_of(req);
      const std::string id = req.matches[1];
      const AlertEvent a = server.acknowledge_alert(id, s, clock());
      send_json(res, 200, to_json(a, server.alert_status(id)));
    }));

    http.Post("/api/users", guarded([this](const auto& req, auto& res) {
      const Session s = session_of(req);
      Server::require(s, Action::ManageUsers);
      const json body = parse_body(req);
      const auto role = role_from_string(required_string(body, "role"));
      if (!role) throw HttpError{400, "role must be ADMIN, DOCTOR or NURSE"};
      const UserAccount u = server.create_user(s, required_string(body, "username"),
                                               required_string(body, "password"), *role, clock());
      send_json(res, 201,
                json{{"user_id", u.user_id},
                     {"username", u.username},
                     {"role", std::string(to_string(u.role))}});
    }));

    http.Post("/api/ingest", guarded([this](const auto& req, auto& res) {
      std::string out;
      for (auto line : text::split(req.body, '\n')) {
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;
        const IngestResult r = server.ingest(line, clock());
        out += r.accepted ? r.ack_line() : "NAK|" + std::string(to_string(r.reason));
        out += '\n';
      }
      res.status = 200;
      res.set_content(out, "text/plain");
    }));
  }
};

HttpApi::HttpApi(Server& server, Clock clock)
    : impl_(std::make_unique<Impl>(server, std::move(clock))) {}

HttpApi::~HttpApi() { stop(); }

int HttpApi::bind(const std::string& host, int port) {
  if (port == 0) return impl_->http.bind_to_any_port(host);
  return impl_->http.bind_to_port(host, port) ? port : -1;
}

bool HttpApi::listen() { return impl_->http.listen_after_bind(); }

int HttpApi::start(const std::string& host, int port) {
  const int bound = bind(host, port);
  if (bound < 0) return -1;
  impl_->worker = std::thread([this] { impl_->http.listen_after_bind(); });
  impl_->http.wait_until_ready();
  return bound;
}

void HttpApi::stop() {
  impl_->http.stop();
  if (impl_->worker.joinable()) impl_->worker.join();
}

}  // namespace wardsim
