#include "wardsim/harness/config.hpp"

#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "wardsim/core/errors.hpp"
#include "wardsim/core/text.hpp"
#include "wardsim/server/journal.hpp"
#include "wardsim/server/wire.hpp"

namespace wardsim {

namespace {

using text::trim;

struct Section {
  std::string name;   // "scenario", "patient", ...
  std::string index;  // "1" for [patient.1], "" otherwise
  int line = 0;
};

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  ScenarioConfig run() {
    std::size_t pos = 0;
    int line_no = 0;
    while (pos <= text_.size()) {
      const auto nl = text_.find('\n', pos);
      const auto raw = text_.substr(pos, nl == std::string_view::npos ? text_.npos : nl - pos);
      ++line_no;
      line(trim(strip_comment(raw)), line_no);
      if (nl == std::string_view::npos) break;
      pos = nl + 1;
    }
    return finish();
  }

 private:
  static std::string_view strip_comment(std::string_view s) {
    const auto hash = s.find('#');
    return hash == std::string_view::npos ? s : s.substr(0, hash);
  }

  void line(std::string_view s, int n) {
    if (s.empty()) return;
    if (s.front() == '[') {
      if (s.back() != ']') throw ConfigError(n, "unterminated section header");
      open_section(trim(s.substr(1, s.size() - 2)), n);
      return;
    }
    const auto eq = s.find('=');
    if (eq == std::string_view::npos) throw ConfigError(n, "expected key = value");
    if (!section_) throw ConfigError(n, "key outside of any section");
    const auto key = trim(s.substr(0, eq));
    const auto value = trim(s.substr(eq + 1));
    if (key.empty()) throw ConfigError(n, "empty key");
    assign(std::string(key), value, n);
  }

  void open_section(std::string_view header, int n) {
    Section sec;
    sec.line = n;
    const auto dot = header.find('.');
    sec.name = std::string(header.substr(0, dot));
    if (dot != std::string_view::npos) sec.index = std::string(header.substr(dot + 1));
    static const std::set<std::string> indexed = {"patient", "anomaly", "channel"};
    static const std::set<std::string> plain = {"scenario", "retransmission"};
    if (indexed.count(sec.name)) {
      if (sec.index.empty()) throw ConfigError(n, "section [" + sec.name + "] needs a suffix");
    } else if (plain.count(sec.name)) {
      if (!sec.index.empty()) throw ConfigError(n, "section [" + sec.name + "] takes no suffix");
    } else {
      throw ConfigError(n, "unknown section [" + std::string(header) + "]");
    }
    if (sec.name == "channel" && sec.index != "wifi" && sec.index != "internet" &&
        sec.index != "gsm") {
      throw ConfigError(n, "unknown channel '" + sec.index + "'");
    }
    const std::string full = std::string(header);
    if (!seen_sections_.insert(full).second) throw ConfigError(n, "duplicate section [" + full + "]");
    if (sec.name == "patient") {
      patient_order_.push_back(sec.index);
      patients_[sec.index].line = n;
    } else if (sec.name == "anomaly") {
      anomaly_order_.push_back(sec.index);
      anomalies_[sec.index].line = n;
    } else if (sec.name == "channel") {
      channel(sec.index).outages.clear();
    }
    section_ = sec;
  }

  ChannelModel& channel(const std::string& name) {
    if (name == "wifi") return cfg_.wifi;
    if (name == "internet") return cfg_.internet;
    return cfg_.gsm;
  }

  template <typename T>
  static T integer(std::string_view v, int n, const std::string& key) {
    auto x = text::parse_int<T>(v);
    if (!x) throw ConfigError(n, key + ": expected an integer, got '" + std::string(v) + "'");
    return *x;
  }

  static double real(std::string_view v, int n, const std::string& key) {
    auto x = text::parse_double(v);
    if (!x) throw ConfigError(n, key + ": expected a number, got '" + std::string(v) + "'");
    return *x;
  }

  static TimeMs duration(std::string_view v, int n, const std::string& key) {
    auto x = parse_duration(v);
    if (!x) throw ConfigError(n, key + ": expected a duration, got '" + std::string(v) + "'");
    return *x;
  }

  static bool boolean(std::string_view v, int n, const std::string& key) {
    if (v == "true" || v == "yes" || v == "1") return true;
    if (v == "false" || v == "no" || v == "0") return false;
    throw ConfigError(n, key + ": expected true or false");
  }

  void once(const std::string& key, int n) {
    const std::string scoped = section_->name + "." + section_->index + "." + key;
    if (!assigned_.insert(scoped).second) throw ConfigError(n, "duplicate key '" + key + "'");
  }

  void assign(const std::string& key, std::string_view v, int n) {
    const auto& sec = *section_;
    if (key != "outage") once(key, n);
    if (sec.name == "scenario") {
      scenario_key(key, v, n);
    } else if (sec.name == "retransmission") {
      retransmission_key(key, v, n);
    } else if (sec.name == "patient") {
      patient_key(patients_[sec.index], key, v, n);
    } else if (sec.name == "anomaly") {
      anomaly_key(anomalies_[sec.index], key, v, n);
    } else {
      channel_key(channel(sec.index), key, v, n);
    }
  }

  void scenario_key(const std::string& key, std::string_view v, int n) {
    if (key == "seed") {
      cfg_.seed = integer<std::uint64_t>(v, n, key);
    } else if (key == "duration") {
      cfg_.duration_ms = duration(v, n, key);
    } else if (key == "tick_period") {
      cfg_.tick_period_ms = duration(v, n, key);
    } else if (key == "sample_period") {
      cfg_.sample_period_ms = duration(v, n, key);
    } else if (key == "drain") {
      cfg_.drain_ms = duration(v, n, key);
    } else if (key == "alert_policy") {
      auto p = alert_policy_from_string(v);
      if (!p) throw ConfigError(n, "alert_policy: expected both or fallback_only");
      cfg_.alert_policy = *p;
    } else if (key == "escalation_retry") {
      cfg_.escalation_retry_ms = duration(v, n, key);
    } else if (key == "nurse_ack_delay") {
      cfg_.nurse_ack_delay_ms = duration(v, n, key);
    } else if (key == "cloud_sync") {
      cfg_.cloud_sync = boolean(v, n, key);
    } else {
      throw ConfigError(n, "unknown key '" + key + "' in [scenario]");
    }
  }

  void retransmission_key(const std::string& key, std::string_view v, int n) {
    auto& d = cfg_.device;
    if (key == "base_backoff") {
      d.base_backoff_ms = duration(v, n, key);
    } else if (key == "max_retries") {
      d.max_retries = integer<unsigned>(v, n, key);
    } else if (key == "batch_size") {
      d.batch_size = integer<std::size_t>(v, n, key);
    } else if (key == "ack_timeout") {
      cfg_.ack_timeout_ms = duration(v, n, key);
    } else if (key == "clear_hold") {
      d.clear_hold_ms = duration(v, n, key);
    } else if (key == "sms_retry") {
      d.sms_retry_ms = duration(v, n, key);
    } else if (key == "device_sms") {
      if (v == "when_offline") {
        d.sms = DeviceSmsPolicy::WhenOffline;
      } else if (v == "never") {
        d.sms = DeviceSmsPolicy::Never;
      } else {
        throw ConfigError(n, "device_sms: expected when_offline or never");
      }
    } else {
      throw ConfigError(n, "unknown key '" + key + "' in [retransmission]");
    }
  }

  struct PatientDraft {
    PatientConfig cfg;
    int line = 0;
  };

  struct AnomalyDraft {
    std::optional<std::string> patient;
    std::optional<SensorKind> kind;
    std::string shape = "step";
    std::optional<double> delta;
    std::optional<std::uint32_t> count;
    TimeMs start = 0;
    std::optional<TimeMs> length;
    std::uint32_t repeat = 1;
    TimeMs every = 0;
    int line = 0;
  };

  void patient_key(PatientDraft& p, const std::string& key, std::string_view v, int n) {
    auto& prof = p.cfg.profile;
    auto& th = p.cfg.thresholds;
    const std::map<std::string, double*> reals = {
        {"baseline_bpm", &prof.baseline_bpm},  {"baseline_temp", &prof.baseline_temp_c},
        {"baseline_sys", &prof.baseline_sys},  {"baseline_dia", &prof.baseline_dia},
        {"jitter_bpm", &prof.jitter_bpm},      {"jitter_temp", &prof.jitter_temp},
        {"jitter_sys", &prof.jitter_sys},      {"jitter_dia", &prof.jitter_dia},
        {"blink_rate", &prof.blink_rate_per_hour},
        {"motion_rate", &prof.motion_rate_per_hour},
        {"hr_min", &th.heart_rate.min},        {"hr_max", &th.heart_rate.max},
        {"temp_min", &th.temperature.min},     {"temp_max", &th.temperature.max},
        {"sys_min", &th.systolic.min},         {"sys_max", &th.systolic.max},
        {"dia_min", &th.diastolic.min},        {"dia_max", &th.diastolic.max},
    };
    if (auto it = reals.find(key); it != reals.end()) {
      *it->second = real(v, n, key);
    } else if (key == "id" || key == "device") {
      if (!wire::valid_identifier(v)) throw ConfigError(n, key + ": not a valid identifier");
      (key == "id" ? p.cfg.patient_id : p.cfg.device_id) = std::string(v);
    } else if (key == "name") {
      if (!journal::valid_display_name(v)) throw ConfigError(n, "name: not a valid display name");
      p.cfg.display_name = std::string(v);
    } else if (key == "debounce") {
      th.debounce_ms = static_cast<std::uint32_t>(duration(v, n, key));
    } else {
      throw ConfigError(n, "unknown key '" + key + "' in [patient." + section_->index + "]");
    }
  }

  void anomaly_key(AnomalyDraft& a, const std::string& key, std::string_view v, int n) {
    if (key == "patient") {
      a.patient = std::string(v);
    } else if (key == "kind") {
      a.kind = sensor_kind_from_wire(v);
      if (!a.kind) throw ConfigError(n, "kind: expected HR, TEMP, BP, BLINK or MOTION");
    } else if (key == "shape") {
      if (v != "step" && v != "ramp" && v != "burst") {
        throw ConfigError(n, "shape: expected step, ramp or burst");
      }
      a.shape = std::string(v);
    } else if (key == "delta") {
      a.delta = real(v, n, key);
    } else if (key == "count") {
      a.count = integer<std::uint32_t>(v, n, key);
    } else if (key == "start") {
      a.start = duration(v, n, key);
    } else if (key == "length") {
      a.length = duration(v, n, key);
    } else if (key == "repeat") {
      a.repeat = integer<std::uint32_t>(v, n, key);
    } else if (key == "every") {
      a.every = duration(v, n, key);
    } else {
      throw ConfigError(n, "unknown key '" + key + "' in [anomaly." + section_->index + "]");
    }
  }

  void channel_key(ChannelModel& c, const std::string& key, std::string_view v, int n) {
    if (key == "loss") {
      c.loss_prob = real(v, n, key);
      if (!(c.loss_prob >= 0.0 && c.loss_prob <= 1.0)) {
        throw ConfigError(n, "loss: must be in [0, 1]");
      }
    } else if (key == "latency_mean") {
      c.latency_mean_ms = duration(v, n, key);
    } else if (key == "latency_jitter") {
      c.latency_jitter_ms = duration(v, n, key);
    } else if (key == "outage") {
      const auto sep = v.find("..");
      if (sep == std::string_view::npos) throw ConfigError(n, "outage: expected FROM..TO");
      const TimeMs from = duration(trim(v.substr(0, sep)), n, key);
      const TimeMs to = duration(trim(v.substr(sep + 2)), n, key);
      c.outages.push_back(Outage{from, to});
      outage_lines_[&c].push_back(n);
    } else {
      throw ConfigError(n, "unknown key '" + key + "' in [channel." + section_->index + "]");
    }
  }

  ScenarioConfig finish() {
    std::map<std::string, std::size_t> patient_index;
    for (const auto& idx : patient_order_) {
      auto& draft = patients_[idx];
      auto& p = draft.cfg;
      if (p.patient_id.empty()) p.patient_id = "p" + idx;
      if (p.device_id.empty()) p.device_id = "d" + idx;
      if (p.display_name.empty()) p.display_name = p.patient_id;
      try {
        p.thresholds.validate();
        p.profile.validate_against(p.thresholds);
      } catch (const Error& e) {
        throw ConfigError(draft.line, "[patient." + idx + "]: " + e.what());
      }
      patient_index[idx] = cfg_.patients.size();
      cfg_.patients.push_back(p);
    }
    for (const auto& idx : anomaly_order_) {
      const auto& d = anomalies_[idx];
      const std::string where = "[anomaly." + idx + "]: ";
      if (!d.patient) throw ConfigError(d.line, where + "missing key 'patient'");
      auto pit = patient_index.find(*d.patient);
      if (pit == patient_index.end()) {
        throw ConfigError(d.line, where + "refers to undefined [patient." + *d.patient + "]");
      }
      if (!d.kind) throw ConfigError(d.line, where + "missing key 'kind'");
      if (!d.length) throw ConfigError(d.line, where + "missing key 'length'");
      AnomalyConfig a;
      a.patient = pit->second;
      a.spec.kind = *d.kind;
      a.spec.start_ms = d.start;
      a.spec.duration_ms = *d.length;
      if (d.shape == "burst") {
        if (d.delta) throw ConfigError(d.line, where + "burst anomalies take 'count', not 'delta'");
        a.spec.shape = Burst{d.count.value_or(1)};
      } else {
        if (d.count) throw ConfigError(d.line, where + d.shape + " anomalies take 'delta'");
        if (!d.delta) throw ConfigError(d.line, where + "missing key 'delta'");
        if (d.shape == "step") {
          a.spec.shape = Step{*d.delta};
        } else {
          a.spec.shape = Ramp{*d.delta};
        }
      }
      a.repeat = d.repeat;
      a.every_ms = d.every;
      try {
        a.spec.validate();
      } catch (const Error& e) {
        throw ConfigError(d.line, where + e.what());
      }
      cfg_.anomalies.push_back(a);
    }
    for (ChannelModel* c : {&cfg_.wifi, &cfg_.internet, &cfg_.gsm}) {
      try {
        c->validate();
      } catch (const InvalidChannel& e) {
        const auto& lines = outage_lines_[c];
        throw ConfigError(lines.empty() ? 0 : lines.back(), e.what());
      }
    }
    cfg_.validate();
    return cfg_;
  }

  std::string_view text_;
  ScenarioConfig cfg_;
  std::optional<Section> section_;
  std::set<std::string> seen_sections_;
  std::set<std::string> assigned_;
  std::vector<std::string> patient_order_;
  std::vector<std::string> anomaly_order_;
  std::map<std::string, PatientDraft> patients_;
  std::map<std::string, AnomalyDraft> anomalies_;
  std::map<const ChannelModel*, std::vector<int>> outage_lines_;
};

}  // namespace

std::optional<TimeMs> parse_duration(std::string_view s) {
  s = trim(s);
  TimeMs scale = 1;
  if (s.ends_with("ms")) {
    s.remove_suffix(2);
  } else if (s.ends_with("s")) {
    scale = 1000;
    s.remove_suffix(1);
  } else if (s.ends_with("m")) {
    scale = 60'000;
    s.remove_suffix(1);
  } else if (s.ends_with("h")) {
    scale = 3'600'000;
    s.remove_suffix(1);
  }
  auto v = text::parse_int<TimeMs>(trim(s));
  if (!v || *v < 0 || *v > std::numeric_limits<TimeMs>::max() / scale) return std::nullopt;
  return *v * scale;
}

std::vector<AnomalySpec> AnomalyConfig::occurrences() const {
  std::vector<AnomalySpec> out;
  out.reserve(repeat);
  for (std::uint32_t i = 0; i < repeat; ++i) {
    AnomalySpec s = spec;
    s.start_ms = spec.start_ms + static_cast<TimeMs>(i) * every_ms;
    out.push_back(s);
  }
  return out;
}

void ScenarioConfig::validate() const {
  auto fail = [](const std::string& field, const std::string& why) {
    throw ConfigError(0, field + ": " + why);
  };
  if (duration_ms <= 0) fail("scenario.duration", "must be > 0");
  if (tick_period_ms <= 0) fail("scenario.tick_period", "must be > 0");
  if (sample_period_ms <= 0) fail("scenario.sample_period", "must be > 0");
  if (drain_ms < 0) fail("scenario.drain", "must be >= 0");
  if (escalation_retry_ms <= 0) fail("scenario.escalation_retry", "must be > 0");
  if (ack_timeout_ms <= 0) fail("retransmission.ack_timeout", "must be > 0");
  if (device.batch_size == 0) fail("retransmission.batch_size", "must be > 0");
  if (device.base_backoff_ms < 0) fail("retransmission.base_backoff", "must be >= 0");
  if (device.max_retries > 30) fail("retransmission.max_retries", "must be <= 30");
  if (patients.empty()) fail("patients", "at least one [patient.N] section is required");

  std::set<std::string> patient_ids;
  std::set<std::string> device_ids;
  for (const auto& p : patients) {
    if (!patient_ids.insert(p.patient_id).second) fail("patient.id", "duplicate '" + p.patient_id + "'");
    if (!device_ids.insert(p.device_id).second) fail("patient.device", "duplicate '" + p.device_id + "'");
  }
  for (const auto& a : anomalies) {
    if (a.patient >= patients.size()) fail("anomaly.patient", "refers to a missing patient");
    if (a.repeat == 0) fail("anomaly.repeat", "must be >= 1");
    if (a.repeat > 1 && a.every_ms < a.spec.duration_ms) {
      fail("anomaly.every", "repetitions must not overlap (every >= length)");
    }
    const auto occ = a.occurrences();
    if (occ.back().start_ms >= duration_ms) {
      fail("anomaly.start", "every occurrence must start within the scenario duration");
    }
  }
  for (const auto* c : {&wifi, &internet, &gsm}) {
    c->validate();
    for (const auto& o : c->outages) {
      if (o.from_ms < 0 || o.to_ms > duration_ms) {
        fail("channel." + std::string(to_string(c->kind)) + ".outage",
             "intervals must lie within the scenario duration");
      }
    }
  }
  if (wifi.kind != ChannelKind::WifiLink || internet.kind != ChannelKind::Internet ||
      gsm.kind != ChannelKind::GsmSms) {
    fail("channels", "channel kinds do not match their sections");
  }
}

ScenarioConfig parse_scenario(std::string_view text) { return Parser(text).run(); }

ScenarioConfig load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(0, "cannot read scenario file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

}  // namespace wardsim
