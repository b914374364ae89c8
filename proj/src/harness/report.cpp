#include "wardsim/harness/report.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "wardsim/core/text.hpp"

namespace wardsim {

namespace {

// One column per field; `opt` fields hold optional<double>.
struct Column {
  std::string_view name;
  std::uint64_t MetricsReport::*count = nullptr;
  std::optional<double> MetricsReport::*opt = nullptr;
};

const std::vector<Column>& columns() {
  using R = MetricsReport;
  static const std::vector<Column> cols = {
      {"seed", &R::seed, nullptr},
      {"simulated_ms", nullptr, nullptr},
      {"raw_delivery_rate", nullptr, &R::raw_delivery_rate},
      {"eventual_delivery_rate", nullptr, &R::eventual_delivery_rate},
      {"samples_emitted", &R::samples_emitted, nullptr},
      {"samples_stored", &R::samples_stored, nullptr},
      {"samples_dead_lettered", &R::samples_dead_lettered, nullptr},
      {"samples_in_flight", &R::samples_in_flight, nullptr},
      {"seq_gaps", &R::seq_gaps, nullptr},
      {"duplicates", &R::duplicates, nullptr},
      {"rejected", &R::rejected, nullptr},
      {"dropped_readings", &R::dropped_readings, nullptr},
      {"wifi_sent", &R::wifi_sent, nullptr},
      {"wifi_delivered", &R::wifi_delivered, nullptr},
      {"wifi_lost", &R::wifi_lost, nullptr},
      {"wifi_down", &R::wifi_down, nullptr},
      {"alerts_raised", &R::alerts_raised, nullptr},
      {"alerts_stored", &R::alerts_stored, nullptr},
      {"alerts_delivered", &R::alerts_delivered, nullptr},
      {"alerts_acknowledged", &R::alerts_acknowledged, nullptr},
      {"alerts_pending", &R::alerts_pending, nullptr},
      {"led_latency_max_ms", nullptr, &R::led_latency_max_ms},
      {"sms_latency_mean_ms", nullptr, &R::sms_latency_mean_ms},
      {"sms_latency_p95_ms", nullptr, &R::sms_latency_p95_ms},
      {"e2e_latency_mean_ms", nullptr, &R::e2e_latency_mean_ms},
      {"e2e_latency_p95_ms", nullptr, &R::e2e_latency_p95_ms},
      {"max_outbox_backlog", &R::max_outbox_backlog, nullptr},
      {"cloud_samples_stored", &R::cloud_samples_stored, nullptr},
  };
  return cols;
}

std::string cell(const MetricsReport& r, const Column& c) {
  if (c.count) return std::to_string(r.*c.count);
  if (c.opt) return r.*c.opt ? text::format_double(*(r.*c.opt)) : std::string("n/a");
  return std::to_string(r.simulated_ms);
}

}  // namespace

std::string render_text(const MetricsReport& r) {
  std::string out = "wardsim scenario report\n";
  std::size_t width = 0;
  for (const auto& c : columns()) width = std::max(width, c.name.size());
  for (const auto& c : columns()) {
    out += c.name;
    out.append(width - c.name.size() + 2, ' ');
    out += cell(r, c);
    out += '\n';
  }
  return out;
}

std::string csv_header() {
  std::string out;
  for (const auto& c : columns()) {
    if (!out.empty()) out += ',';
    out += c.name;
  }
  return out;
}

std::string render_csv_row(const MetricsReport& r) {
  std::string out;
  bool first = true;
  for (const auto& c : columns()) {
    if (!first) out += ',';
    first = false;
    out += cell(r, c);
  }
  return out;
}

std::string render_csv(const MetricsReport& r) {
  return csv_header() + "\n" + render_csv_row(r) + "\n";
}

std::optional<MetricsReport> parse_csv_row(std::string_view row) {
  while (!row.empty() && (row.back() == '\n' || row.back() == '\r')) row.remove_suffix(1);
  const auto fields = text::split(row, ',');
  const auto& cols = columns();
  if (fields.size() != cols.size()) return std::nullopt;
  MetricsReport r;
  for (std::size_t i = 0; i < cols.size(); ++i) {
    const auto& c = cols[i];
    const auto f = fields[i];
    if (c.count) {
      auto v = text::parse_int<std::uint64_t>(f);
      if (!v) return std::nullopt;
      r.*c.count = *v;
    } else if (c.opt) {
      if (f == "n/a") {
        r.*c.opt = std::nullopt;
      } else {
        auto v = text::parse_double(f);
        if (!v) return std::nullopt;
        r.*c.opt = *v;
      }
    } else {
      auto v = text::parse_int<TimeMs>(f);
      if (!v) return std::nullopt;
      r.simulated_ms = *v;
    }
  }
  return r;
}

std::optional<double> mean_of(const std::vector<double>& xs) {
  if (xs.empty()) return std::nullopt;
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

std::optional<double> percentile_of(std::vector<double> xs, double p) {
  if (xs.empty()) return std::nullopt;
  std::sort(xs.begin(), xs.end());
  const double rank = std::ceil(p / 100.0 * static_cast<double>(xs.size()));
  const auto idx = static_cast<std::size_t>(std::clamp(rank, 1.0, static_cast<double>(xs.size())));
  return xs[idx - 1];
}

}  // namespace wardsim
