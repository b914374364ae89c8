#include "wardsim/server/store.hpp"

#include <algorithm>
#include <stdexcept>

#include "wardsim/core/errors.hpp"

namespace wardsim {

bool SeqTracker::contains(Seq seq) const {
  if (empty_) return false;
  if (seq >= low_ && seq <= high_) return true;
  return sparse_.count(seq) != 0;
}

bool SeqTracker::insert(Seq seq) {
  if (empty_) {
    empty_ = false;
    low_ = high_ = seq;
    return true;
  }
  if (contains(seq)) return false;
  if (high_ != UINT64_MAX && seq == high_ + 1) {
    high_ = seq;
    while (high_ != UINT64_MAX && sparse_.erase(high_ + 1) == 1) ++high_;
  } else if (low_ != 0 && seq == low_ - 1) {
    low_ = seq;
    while (low_ != 0 && sparse_.erase(low_ - 1) == 1) --low_;
  } else {
    sparse_.insert(seq);
  }
  return true;
}

std::size_t SeqTracker::count() const {
  if (empty_) return 0;
  return static_cast<std::size_t>(high_ - low_ + 1) + sparse_.size();
}

std::optional<Seq> SeqTracker::max_seen() const {
  if (empty_) return std::nullopt;
  if (!sparse_.empty()) return std::max(high_, *sparse_.rbegin());
  return high_;
}

std::optional<Seq> SeqTracker::contiguous_high() const {
  if (empty_) return std::nullopt;
  if (sparse_.empty() || *sparse_.begin() > low_) return high_;
  auto it = sparse_.begin();
  Seq h = *it;
  for (++it; it != sparse_.end() && *it == h + 1; ++it) ++h;
  return h;
}

std::uint64_t SeqTracker::gaps() const {
  if (empty_) return 0;
  Seq lo = low_;
  Seq hi = high_;
  if (!sparse_.empty()) {
    lo = std::min(lo, *sparse_.begin());
    hi = std::max(hi, *sparse_.rbegin());
  }
  return (hi - lo + 1) - count();
}

void PatientRegistry::upsert(PatientRecord record) {
  auto owner = device_to_patient_.find(record.assigned_device_id);
  if (owner != device_to_patient_.end() && owner->second != record.patient_id) {
    throw std::invalid_argument("device " + record.assigned_device_id +
                                " is already assigned to patient " + owner->second);
  }
  record.thresholds.validate();
  auto existing = patients_.find(record.patient_id);
  if (existing != patients_.end()) device_to_patient_.erase(existing->second.assigned_device_id);
  device_to_patient_[record.assigned_device_id] = record.patient_id;
  patients_[record.patient_id] = std::move(record);
}

void PatientRegistry::set_thresholds(const std::string& patient_id, const Thresholds& th) {
  auto it = patients_.find(patient_id);
  if (it == patients_.end()) throw UnknownPatient(patient_id);
  th.validate();
  it->second.thresholds = th;
}

const PatientRecord* PatientRegistry::find(const std::string& patient_id) const {
  auto it = patients_.find(patient_id);
  return it == patients_.end() ? nullptr : &it->second;
}

std::optional<std::string> PatientRegistry::patient_for_device(
    const std::string& device_id) const {
  auto it = device_to_patient_.find(device_id);
  if (it == device_to_patient_.end()) return std::nullopt;
  return it->second;
}

std::vector<PatientRecord> PatientRegistry::list() const {
  std::vector<PatientRecord> out;
  out.reserve(patients_.size());
  for (const auto& [id, p] : patients_) out.push_back(p);
  return out;
}

bool TelemetryStore::seen(const std::string& device_id, Seq seq) const {
  auto it = trackers_.find(device_id);
  return it != trackers_.end() && it->second.contains(seq);
}

bool TelemetryStore::mark(const std::string& device_id, Seq seq) {
  return trackers_[device_id].insert(seq);
}

void TelemetryStore::add_sample(VitalSample sample) {
  sample_seqs_[sample.device_id][index_of(sample.kind)].insert(sample.seq);
  Key key{sample.t_ms, sample.seq, sample.device_id};
  auto& series = by_patient_[sample.patient_id];
  if (series.emplace(std::move(key), std::move(sample)).second) ++sample_count_;
}

std::vector<VitalSample> TelemetryStore::query(const std::string& patient_id, TimeMs from_ms,
                                               TimeMs to_ms,
                                               const std::vector<SensorKind>& kinds) const {
  std::vector<VitalSample> out;
  auto it = by_patient_.find(patient_id);
  if (it == by_patient_.end() || from_ms > to_ms) return out;
  const auto& series = it->second;
  auto lo = series.lower_bound(Key{from_ms, 0, std::string()});
  for (; lo != series.end() && std::get<0>(lo->first) <= to_ms; ++lo) {
    const auto& s = lo->second;
    if (!kinds.empty() && std::find(kinds.begin(), kinds.end(), s.kind) == kinds.end()) continue;
    out.push_back(s);
  }
  return out;
}

std::optional<Seq> TelemetryStore::latest_sample_before(const std::string& device_id,
                                                        SensorKind kind, Seq before) const {
  auto it = sample_seqs_.find(device_id);
  if (it == sample_seqs_.end()) return std::nullopt;
  const auto& seqs = it->second[index_of(kind)];
  auto pos = seqs.lower_bound(before);
  if (pos == seqs.begin()) return std::nullopt;
  return *std::prev(pos);
}

std::uint64_t TelemetryStore::seq_gaps() const {
  std::uint64_t total = 0;
  for (const auto& [id, t] : trackers_) total += t.gaps();
  return total;
}

const SeqTracker* TelemetryStore::tracker(const std::string& device_id) const {
  auto it = trackers_.find(device_id);
  return it == trackers_.end() ? nullptr : &it->second;
}

}  // namespace wardsim
