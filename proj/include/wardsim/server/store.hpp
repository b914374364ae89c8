#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "wardsim/core/types.hpp"

namespace wardsim {

// Dedup index for one device: a contiguous run [low, high] plus the sparse
// set of seqs seen outside it.
class SeqTracker {
 public:
  // Returns false if seq was already recorded.
  bool insert(Seq seq);
  bool contains(Seq seq) const;

  std::size_t count() const;
  // Holes between the smallest and largest seq seen.
  std::uint64_t gaps() const;
  std::optional<Seq> max_seen() const;
  // Highest seq h such that every seq in [smallest seen, h] was recorded.
  std::optional<Seq> contiguous_high() const;

 private:
  bool empty_ = true;
  Seq low_ = 0;
  Seq high_ = 0;
  std::set<Seq> sparse_;
};

struct PatientRecord {
  std::string patient_id;
  std::string display_name;
  std::string assigned_device_id;
  Thresholds thresholds;
  friend bool operator==(const PatientRecord&, const PatientRecord&) = default;
};

// Patients with a 1:1 device assignment.
class PatientRegistry {
 public:
  // Re-registering a patient reassigns its device. Throws
  // std::invalid_argument when the device already belongs to someone else.
  void upsert(PatientRecord record);
  void set_thresholds(const std::string& patient_id, const Thresholds& th);

  const PatientRecord* find(const std::string& patient_id) const;
  std::optional<std::string> patient_for_device(const std::string& device_id) const;
  std::vector<PatientRecord> list() const;
  std::size_t size() const { return patients_.size(); }

 private:
  std::map<std::string, PatientRecord> patients_;
  std::unordered_map<std::string, std::string> device_to_patient_;
};

// Exactly-once sample storage, queryable per patient by (t_ms, seq).
class TelemetryStore {
 public:
  bool seen(const std::string& device_id, Seq seq) const;
  // Marks (device, seq) as applied; false if it already was.
  bool mark(const std::string& device_id, Seq seq);
  void add_sample(VitalSample sample);

  std::vector<VitalSample> query(const std::string& patient_id, TimeMs from_ms, TimeMs to_ms,
                                 const std::vector<SensorKind>& kinds) const;

  // Largest stored sample seq of `kind` from `device` strictly below `before`.
  std::optional<Seq> latest_sample_before(const std::string& device_id, SensorKind kind,
                                          Seq before) const;

  std::size_t sample_count() const { return sample_count_; }
  std::uint64_t seq_gaps() const;
  const SeqTracker* tracker(const std::string& device_id) const;

 private:
  using Key = std::tuple<TimeMs, Seq, std::string>;  // (t_ms, seq, device_id)

  std::unordered_map<std::string, SeqTracker> trackers_;
  std::unordered_map<std::string, std::map<Key, VitalSample>> by_patient_;
  std::unordered_map<std::string, std::array<std::set<Seq>, 5>> sample_seqs_;
  std::size_t sample_count_ = 0;
};

}  // namespace wardsim
