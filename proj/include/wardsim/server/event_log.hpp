#pragma once

// Append-only event log file.
//
// Entry layout, little-endian, entries concatenated:
//   u32 length | u32 crc | u64 recv_at_ms | payload[length]
// crc is CRC-32 (IEEE, reflected, init/xorout 0xFFFFFFFF) over the length
// bytes, the recv_at_ms bytes and the payload.
//
// A record that fails its check and reaches end-of-file is a torn tail and is
// dropped; any other failure is CorruptLog.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "wardsim/core/types.hpp"

namespace wardsim {

std::uint32_t crc32_ieee(std::span<const std::byte> data, std::uint32_t crc = 0);
std::uint32_t crc32_ieee(std::string_view data);

struct LogEntry {
  TimeMs recv_at_ms = 0;
  std::string payload;
  friend bool operator==(const LogEntry&, const LogEntry&) = default;
};

struct LogScan {
  std::vector<LogEntry> entries;
  std::vector<std::uint64_t> offsets;  // start offset of each entry
  std::uint64_t valid_bytes = 0;       // length of the intact prefix
  bool torn_tail = false;
};

namespace event_log {

inline constexpr std::size_t kHeaderSize = 16;
inline constexpr std::uint32_t kMaxPayload = 4096;

std::string encode(const LogEntry& e);
LogScan decode(std::span<const std::byte> bytes);
LogScan decode(std::string_view bytes);
LogScan read_file(const std::filesystem::path& path);

}  // namespace event_log

// Owns an append handle. Opening truncates a torn tail so later appends are
// never stranded behind garbage.
class LogWriter {
 public:
  LogWriter() = default;
  LogWriter(const std::filesystem::path& path, std::uint64_t valid_bytes, bool durable);
  ~LogWriter();
  LogWriter(LogWriter&& other) noexcept;
  LogWriter& operator=(LogWriter&& other) noexcept;
  LogWriter(const LogWriter&) = delete;
  LogWriter& operator=(const LogWriter&) = delete;

  bool is_open() const { return fd_ >= 0; }
  void append(const LogEntry& e);
  void close();

 private:
  int fd_ = -1;
  bool durable_ = false;
};

// Rewrites `path` to contain exactly `entries` (write-temp-then-rename).
void rewrite_log(const std::filesystem::path& path, std::span<const LogEntry> entries);

}  // namespace wardsim
