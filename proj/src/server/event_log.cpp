#include "wardsim/server/event_log.hpp"

#include <stdexcept>
#include <fcntl.h>
#include <unistd.h>
#include <zlib.h>

#include <cerrno>
#include <cstring>
#include <fstream>
#include <iterator>
#include <system_error>
#include <utility>

#include "wardsim/core/errors.hpp"

namespace wardsim {

namespace {

void put_le(std::string& out, std::uint64_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint64_t get_le(std::span<const std::byte> in, std::size_t at, int bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) {
    v |= static_cast<std::uint64_t>(std::to_integer<std::uint8_t>(in[at + i])) << (8 * i);
  }
  return v;
}

void write_all(int fd, const std::string& data) {
  const char* p = data.data();
  std::size_t left = data.size();
  while (left > 0) {
    const ssize_t n = ::write(fd, p, left);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw std::system_error(errno, std::generic_category(), "event log write");
    }
    p += n;
    left -= static_cast<std::size_t>(n);
  }
}

}  // namespace

std::uint32_t crc32_ieee(std::span<const std::byte> data, std::uint32_t crc) {
  return static_cast<std::uint32_t>(
      ::crc32(crc, reinterpret_cast<const Bytef*>(data.data()), static_cast<uInt>(data.size())));
}

std::uint32_t crc32_ieee(std::string_view data) {
  return crc32_ieee(std::as_bytes(std::span(data.data(), data.size())));
}

namespace event_log {

namespace {

bool intact_at(std::span<const std::byte> bytes, std::size_t pos) {
  if (bytes.size() - pos < kHeaderSize) return false;
  const auto length = static_cast<std::uint32_t>(get_le(bytes, pos, 4));
  if (length > kMaxPayload || kHeaderSize + length > bytes.size() - pos) return false;
  std::uint32_t crc = crc32_ieee(bytes.subspan(pos, 4));
  crc = crc32_ieee(bytes.subspan(pos + 8, 8 + length), crc);
  return crc == static_cast<std::uint32_t>(get_le(bytes, pos + 4, 4));
}

// A failed record is only a torn tail if nothing intact follows it; a
// corrupted length field could otherwise masquerade as truncation.
bool intact_record_follows(std::span<const std::byte> bytes, std::size_t pos) {
  for (std::size_t at = pos + 1; at + kHeaderSize <= bytes.size(); ++at) {
    if (intact_at(bytes, at)) return true;
  }
  return false;
}

}  // namespace

std::string encode(const LogEntry& e) {
  if (e.payload.size() > kMaxPayload) throw std::invalid_argument("log payload too large");
  std::string out;
  out.reserve(kHeaderSize + e.payload.size());
  put_le(out, e.payload.size(), 4);
  put_le(out, 0, 4);  // crc placeholder
  put_le(out, static_cast<std::uint64_t>(e.recv_at_ms), 8);
  out += e.payload;
  std::string covered = out.substr(0, 4) + out.substr(8);
  std::string crc;
  put_le(crc, crc32_ieee(covered), 4);
  out.replace(4, 4, crc);
  return out;
}

LogScan decode(std::span<const std::byte> bytes) {
  LogScan scan;
  std::size_t pos = 0;
  const std::size_t size = bytes.size();
  while (pos < size) {
    const std::size_t remaining = size - pos;
    if (remaining < kHeaderSize) {
      scan.torn_tail = true;
      break;
    }
    const auto length = static_cast<std::uint32_t>(get_le(bytes, pos, 4));
    if (length > kMaxPayload) throw CorruptLog(pos, "length field exceeds maximum");
    const std::size_t extent = kHeaderSize + length;
    const auto stored_crc = static_cast<std::uint32_t>(get_le(bytes, pos + 4, 4));
    const bool reaches_eof = extent >= remaining;
    if (extent > remaining) {
      if (intact_record_follows(bytes, pos)) throw CorruptLog(pos, "length field overruns data");
      scan.torn_tail = true;
      break;
    }
    std::uint32_t crc = crc32_ieee(bytes.subspan(pos, 4));
    crc = crc32_ieee(bytes.subspan(pos + 8, 8 + length), crc);
    if (crc != stored_crc) {
      if (reaches_eof && !intact_record_follows(bytes, pos)) {
        scan.torn_tail = true;
        break;
      }
      throw CorruptLog(pos, "checksum mismatch");
    }
    LogEntry e;
    e.recv_at_ms = static_cast<TimeMs>(get_le(bytes, pos + 8, 8));
    const auto* payload = reinterpret_cast<const char*>(bytes.data() + pos + kHeaderSize);
    e.payload.assign(payload, length);
    scan.offsets.push_back(pos);
    scan.entries.push_back(std::move(e));
    pos += extent;
  }
  scan.valid_bytes = scan.offsets.empty()
                         ? 0
                         : scan.offsets.back() + kHeaderSize + scan.entries.back().payload.size();
  return scan;
}

LogScan decode(std::string_view bytes) {
  return decode(std::as_bytes(std::span(bytes.data(), bytes.size())));
}

LogScan read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return {};
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode(std::string_view(data));
}

}  // namespace event_log

LogWriter::LogWriter(const std::filesystem::path& path, std::uint64_t valid_bytes, bool durable)
    : durable_(durable) {
  fd_ = ::open(path.c_str(), O_WRONLY | O_CREAT | O_CLOEXEC, 0644);
  if (fd_ < 0) throw std::system_error(errno, std::generic_category(), "open " + path.string());
  if (::ftruncate(fd_, static_cast<off_t>(valid_bytes)) != 0 ||
      ::lseek(fd_, 0, SEEK_END) < 0) {
    const int err = errno;
    close();
    throw std::system_error(err, std::generic_category(), "truncate " + path.string());
  }
}

LogWriter::~LogWriter() { close(); }

LogWriter::LogWriter(LogWriter&& other) noexcept
    : fd_(std::exchange(other.fd_, -1)), durable_(other.durable_) {}

LogWriter& LogWriter::operator=(LogWriter&& other) noexcept {
  if (this != &other) {
    close();
    fd_ = std::exchange(other.fd_, -1);
    durable_ = other.durable_;
  }
  return *this;
}

void LogWriter::append(const LogEntry& e) {
  if (fd_ < 0) return;
  write_all(fd_, event_log::encode(e));
  if (durable_) ::fdatasync(fd_);
}

void LogWriter::close() {
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
}

void rewrite_log(const std::filesystem::path& path, std::span<const LogEntry> entries) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    for (const auto& e : entries) out << event_log::encode(e);
    if (!out) throw std::runtime_error("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace wardsim
