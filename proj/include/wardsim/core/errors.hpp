#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace wardsim {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NoReading : public Error {
 public:
  NoReading() : Error("fewer than two pulses in window") {}
};

class KindMismatch : public Error {
 public:
  using Error::Error;
};

class InvalidThresholds : public Error {
 public:
  using Error::Error;
};

class InvalidProfile : public Error {
 public:
  using Error::Error;
};

class ShapeMismatch : public Error {
 public:
  using Error::Error;
};

class InvalidAnomaly : public Error {
 public:
  using Error::Error;
};

class InvalidChannel : public Error {
 public:
  using Error::Error;
};

class CorruptLog : public Error {
 public:
  CorruptLog(std::uint64_t offset, const std::string& why)
      : Error("corrupt log record at offset " + std::to_string(offset) + ": " + why),
        offset_(offset) {}
  std::uint64_t offset() const { return offset_; }

 private:
  std::uint64_t offset_;
};

class UnknownPatient : public Error {
 public:
  explicit UnknownPatient(const std::string& id) : Error("unknown patient: " + id) {}
};

class UnknownAlert : public Error {
 public:
  explicit UnknownAlert(const std::string& id) : Error("unknown alert: " + id) {}
};

class Forbidden : public Error {
 public:
  Forbidden() : Error("forbidden") {}
};

class Unauthenticated : public Error {
 public:
  Unauthenticated() : Error("invalid or expired session") {}
};

class ConfigError : public Error {
 public:
  ConfigError(int line, const std::string& what)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

class InvariantViolation : public Error {
 public:
  using Error::Error;
};

}  // namespace wardsim
