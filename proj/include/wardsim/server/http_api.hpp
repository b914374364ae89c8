#pragma once

// JSON-over-HTTP front end for Server.
//
//   POST /api/login                       {"username","password"} -> session
//   GET  /api/patients
//   GET  /api/patients/{id}/vitals?from=&to=&kinds=HR,BP
//   GET  /api/alerts?since=
//   POST /api/alerts/{id}/ack
//   GET  /api/health                      (no session needed)
//   POST /api/ingest                      wire lines in, ACK|... / NAK|... out
//   POST /api/users                       admin: {"username","password","role"}
//   POST /api/patients                    admin: patient record
//   PUT  /api/patients/{id}/thresholds    admin, doctor
//
// Every other endpoint takes "Authorization: Bearer <token>". Errors come
// back as {"error": "..."} with 400/401/403/404/423.

#include <functional>
#include <memory>
#include <string>

#include "wardsim/server/server.hpp"

namespace wardsim {

using Clock = std::function<TimeMs()>;

// Milliseconds since the Unix epoch.
TimeMs wall_clock_ms();

class HttpApi {
 public:
  explicit HttpApi(Server& server, Clock clock = wall_clock_ms);
  ~HttpApi();
  HttpApi(const HttpApi&) = delete;
  HttpApi& operator=(const HttpApi&) = delete;

  // Binds (port 0 picks a free one) and returns the bound port, or -1.
  int bind(const std::string& host, int port);
  // Serves until stop(); call after bind().
  bool listen();
  // bind() + listen() on a background thread; returns the bound port or -1.
  int start(const std::string& host = "127.0.0.1", int port = 0);
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace wardsim
