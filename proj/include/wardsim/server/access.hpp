#pragma once

// Users, sessions and the role matrix.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include "wardsim/core/types.hpp"

namespace wardsim {

enum class Role : std::uint8_t { Admin, Doctor, Nurse };

std::string_view to_string(Role r);  // ADMIN | DOCTOR | NURSE
std::optional<Role> role_from_string(std::string_view s);

enum class Action : std::uint8_t {
  ReadPatients,
  ReadVitals,
  ReadAlerts,
  AcknowledgeAlert,
  EditThresholds,
  ManageUsers,
  ManagePatients,
};

// Admin: everything. Doctor: read, acknowledge, edit thresholds.
// Nurse: read, acknowledge.
bool authorize(Role role, Action action);

struct UserAccount {
  std::string user_id;
  std::string username;
  std::string secret_hash;  // Argon2id encoded string (salt + params inside)
  Role role = Role::Nurse;
  friend bool operator==(const UserAccount&, const UserAccount&) = default;
};

struct Session {
  std::string user_id;
  Role role = Role::Nurse;
  std::string token;
  TimeMs expires_at_ms = 0;
};

struct AuthError {
  enum class Kind { BadCredentials, Locked } kind = Kind::BadCredentials;
};

using AuthResult = std::variant<Session, AuthError>;

struct PasswordHashing {
  // crypto_pwhash (Argon2id) limits. Defaults follow the OWASP baseline of
  // t=2, m=19 MiB; tests use the library minimums.
  unsigned long long opslimit = 2;
  std::size_t memlimit = 19u * 1024u * 1024u;

  static PasswordHashing fast_for_tests() { return {1, 8192}; }
};

struct AuthPolicy {
  PasswordHashing hashing;
  TimeMs session_ttl_ms = 8LL * 3600 * 1000;
  int lockout_failures = 5;
  TimeMs lockout_window_ms = 15LL * 60 * 1000;
};

std::string hash_secret(std::string_view secret, const PasswordHashing& params);
bool verify_secret(std::string_view secret, const std::string& encoded_hash);

class UserDirectory {
 public:
  explicit UserDirectory(AuthPolicy policy = {});

  // Throws std::invalid_argument on a duplicate or malformed username.
  UserAccount create_user(std::string username, std::string_view secret, Role role);
  // Restores an account whose hash was already computed (log replay).
  void restore_user(UserAccount account);

  AuthResult authenticate(std::string_view username, std::string_view secret, TimeMs now_ms);
  std::optional<Session> session(std::string_view token, TimeMs now_ms) const;
  void revoke(std::string_view token);

  std::optional<UserAccount> find_by_username(std::string_view username) const;
  std::optional<UserAccount> find_by_id(std::string_view user_id) const;
  std::vector<UserAccount> users() const;
  std::size_t size() const { return by_id_.size(); }
  const AuthPolicy& policy() const { return policy_; }

 private:
  struct FailureWindow {
    int consecutive = 0;
    TimeMs window_start_ms = 0;
    TimeMs locked_until_ms = 0;
  };

  AuthPolicy policy_;
  std::string dummy_hash_;
  std::map<std::string, UserAccount, std::less<>> by_id_;
  std::map<std::string, std::string, std::less<>> id_by_username_;
  std::map<std::string, FailureWindow, std::less<>> failures_;
  std::unordered_map<std::string, Session> sessions_;
  std::uint64_t next_user_ = 1;
};

}  // namespace wardsim
