#include "wardsim/server/access.hpp"

#include <sodium.h>

#include <array>
#include <stdexcept>

#include "wardsim/server/wire.hpp"

namespace wardsim {

namespace {

void ensure_sodium() {
  static const bool ok = sodium_init() >= 0;
  if (!ok) throw std::runtime_error("libsodium initialisation failed");
}

std::string random_token() {
  std::array<unsigned char, 32> raw{};
  randombytes_buf(raw.data(), raw.size());
  std::array<char, 65> hex{};
  sodium_bin2hex(hex.data(), hex.size(), raw.data(), raw.size());
  return std::string(hex.data(), 64);
}

}  // namespace

std::string_view to_string(Role r) {
  switch (r) {
    case Role::Admin: return "ADMIN";
    case Role::Doctor: return "DOCTOR";
    case Role::Nurse: return "NURSE";
  }
  return "?";
}

std::optional<Role> role_from_string(std::string_view s) {
  if (s == "ADMIN") return Role::Admin;
  if (s == "DOCTOR") return Role::Doctor;
  if (s == "NURSE") return Role::Nurse;
  return std::nullopt;
}

bool authorize(Role role, Action action) {
  switch (role) {
    case Role::Admin:
      return true;
    case Role::Doctor:
      return action != Action::ManageUsers && action != Action::ManagePatients;
    case Role::Nurse:
      return action == Action::ReadPatients || action == Action::ReadVitals ||
             action == Action::ReadAlerts || action == Action::AcknowledgeAlert;
  }
  return false;
}

std::string hash_secret(std::string_view secret, const PasswordHashing& params) {
  ensure_sodium();
  std::array<char, crypto_pwhash_STRBYTES> out{};
  if (crypto_pwhash_str(out.data(), secret.data(), secret.size(), params.opslimit,
                        params.memlimit) != 0) {
    throw std::runtime_error("password hashing failed (out of memory?)");
  }
  return std::string(out.data());
}

bool verify_secret(std::string_view secret, const std::string& encoded_hash) {
  ensure_sodium();
  return crypto_pwhash_str_verify(encoded_hash.c_str(), secret.data(), secret.size()) == 0;
}

UserDirectory::UserDirectory(AuthPolicy policy)
    : policy_(policy), dummy_hash_(hash_secret("not-a-real-secret", policy_.hashing)) {}

UserAccount UserDirectory::create_user(std::string username, std::string_view secret, Role role) {
  if (!wire::valid_identifier(username)) throw std::invalid_argument("invalid username");
  if (id_by_username_.count(username) != 0) {
    throw std::invalid_argument("username already exists: " + username);
  }
  UserAccount account;
  account.user_id = "u" + std::to_string(next_user_);
  account.username = std::move(username);
  account.secret_hash = hash_secret(secret, policy_.hashing);
  account.role = role;
  restore_user(account);
  return account;
}

void UserDirectory::restore_user(UserAccount account) {
  if (account.user_id.size() > 1 && account.user_id[0] == 'u') {
    if (auto n = std::strtoull(account.user_id.c_str() + 1, nullptr, 10); n >= next_user_) {
      next_user_ = n + 1;
    }
  }
  id_by_username_[account.username] = account.user_id;
  by_id_[account.user_id] = std::move(account);
}

AuthResult UserDirectory::authenticate(std::string_view username, std::string_view secret,
                                       TimeMs now_ms) {
  auto& window = failures_[std::string(username)];
  if (now_ms < window.locked_until_ms) return AuthError{AuthError::Kind::Locked};

  const auto account = find_by_username(username);
  // Unknown users still pay for one verification so the two failure modes
  // take the same time.
  bool ok = false;
  if (account) {
    ok = verify_secret(secret, account->secret_hash);
  } else {
    (void)verify_secret(secret, dummy_hash_);
  }
  if (!ok) {
    if (window.consecutive == 0 || now_ms - window.window_start_ms > policy_.lockout_window_ms) {
      window.consecutive = 0;
      window.window_start_ms = now_ms;
    }
    if (++window.consecutive >= policy_.lockout_failures) {
      window.locked_until_ms = now_ms + policy_.lockout_window_ms;
      window.consecutive = 0;
    }
    return AuthError{AuthError::Kind::BadCredentials};
  }

  failures_.erase(std::string(username));
  Session s;
  s.user_id = account->user_id;
  s.role = account->role;
  s.token = random_token();
  s.expires_at_ms = now_ms + policy_.session_ttl_ms;
  sessions_[s.token] = s;
  return s;
}

std::optional<Session> UserDirectory::session(std::string_view token, TimeMs now_ms) const {
  auto it = sessions_.find(std::string(token));
  if (it == sessions_.end() || now_ms >= it->second.expires_at_ms) return std::nullopt;
  return it->second;
}

void UserDirectory::revoke(std::string_view token) { sessions_.erase(std::string(token)); }

std::optional<UserAccount> UserDirectory::find_by_username(std::string_view username) const {
  auto it = id_by_username_.find(username);
  if (it == id_by_username_.end()) return std::nullopt;
  return find_by_id(it->second);
}

std::optional<UserAccount> UserDirectory::find_by_id(std::string_view user_id) const {
  auto it = by_id_.find(user_id);
  if (it == by_id_.end()) return std::nullopt;
  return it->second;
}

std::vector<UserAccount> UserDirectory::users() const {
  std::vector<UserAccount> out;
  out.reserve(by_id_.size());
  for (const auto& [id, u] : by_id_) out.push_back(u);
  return out;
}

}  // namespace wardsim
