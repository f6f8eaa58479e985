#pragma once

#include <chrono>
#include <memory>
#include <optional>
#include <set>
#include <string>

#include "sms/core/model.hpp"
#include "sms/storage/records.hpp"
#include "sms/storage/store.hpp"

namespace sms::api {

enum class PrincipalKind { anonymous, user, service };

std::string_view to_string(PrincipalKind k);

struct Principal {
  PrincipalKind kind = PrincipalKind::anonymous;
  std::optional<AccountId> account;
  std::set<GroupId> groups;
  std::set<storage::Role> roles;

  bool authenticated() const { return kind != PrincipalKind::anonymous; }
  bool has_role(storage::Role r) const { return roles.count(r) > 0; }
  bool is_admin() const { return has_role(storage::Role::admin); }
  bool is_curator() const { return has_role(storage::Role::curator) || is_admin(); }
  bool in_group(const GroupId& g) const { return groups.count(g) > 0; }

  static Principal anonymous() { return {}; }
  static Principal of(PrincipalKind kind, const storage::Account& a);
};

enum class Action { read, create, update, remove, curate };

// Read: public to anyone, internal to any authenticated principal, private to
// the owner group (and admins). Contacts are readable once authenticated.
// Update/delete: owner group members and admins; a contact linked to an
// account only by that account; other contacts by anyone authenticated.
bool authorize(const Principal& p, Action action, const Entity* entity);

// "pbkdf2-sha256$<iterations>$<salt hex>$<digest hex>"
std::string hash_password(std::string_view password, int iterations = 60000);
bool verify_password(std::string_view password, std::string_view encoded);

struct TokenClaims {
  AccountId subject;
  TimeInstant issued_at;
  TimeInstant expires_at;
};

// Pluggable bearer-token check. Throws Error(unauthorized) for malformed,
// forged or expired tokens.
class TokenVerifier {
 public:
  virtual ~TokenVerifier() = default;
  virtual TokenClaims verify(std::string_view token, TimeInstant now) const = 0;
};

// HS256 JSON Web Tokens signed with a shared secret.
class LocalTokenIssuer : public TokenVerifier {
 public:
  LocalTokenIssuer(std::string secret, std::string issuer = "sms", std::chrono::seconds ttl = std::chrono::hours(8));

  std::string issue(const AccountId& subject, TimeInstant now = TimeInstant::now()) const;
  TokenClaims verify(std::string_view token, TimeInstant now) const override;
  std::chrono::seconds ttl() const { return ttl_; }

 private:
  std::string sign(std::string_view data) const;

  std::string secret_;
  std::string issuer_;
  std::chrono::seconds ttl_;
};

std::string base64url(std::string_view bytes);
std::optional<std::string> base64url_decode(std::string_view text);
std::string random_hex(std::size_t bytes);

// The secret is returned once as "<key_id>.<secret>"; only its hash is kept.
struct IssuedKey {
  storage::ApiKey key;
  std::string token;
};
IssuedKey issue_api_key(storage::Store& store, const AccountId& account, std::string label,
                        TimeInstant now = TimeInstant::now());

// Resolves X-APIKEY / Authorization header values to a principal. Absent
// credentials give the anonymous principal; anything present but invalid
// raises Error(unauthorized).
class Authenticator {
 public:
  Authenticator(const storage::Store& store, std::shared_ptr<const TokenVerifier> verifier);

  Principal authenticate(const std::optional<std::string>& api_key, const std::optional<std::string>& authorization,
                         TimeInstant now = TimeInstant::now()) const;
  // Password login; throws Error(unauthorized).
  storage::Account login(std::string_view username, std::string_view password) const;

 private:
  const storage::Store& store_;
  std::shared_ptr<const TokenVerifier> verifier_;
};

}  // namespace sms::api
