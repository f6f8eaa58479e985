#pragma once

#include <set>
#include <string>

#include <nlohmann/json.hpp>

#include "sms/core/ids.hpp"
#include "sms/core/time.hpp"

// Non-entity records persisted next to the entities: local accounts, api
// keys, groups and minted PIDs.
namespace sms::storage {

enum class Role { member, curator, admin };

std::string_view to_string(Role r);
std::optional<Role> role_from_string(std::string_view s);

struct Group {
  GroupId id;
  std::string display_name;

  friend bool operator==(const Group&, const Group&) = default;
};

struct Account {
  AccountId id;
  std::string username;
  std::string given_name;
  std::string family_name;
  std::string email;
  std::string organization;
  std::string password_hash;  // empty = no password login
  std::set<GroupId> groups;
  std::set<Role> roles;
  bool disabled = false;
  TimeInstant created_at;

  friend bool operator==(const Account&, const Account&) = default;
};

// The secret itself is never stored; `secret_hash` is a SHA-256 hex digest.
struct ApiKey {
  std::string key_id;
  std::string secret_hash;
  AccountId account;
  std::string label;
  TimeInstant created_at;
  bool revoked = false;

  friend bool operator==(const ApiKey&, const ApiKey&) = default;
};

struct PidRecord {
  EntityRef entity;
  std::string handle;
  std::string target_url;
  nlohmann::json schema_payload;
  TimeInstant minted_at;
  TimeInstant last_synced_at;
  bool stale = false;

  friend bool operator==(const PidRecord&, const PidRecord&) = default;
};

nlohmann::json encode(const Group& g);
nlohmann::json encode(const Account& a);
nlohmann::json encode(const ApiKey& k);
nlohmann::json encode(const PidRecord& p);
Group decode_group(const nlohmann::json& j);
Account decode_account(const nlohmann::json& j);
ApiKey decode_api_key(const nlohmann::json& j);
PidRecord decode_pid(const nlohmann::json& j);

}  // namespace sms::storage
