#include "sms/storage/records.hpp"

#include "sms/core/errors.hpp"

namespace sms::storage {

using nlohmann::json;

std::string_view to_string(Role r) {
  switch (r) {
    case Role::member: return "member";
    case Role::curator: return "curator";
    case Role::admin: return "admin";
  }
  return "member";
}

std::optional<Role> role_from_string(std::string_view s) {
  for (auto r : {Role::member, Role::curator, Role::admin}) {
    if (to_string(r) == s) return r;
  }
  return std::nullopt;
}

json encode(const Group& g) { return json{{"id", g.id.value}, {"display_name", g.display_name}}; }

json encode(const Account& a) {
  json groups = json::array(), roles = json::array();
  for (const auto& g : a.groups) groups.push_back(g.value);
  for (auto r : a.roles) roles.push_back(to_string(r));
  return json{{"id", a.id.value},
              {"username", a.username},
              {"given_name", a.given_name},
              {"family_name", a.family_name},
              {"email", a.email},
              {"organization", a.organization},
              {"password_hash", a.password_hash},
              {"groups", groups},
              {"roles", roles},
              {"disabled", a.disabled},
              {"created_at", a.created_at.to_string()}};
}

json encode(const ApiKey& k) {
  return json{{"key_id", k.key_id},     {"secret_hash", k.secret_hash},
              {"account", k.account.value}, {"label", k.label},
              {"created_at", k.created_at.to_string()}, {"revoked", k.revoked}};
}

json encode(const PidRecord& p) {
  return json{{"entity", {{"kind", to_string(p.entity.kind)}, {"id", p.entity.id.value}}},
              {"handle", p.handle},
              {"target_url", p.target_url},
              {"schema_payload", p.schema_payload},
              {"minted_at", p.minted_at.to_string()},
              {"last_synced_at", p.last_synced_at.to_string()},
              {"stale", p.stale}};
}

Group decode_group(const json& j) {
  return Group{GroupId{j.at("id").get<std::string>()}, j.at("display_name").get<std::string>()};
}

Account decode_account(const json& j) {
  Account a;
  a.id = AccountId{j.at("id").get<std::string>()};
  a.username = j.at("username").get<std::string>();
  a.given_name = j.at("given_name").get<std::string>();
  a.family_name = j.at("family_name").get<std::string>();
  a.email = j.at("email").get<std::string>();
  a.organization = j.at("organization").get<std::string>();
  a.password_hash = j.at("password_hash").get<std::string>();
  for (const auto& g : j.at("groups")) a.groups.insert(GroupId{g.get<std::string>()});
  for (const auto& r : j.at("roles")) {
    auto role = role_from_string(r.get<std::string>());
    if (!role) throw Error(ErrorCode::bad_request, "unknown role " + r.dump());
    a.roles.insert(*role);
  }
  a.disabled = j.at("disabled").get<bool>();
  a.created_at = TimeInstant::parse(j.at("created_at").get<std::string>());
  return a;
}

ApiKey decode_api_key(const json& j) {
  ApiKey k;
  k.key_id = j.at("key_id").get<std::string>();
  k.secret_hash = j.at("secret_hash").get<std::string>();
  k.account = AccountId{j.at("account").get<std::string>()};
  k.label = j.at("label").get<std::string>();
  k.created_at = TimeInstant::parse(j.at("created_at").get<std::string>());
  k.revoked = j.at("revoked").get<bool>();
  return k;
}

PidRecord decode_pid(const json& j) {
  PidRecord p;
  auto kind = kind_from_string(j.at("entity").at("kind").get<std::string>());
  if (!kind) throw Error(ErrorCode::bad_request, "unknown entity kind in pid record");
  p.entity = EntityRef{*kind, EntityId{j.at("entity").at("id").get<std::string>()}};
  p.handle = j.at("handle").get<std::string>();
  p.target_url = j.at("target_url").get<std::string>();
  p.schema_payload = j.at("schema_payload");
  p.minted_at = TimeInstant::parse(j.at("minted_at").get<std::string>());
  p.last_synced_at = TimeInstant::parse(j.at("last_synced_at").get<std::string>());
  p.stale = j.at("stale").get<bool>();
  return p;
}

}  // namespace sms::storage
