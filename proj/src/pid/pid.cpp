#include "sms/pid/pid.hpp"

#include <httplib.h>

#include <algorithm>
#include <set>

#include "sms/core/errors.hpp"
#include "sms/vocabulary/vocabulary.hpp"

namespace sms::pid {

using nlohmann::json;

namespace {

Error unavailable(const std::string& what, json detail = nullptr) {
  return Error(ErrorCode::handle_service_unavailable, "handle service: " + what, std::move(detail));
}

httplib::Headers headers_for(const HandleServiceConfig& c) {
  httplib::Headers h;
  if (!c.token.empty()) h.emplace("Authorization", "Bearer " + c.token);
  return h;
}

std::unique_ptr<httplib::Client> client_for(const HandleServiceConfig& c) {
  auto cli = std::make_unique<httplib::Client>(c.endpoint);
  if (!cli->is_valid()) throw unavailable("invalid endpoint '" + c.endpoint + "'");
  auto secs = std::chrono::duration_cast<std::chrono::seconds>(c.timeout);
  auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(c.timeout - secs);
  cli->set_connection_timeout(secs.count(), usecs.count());
  cli->set_read_timeout(secs.count(), usecs.count());
  cli->set_write_timeout(secs.count(), usecs.count());
  return cli;
}

void check(const httplib::Result& res, const char* op) {
  if (!res) throw unavailable(std::string(op) + " failed: " + httplib::to_string(res.error()));
  if (res->status >= 300)
    throw unavailable(std::string(op) + " answered " + std::to_string(res->status), json{{"status", res->status}});
}

std::string body_of(const std::string& target_url, const json& payload) {
  return json{{"target_url", target_url}, {"payload", payload}}.dump();
}

}  // namespace

HttpHandleService::HttpHandleService(HandleServiceConfig config) : config_(std::move(config)) {}

std::string HttpHandleService::register_handle(const std::string& target_url, const json& payload) {
  auto cli = client_for(config_);
  auto res = cli->Post("/api/handles", headers_for(config_), body_of(target_url, payload), "application/json");
  check(res, "register");
  try {
    return json::parse(res->body).at("handle").get<std::string>();
  } catch (const std::exception& e) {
    throw unavailable(std::string("malformed register answer: ") + e.what());
  }
}

void HttpHandleService::update_handle(const std::string& handle, const std::string& target_url,
                                      const json& payload) {
  auto cli = client_for(config_);
  auto res = cli->Put("/api/handles/" + handle, headers_for(config_), body_of(target_url, payload), "application/json");
  check(res, "update");
}

std::optional<json> HttpHandleService::resolve(const std::string& handle) {
  auto cli = client_for(config_);
  auto res = cli->Get("/api/handles/" + handle, headers_for(config_));
  if (res && res->status == 404) return std::nullopt;
  check(res, "resolve");
  try {
    return json::parse(res->body);
  } catch (const std::exception& e) {
    throw unavailable(std::string("malformed resolve answer: ") + e.what());
  }
}

bool can_have_pid(EntityKind kind) {
  return kind == EntityKind::device || kind == EntityKind::platform || kind == EntityKind::configuration;
}

json schema_payload(const Entity& entity, const std::string& landing_page, const PayloadContext& ctx) {
  json p = json::object();
  p["SchemaVersion"] = "1.0";
  p["LandingPage"] = landing_page;
  p["Name"] = natural_key(entity);

  auto label = [&](const std::optional<TermRef>& t) -> std::optional<std::string> {
    if (!t || t->empty() || !ctx.term_label) return std::nullopt;
    return ctx.term_label(*t);
  };

  if (const auto* contacts = contacts_of(entity)) {
    json owners = json::array();
    std::set<EntityId> seen;
    for (const auto& cr : *contacts) {
      auto role = label(cr.role);
      if (!role || vocabulary::fold_case(*role) != "owner" || !seen.insert(cr.contact).second) continue;
      auto c = ctx.contact ? ctx.contact(cr.contact) : std::nullopt;
      if (!c) continue;
      json o{{"ownerName", c->given_name + " " + c->family_name}};
      if (!c->email.empty()) o["ownerContact"] = c->email;
      if (c->orcid) o["ownerIdentifier"] = {{"ownerIdentifierValue", *c->orcid}, {"ownerIdentifierType", "ORCID"}};
      owners.push_back(std::move(o));
    }
    if (!owners.empty()) p["Owner"] = std::move(owners);
  }

  auto equipment = [&](const auto& r, const std::optional<TermRef>& type) {
    if (auto m = label(r.manufacturer)) p["Manufacturer"] = json::array({{{"manufacturerName", *m}}});
    if (!r.model.empty()) p["Model"] = {{"modelName", r.model}};
    if (!r.description.empty()) p["Description"] = r.description;
    if (auto t = label(type)) p["InstrumentType"] = json::array({{{"instrumentTypeName", *t}}});
    json alt = json::array();
    if (!r.serial_number.empty())
      alt.push_back({{"alternateIdentifier", r.serial_number}, {"alternateIdentifierType", "SerialNumber"}});
    if (!r.inventory_number.empty())
      alt.push_back({{"alternateIdentifier", r.inventory_number}, {"alternateIdentifierType", "InventoryNumber"}});
    if (!alt.empty()) p["AlternateIdentifier"] = std::move(alt);
  };

  if (const auto* d = std::get_if<Device>(&entity)) {
    equipment(*d, d->device_type);
    json vars = json::array();
    for (const auto& mq : d->measured_quantities)
      if (auto q = label(mq.quantity); q && std::find(vars.begin(), vars.end(), *q) == vars.end()) vars.push_back(*q);
    if (!vars.empty()) p["MeasuredVariable"] = std::move(vars);
  } else if (const auto* pl = std::get_if<Platform>(&entity)) {
    equipment(*pl, pl->platform_type);
  } else if (const auto* c = std::get_if<Configuration>(&entity)) {
    if (!c->description.empty()) p["Description"] = c->description;
  }
  return p;
}

PidService::PidService(storage::Store& store, HandleService& service, std::string base_url)
    : store_(store), service_(service), base_url_(std::move(base_url)) {}

std::shared_ptr<std::mutex> PidService::lock_for(const EntityId& id) {
  std::lock_guard lock(locks_mutex_);
  auto& m = locks_[id];
  if (!m) m = std::make_shared<std::mutex>();
  return m;
}

json PidService::payload_for(const Entity& entity) const {
  PayloadContext ctx;
  ctx.term_label = [&](const TermRef& t) -> std::optional<std::string> {
    auto term = store_.vocabulary().get_term(t);
    if (!term || term->status == vocabulary::TermStatus::rejected) return std::nullopt;
    return term->term;
  };
  ctx.contact = [&](const EntityId& id) -> std::optional<Contact> {
    auto e = store_.get(id);
    if (!e || !std::holds_alternative<Contact>(*e)) return std::nullopt;
    return std::get<Contact>(*e);
  };
  return schema_payload(entity, canonical_url(base_url_, ref_of(entity)), ctx);
}

MintResult PidService::mint(const EntityId& id, const storage::WriteContext& ctx) {
  auto guard = lock_for(id);
  std::lock_guard lock(*guard);
  auto entity = store_.get(id);
  if (!entity || info_of(*entity).archived) throw Error(ErrorCode::not_found, "no record " + id.str());
  const auto kind = kind_of(*entity);
  if (!can_have_pid(kind))
    throw Error(ErrorCode::bad_request, std::string(plural(kind)) + " cannot have a PID");
  if (auto existing = store_.pid_record(id)) return {*existing, true};
  if (const auto* pid = pid_of(*entity); pid && *pid)
    throw Error(ErrorCode::already_minted, id.str() + " already carries the identifier " + **pid,
                json{{"handle", **pid}});

  auto payload = payload_for(*entity);
  auto target = canonical_url(base_url_, ref_of(*entity));
  auto handle = service_.register_handle(target, payload);

  storage::PidRecord record;
  record.entity = ref_of(*entity);
  record.handle = handle;
  record.target_url = target;
  record.schema_payload = payload;
  record.minted_at = ctx.now.value_or(TimeInstant::now());
  record.last_synced_at = record.minted_at;
  store_.transaction([&](storage::Transaction& tx) {
    tx.modify(id, [&](Entity& e) { *pid_of(e) = handle; }, std::nullopt, ctx);
    tx.put_pid(record);
  });
  return {record, false};
}

storage::PidRecord PidService::sync(const EntityId& id, TimeInstant now) {
  auto guard = lock_for(id);
  std::lock_guard lock(*guard);
  auto record = store_.pid_record(id);
  if (!record) throw Error(ErrorCode::not_found, id.str() + " has no PID");
  auto entity = store_.get(id);
  if (!entity) throw Error(ErrorCode::not_found, "no record " + id.str());
  auto payload = payload_for(*entity);
  auto target = canonical_url(base_url_, ref_of(*entity));
  if (payload == record->schema_payload && target == record->target_url && !record->stale) return *record;
  try {
    service_.update_handle(record->handle, target, payload);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::handle_service_unavailable) throw;
    record->stale = true;
    store_.put_pid(*record);
    throw;
  }
  record->schema_payload = std::move(payload);
  record->target_url = std::move(target);
  record->last_synced_at = now;
  record->stale = false;
  store_.put_pid(*record);
  return *record;
}

}  // namespace sms::pid
