#include "sms/api/service.hpp"

#include <algorithm>
#include <charconv>
#include <limits>
#include <set>

#include "sms/core/codec.hpp"
#include "sms/core/errors.hpp"
#include "sms/temporal/temporal.hpp"

namespace sms::api {

using nlohmann::json;
using storage::Role;
namespace vocab = sms::vocabulary;

namespace {

[[noreturn]] void fail(ErrorCode code, std::string message, json detail = nullptr) {
  throw Error(code, std::move(message), std::move(detail));
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  while (true) {
    auto pos = s.find(sep);
    out.emplace_back(s.substr(0, pos));
    if (pos == std::string_view::npos) break;
    s.remove_prefix(pos + 1);
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::optional<std::int64_t> to_int(std::string_view s) {
  std::int64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) return std::nullopt;
  return v;
}

std::string status_title(int status) {
  switch (status) {
    case 400: return "Bad Request";
    case 401: return "Unauthorized";
    case 403: return "Forbidden";
    case 404: return "Not Found";
    case 405: return "Method Not Allowed";
    case 409: return "Conflict";
    case 413: return "Payload Too Large";
    case 422: return "Unprocessable Entity";
    case 502: return "Bad Gateway";
    default: return status >= 500 ? "Internal Server Error" : "Error";
  }
}

HttpResponse json_response(int status, const json& doc, const char* type = kJsonApiType) {
  HttpResponse r;
  r.status = status;
  r.content_type = type;
  r.body = doc.dump();
  return r;
}

json error_object(int status, std::string_view code, std::string_view detail) {
  return {{"status", std::to_string(status)},
          {"code", std::string(code)},
          {"title", status_title(status)},
          {"detail", std::string(detail)}};
}

json violation_object(const Violation& v) {
  auto e = error_object(422, v.code, v.message);
  e["source"] = {{"pointer", "/data/attributes" + v.path}};
  if (v.warning) e["meta"] = {{"warning", true}};
  return e;
}

json warnings_json(const std::vector<Violation>& warnings) {
  json arr = json::array();
  for (const auto& w : warnings) {
    arr.push_back({{"code", w.code}, {"detail", w.message}, {"source", {{"pointer", "/data/attributes" + w.path}}}});
  }
  return arr;
}

HttpResponse error_response(const Error& e) {
  int status = http_status(e.code());
  auto obj = error_object(status, to_string(e.code()), e.what());
  const auto& d = e.detail();
  if (d.is_object()) {
    if (d.contains("pointer")) {
      obj["source"] = {{"pointer", d["pointer"]}};
    } else if (d.contains("parameter")) {
      obj["source"] = {{"parameter", d["parameter"]}};
    }
    json meta = d;
    meta.erase("pointer");
    meta.erase("parameter");
    if (!meta.empty()) obj["meta"] = meta;
  }
  return json_response(status, {{"errors", json::array({obj})}});
}

// Decoding errors carry pointers relative to the attributes object.
template <class F>
auto in_attributes(F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const ValidationFailed&) {
    throw;
  } catch (const Error& e) {
    if (e.code() == ErrorCode::bad_request && e.detail().is_object() && e.detail().contains("pointer")) {
      json d = e.detail();
      d["pointer"] = "/data/attributes" + d["pointer"].get<std::string>();
      throw Error(e.code(), e.what(), d);
    }
    throw;
  }
}

json parse_body(const HttpRequest& req) {
  if (trim(req.body).empty()) fail(ErrorCode::bad_request, "request body required", {{"pointer", ""}});
  try {
    return json::parse(req.body);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::bad_request, std::string("malformed JSON: ") + e.what(), {{"pointer", ""}});
  }
}

const json& data_of(const json& doc, std::string_view type) {
  if (!doc.is_object() || !doc.contains("data") || !doc["data"].is_object())
    fail(ErrorCode::bad_request, "document must have a data object", {{"pointer", "/data"}});
  const auto& data = doc["data"];
  if (data.contains("type")) {
    if (!data["type"].is_string()) fail(ErrorCode::bad_request, "type must be a string", {{"pointer", "/data/type"}});
    if (data["type"].get<std::string>() != type)
      fail(ErrorCode::conflict, "resource type must be '" + std::string(type) + "'", {{"pointer", "/data/type"}});
  }
  return data;
}

json attributes_of(const json& data) {
  if (!data.contains("attributes")) return json::object();
  if (!data["attributes"].is_object())
    fail(ErrorCode::bad_request, "attributes must be an object", {{"pointer", "/data/attributes"}});
  return data["attributes"];
}

std::optional<std::int64_t> expected_version(const HttpRequest& req, const json* data) {
  if (auto h = req.header("if-match")) {
    std::string_view v = trim(*h);
    if (v.rfind("W/", 0) == 0) v.remove_prefix(2);
    if (v.size() >= 2 && v.front() == '"' && v.back() == '"') v = v.substr(1, v.size() - 2);
    auto n = to_int(v);
    if (!n) fail(ErrorCode::bad_request, "If-Match must carry a version number");
    return n;
  }
  if (data && data->contains("meta") && (*data)["meta"].is_object() && (*data)["meta"].contains("version")) {
    const auto& v = (*data)["meta"]["version"];
    if (!v.is_number_integer()) fail(ErrorCode::bad_request, "version must be an integer", {{"pointer", "/data/meta/version"}});
    return v.get<std::int64_t>();
  }
  return std::nullopt;
}

std::string etag(std::int64_t version) { return "\"" + std::to_string(version) + "\""; }

const std::set<std::string> kReadOnly = {"id", "kind", "version", "created_at", "updated_at",
                                         "created_by", "updated_by", "archived"};

json entity_attributes(const Entity& e) {
  json j = encode(e);
  j.erase("id");
  j.erase("kind");
  j.erase("version");
  return j;
}

json rel(EntityKind kind, const EntityId& id) { return {{"type", std::string(plural(kind))}, {"id", id.str()}}; }

json relationships(const Entity& e) {
  json r = json::object();
  if (const auto* cs = contacts_of(e)) {
    json arr = json::array();
    std::set<EntityId> seen;
    for (const auto& c : *cs) {
      if (seen.insert(c.contact).second) arr.push_back(rel(EntityKind::contact, c.contact));
    }
    r["contacts"] = {{"data", arr}};
  }
  if (const auto* c = std::get_if<Configuration>(&e)) {
    r["site"] = {{"data", c->site ? rel(EntityKind::site, *c->site) : json(nullptr)}};
  }
  if (const auto* s = std::get_if<Site>(&e)) {
    r["parent_site"] = {{"data", s->parent_site ? rel(EntityKind::site, *s->parent_site) : json(nullptr)}};
  }
  return r;
}

json entity_resource(const Entity& e, const std::string& base, const std::set<std::string>* fields = nullptr) {
  auto attrs = entity_attributes(e);
  if (fields) {
    json f = json::object();
    for (const auto& k : *fields) {
      if (attrs.contains(k)) f[k] = attrs[k];
    }
    attrs = std::move(f);
  }
  const auto& info = info_of(e);
  return {{"type", std::string(plural(kind_of(e)))},
          {"id", info.id.str()},
          {"attributes", std::move(attrs)},
          {"relationships", relationships(e)},
          {"links", {{"self", canonical_url(base, ref_of(e))}}},
          {"meta", {{"version", info.version}}}};
}

template <class T>
json item_resource(std::string_view type, const T& item, const Entity& parent) {
  json attrs = encode(item);
  std::string id = attrs["id"].get<std::string>();
  attrs.erase("id");
  const auto& info = info_of(parent);
  return {{"type", std::string(type)},
          {"id", id},
          {"attributes", std::move(attrs)},
          {"relationships", {{"parent", {{"data", rel(kind_of(parent), info.id)}}}}},
          {"meta", {{"parent_version", info.version}}}};
}

json term_resource(const vocab::VocabularyTerm& t) {
  json attrs = vocab::encode(t);
  attrs.erase("id");
  return {{"type", "terms"}, {"id", t.id.str()}, {"attributes", attrs}};
}

json ticket_resource(const vocab::CurationTicket& t) {
  json attrs = vocab::encode(t);
  attrs.erase("id");
  return {{"type", "proposals"},
          {"id", t.id.str()},
          {"attributes", attrs},
          {"relationships", {{"term", {{"data", {{"type", "terms"}, {"id", t.term_id.str()}}}}}}}};
}

json page_meta(std::size_t total, std::size_t page, std::size_t size) {
  return {{"total", total}, {"page", page}, {"page_size", size}, {"pages", (total + size - 1) / size}};
}

GroupId* owner_group_mut(Entity& e) {
  return std::visit(
      [](auto& r) -> GroupId* {
        if constexpr (requires { r.owner_group; }) {
          return &r.owner_group;
        } else {
          return nullptr;
        }
      },
      e);
}

json position_json(const temporal::ResolvedPosition& p) {
  return std::visit(
      [](const auto& v) -> json {
        using V = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<V, temporal::AbsolutePosition>) {
          return {{"kind", "static"},
                  {"location",
                   {{"latitude", v.location.latitude},
                    {"longitude", v.location.longitude},
                    {"height", v.location.height},
                    {"epsg_code", v.location.epsg_code}}},
                  {"offset", encode(v.local_offset)}};
        } else if constexpr (std::is_same_v<V, temporal::DynamicPosition>) {
          auto src = [](const QuantityRef& q) {
            return json{{"device", q.device.str()}, {"measured_quantity", q.measured_quantity.str()}};
          };
          return {{"kind", "dynamic"},
                  {"x_source", src(v.sources.x_source)},
                  {"y_source", src(v.sources.y_source)},
                  {"z_source", src(v.sources.z_source)}};
        } else {
          return {{"kind", "undefined"}};
        }
      },
      p);
}

// Vocabulary-backed attributes; filters on them also match term labels.
const std::set<std::string> kTermFields = {"device_type", "manufacturer", "platform_type", "usage"};

const std::set<std::string>& filter_fields(EntityKind kind) {
  static const std::map<EntityKind, std::set<std::string>> fields = {
      {EntityKind::device,
       {"short_name", "urn", "pid", "device_type", "manufacturer", "model", "serial_number", "inventory_number",
        "visibility", "owner_group", "created_by", "updated_by", "contact"}},
      {EntityKind::platform,
       {"short_name", "urn", "pid", "platform_type", "manufacturer", "model", "serial_number", "inventory_number",
        "visibility", "owner_group", "created_by", "updated_by", "contact"}},
      {EntityKind::configuration,
       {"label", "pid", "status", "site", "project", "visibility", "owner_group", "created_by", "updated_by",
        "contact"}},
      {EntityKind::site,
       {"label", "parent_site", "usage", "visibility", "owner_group", "created_by", "updated_by", "contact"}},
      {EntityKind::contact,
       {"given_name", "family_name", "email", "organization", "orcid", "account", "created_by", "updated_by"}},
  };
  return fields.at(kind);
}

bool label_matches(const vocab::Vocabulary& v, const std::string& term_id, const std::string& value) {
  auto t = v.get_term(EntityId(term_id));
  if (!t) return false;
  auto label = vocab::fold_case(t->term);
  auto want = vocab::fold_case(value);
  return label == want || label.rfind(want + " ", 0) == 0;
}

bool field_matches(const vocab::Vocabulary& v, const Entity& e, const json& enc, const std::string& field,
                   const std::string& value) {
  if (field == "contact") {
    const auto* cs = contacts_of(e);
    return cs && std::any_of(cs->begin(), cs->end(), [&](const ContactRole& c) { return c.contact.str() == value; });
  }
  if (!enc.contains(field)) return value.empty() || value == "null";
  const auto& x = enc[field];
  if (x.is_string()) {
    const auto& s = x.get_ref<const std::string&>();
    if (s == value) return true;
    return kTermFields.count(field) > 0 && label_matches(v, s, value);
  }
  if (x.is_boolean()) return (value == "true") == x.get<bool>();
  if (x.is_number()) {
    try {
      return std::stod(value) == x.get<double>();
    } catch (...) {
      return false;
    }
  }
  return false;
}

std::size_t page_param(const HttpRequest& req, const std::string& name, std::size_t fallback, std::size_t max) {
  auto v = req.param(name);
  if (!v) return fallback;
  auto n = to_int(*v);
  if (!n || *n < 1 || static_cast<std::size_t>(*n) > max)
    fail(ErrorCode::bad_request, name + " must be an integer between 1 and " + std::to_string(max),
         {{"parameter", name}});
  return static_cast<std::size_t>(*n);
}

TimeInstant instant_param(const HttpRequest& req, const std::string& name, TimeInstant fallback) {
  auto v = req.param(name);
  if (!v) return fallback;
  auto t = TimeInstant::try_parse(*v);
  if (!t) fail(ErrorCode::bad_request, name + " must be an RFC 3339 timestamp", {{"parameter", name}});
  return *t;
}

template <class T>
std::vector<T>* items_of(Entity& e);

template <>
std::vector<MeasuredQuantity>* items_of(Entity& e) {
  auto* d = std::get_if<Device>(&e);
  return d ? &d->measured_quantities : nullptr;
}
template <>
std::vector<Parameter>* items_of(Entity& e) {
  return parameters_of(e);
}
template <>
std::vector<Attachment>* items_of(Entity& e) {
  return attachments_of(e);
}
template <>
std::vector<GenericAction>* items_of(Entity& e) {
  return actions_of(e);
}
template <>
std::vector<MountAction>* items_of(Entity& e) {
  auto* c = std::get_if<Configuration>(&e);
  return c ? &c->mount_actions : nullptr;
}
template <>
std::vector<LocationAction>* items_of(Entity& e) {
  auto* c = std::get_if<Configuration>(&e);
  return c ? &c->location_actions : nullptr;
}

template <class T>
struct ItemKind;
template <>
struct ItemKind<MeasuredQuantity> {
  static constexpr const char* type = "measured-quantities";
  static constexpr char prefix = 'q';
};
template <>
struct ItemKind<Parameter> {
  static constexpr const char* type = "parameters";
  static constexpr char prefix = 'r';
};
template <>
struct ItemKind<Attachment> {
  static constexpr const char* type = "attachments";
  static constexpr char prefix = 'a';
};
template <>
struct ItemKind<GenericAction> {
  static constexpr const char* type = "actions";
  static constexpr char prefix = 'g';
};
template <>
struct ItemKind<MountAction> {
  static constexpr const char* type = "mounts";
  static constexpr char prefix = 'm';
};
template <>
struct ItemKind<LocationAction> {
  static constexpr const char* type = "locations";
  static constexpr char prefix = 'l';
};

template <class T>
const T* find_item(Entity& e, const std::string& id) {
  auto* items = items_of<T>(e);
  if (!items) return nullptr;
  for (const auto& it : *items) {
    if (it.id.str() == id) return &it;
  }
  return nullptr;
}

std::optional<vocab::TermEdits> decode_edits(const json& j) {
  if (j.is_null()) return std::nullopt;
  if (!j.is_object()) fail(ErrorCode::bad_request, "edits must be an object", {{"pointer", "/data/attributes/edits"}});
  vocab::TermEdits e;
  for (const auto& [k, v] : j.items()) {
    auto ptr = "/data/attributes/edits/" + k;
    auto str = [&]() {
      if (!v.is_string()) fail(ErrorCode::bad_request, k + " must be a string", {{"pointer", ptr}});
      return v.get<std::string>();
    };
    if (k == "term") {
      e.term = str();
    } else if (k == "definition") {
      e.definition = str();
    } else if (k == "provenance") {
      e.provenance = str();
    } else if (k == "provenance_uri") {
      e.provenance_uri = str();
    } else if (k == "global_provenance") {
      e.global_provenance = str();
    } else if (k == "synonyms") {
      if (!v.is_array()) fail(ErrorCode::bad_request, "synonyms must be an array", {{"pointer", ptr}});
      std::vector<std::string> syn;
      for (const auto& s : v) {
        if (!s.is_string()) fail(ErrorCode::bad_request, "synonyms must be strings", {{"pointer", ptr}});
        syn.push_back(s.get<std::string>());
      }
      e.synonyms = std::move(syn);
    } else {
      fail(ErrorCode::bad_request, "unknown member '" + k + "'", {{"pointer", ptr}});
    }
  }
  return e;
}

std::string string_attr(const json& attrs, const std::string& key, bool required) {
  if (!attrs.contains(key)) {
    if (required) fail(ErrorCode::bad_request, key + " is required", {{"pointer", "/data/attributes/" + key}});
    return {};
  }
  if (!attrs[key].is_string())
    fail(ErrorCode::bad_request, key + " must be a string", {{"pointer", "/data/attributes/" + key}});
  return attrs[key].get<std::string>();
}

HttpResponse method_not_allowed() {
  return json_response(405, {{"errors", json::array({error_object(405, "method_not_allowed", "method not allowed")})}});
}

}  // namespace

namespace {

json node_json(const storage::Store& store, const Configuration& cfg, const temporal::MountTreeNode& n, TimeInstant at,
               const std::function<bool(const Entity&)>& readable) {
  json j{{"type", std::string(plural(n.entity.kind))}, {"id", n.entity.id.str()}};
  auto e = store.get(n.entity.id);
  if (e && readable(*e)) {
    j["name"] = display_name(*e);
  } else {
    j["name"] = nullptr;
    j["restricted"] = true;
  }
  j["mount"] = encode(n.mount);
  j["position"] = position_json(temporal::resolve_position(cfg, n.entity, at));
  json children = json::array();
  for (const auto& c : n.children) children.push_back(node_json(store, cfg, c, at, readable));
  j["children"] = children;
  return j;
}

}  // namespace

json state_document(const storage::Store& store, const Configuration& cfg, TimeInstant at,
                    const std::function<bool(const Entity&)>& readable) {
  auto tree = temporal::mount_tree_at(cfg, at, [&](const EntityRef& r) {
    auto x = store.get(r.id);
    return x ? display_name(*x) : r.id.str();
  });
  json roots = json::array();
  for (const auto& n : tree.roots) roots.push_back(node_json(store, cfg, n, at, readable));
  const auto* loc = temporal::location_at(cfg, at);
  return {{"configuration", cfg.info.id.str()},
          {"label", cfg.label},
          {"at", at.to_string()},
          {"location", loc ? encode(*loc) : json(nullptr)},
          {"node_count", tree.node_count()},
          {"depth", tree.depth()},
          {"tree", roots}};
}

struct ApiService::Context {
  const HttpRequest& req;
  Principal principal;
  std::optional<EntityId> contact;
  std::vector<std::string> segs;
};

ApiService::ApiService(storage::Store& store, ApiConfig config, pid::HandleService* handles,
                       std::shared_ptr<const TokenVerifier> verifier)
    : store_(store), config_(std::move(config)), verifier_(std::move(verifier)) {
  while (!config_.base_url.empty() && config_.base_url.back() == '/') config_.base_url.pop_back();
  if (!config_.token_secret.empty()) {
    issuer_ = std::make_shared<LocalTokenIssuer>(config_.token_secret, "sms", config_.token_ttl);
    if (!verifier_) verifier_ = issuer_;
  }
  authenticator_ = std::make_unique<Authenticator>(store_, verifier_);
  if (handles) pids_ = std::make_unique<pid::PidService>(store_, *handles, config_.base_url);
}

ApiService::~ApiService() = default;

Principal ApiService::authenticate(const HttpRequest& request) const {
  auto key = request.header("x-apikey");
  auto authz = request.header("authorization");
  return authenticator_->authenticate(key, authz);
}

std::optional<EntityId> ApiService::contact_for(const Principal& principal) {
  if (!principal.account) return std::nullopt;
  std::lock_guard lock(contacts_mutex_);
  auto cached = contacts_.find(*principal.account);
  if (cached != contacts_.end()) {
    auto e = store_.get(cached->second);
    if (e && !info_of(*e).archived) return cached->second;
    contacts_.erase(cached);
  }
  for (const auto& e : store_.list(EntityKind::contact)) {
    const auto& c = std::get<Contact>(*e);
    if (c.account == principal.account) {
      contacts_[*principal.account] = c.info.id;
      return c.info.id;
    }
  }
  auto account = store_.account(*principal.account);
  if (!account) return std::nullopt;
  std::string email = account->email.empty() ? account->username + "@users.invalid" : account->email;

  if (auto existing = store_.find_by_natural_key(EntityKind::contact, email)) {
    const auto& c = std::get<Contact>(*existing);
    if (c.account && *c.account != account->id) return std::nullopt;
    store_.modify(
        c.info.id, [&](Entity& e) { std::get<Contact>(e).account = account->id; }, std::nullopt,
        {c.info.id, std::nullopt});
    contacts_[account->id] = c.info.id;
    return c.info.id;
  }

  Contact c;
  c.info.id = store_.next_id(id_prefix(EntityKind::contact));
  c.given_name = account->given_name.empty() ? account->username : account->given_name;
  c.family_name = account->family_name.empty() ? account->username : account->family_name;
  c.email = email;
  c.organization = account->organization;
  c.account = account->id;
  auto id = c.info.id;
  store_.put_entity(std::move(c), std::nullopt, {id, std::nullopt});
  contacts_[account->id] = id;
  return id;
}

HttpResponse ApiService::handle(const HttpRequest& request) {
  try {
    Context cx{request, {}, std::nullopt, {}};
    for (auto& s : split(request.path, '/')) {
      if (!s.empty()) cx.segs.push_back(std::move(s));
    }
    cx.principal = authenticate(request);
    if (cx.principal.authenticated()) cx.contact = contact_for(cx.principal);
    auto resp = route(cx);
    if (request.method == "HEAD") resp.body.clear();
    return resp;
  } catch (const ValidationFailed& v) {
    json errors = json::array();
    json warnings = json::array();
    for (const auto& viol : v.report().violations) {
      if (viol.warning) {
        warnings.push_back(violation_object(viol));
      } else {
        errors.push_back(violation_object(viol));
      }
    }
    if (errors.empty()) errors.push_back(error_object(422, "validation_failed", v.what()));
    json doc{{"errors", errors}};
    if (!warnings.empty()) doc["meta"] = {{"warnings", warnings}};
    return json_response(422, doc);
  } catch (const Error& e) {
    return error_response(e);
  } catch (const json::exception& e) {
    return error_response(Error(ErrorCode::bad_request, e.what()));
  } catch (const std::exception& e) {
    return error_response(Error(ErrorCode::internal, e.what()));
  }
}

namespace {

// All handlers below take the service's internals explicitly so the routing
// table stays readable.
struct Handlers {
  storage::Store& store;
  const ApiConfig& config;
  const Authenticator& auth;
  const LocalTokenIssuer* issuer;
  pid::PidService* pids;
  const HttpRequest& req;
  const Principal& principal;
  std::optional<EntityId> contact;

  storage::WriteContext write() const { return {contact, std::nullopt}; }
  void require_auth() const {
    if (!principal.authenticated()) fail(ErrorCode::unauthorized, "authentication required");
  }
  bool can(Action a, const Entity& e) const { return authorize(principal, a, &e); }

  // 404 unless readable; 403 when readable but `action` is denied.
  std::shared_ptr<const Entity> load(EntityKind kind, const std::string& id, Action action = Action::read) const {
    auto e = store.get(EntityId(id));
    if (!e || kind_of(*e) != kind || !can(Action::read, *e))
      fail(ErrorCode::not_found, std::string(to_string(kind)) + " '" + id + "' not found");
    if (action != Action::read) {
      require_auth();
      if (!can(action, *e)) fail(ErrorCode::forbidden, "not permitted to modify " + id);
    }
    return e;
  }

  HttpResponse entity_doc(int status, const EntityId& id, const std::vector<Violation>& warnings = {}) const {
    auto e = store.get(id);
    if (!e) fail(ErrorCode::internal, "record vanished after write");
    json doc{{"data", entity_resource(*e, config.base_url)}};
    if (!warnings.empty()) doc["meta"] = {{"warnings", warnings_json(warnings)}};
    auto r = json_response(status, doc);
    r.headers["ETag"] = etag(info_of(*e).version);
    if (status == 201) r.headers["Location"] = canonical_url(config.base_url, ref_of(*e));
    return r;
  }

  // ---- entities -------------------------------------------------------

  HttpResponse list(EntityKind kind) const {
    std::vector<std::pair<std::string, std::vector<std::string>>> filters;
    std::optional<std::string> text;
    bool archived = false;
    for (const auto& [k, v] : req.query) {
      if (k == "q") {
        text = v;
      } else if (k.rfind("filter[", 0) == 0 && k.back() == ']') {
        auto f = k.substr(7, k.size() - 8);
        if (f == "q" || f == "text") {
          text = v;
        } else if (f == "archived") {
          archived = v == "true";
        } else if (!filter_fields(kind).count(f)) {
          fail(ErrorCode::bad_request, "unknown filter field '" + f + "'", {{"parameter", k}});
        } else {
          filters.emplace_back(f, split(v, ','));
        }
      }
    }
    auto size = page_param(req, "page[size]", config.default_page_size, config.max_page_size);
    auto page = page_param(req, "page[number]", 1, std::numeric_limits<int>::max());

    std::vector<std::shared_ptr<const Entity>> items;
    std::map<EntityId, double> score;
    bool ranked = text && !trim(*text).empty() && !archived;
    if (ranked) {
      auto hits = store.search(*text, kind, [&](const Entity& e) { return can(Action::read, e); });
      for (const auto& h : hits) {
        if (auto e = store.get(h.ref.id)) {
          score[h.ref.id] = h.score;
          items.push_back(std::move(e));
        }
      }
    } else {
      for (auto& e : store.list(kind, archived)) {
        if (info_of(*e).archived != archived || !can(Action::read, *e)) continue;
        if (text && !trim(*text).empty()) {
          auto name = vocab::fold_case(display_name(*e));
          if (name.find(vocab::fold_case(trim(*text))) == std::string::npos) continue;
        }
        items.push_back(std::move(e));
      }
    }

    if (!filters.empty()) {
      const auto& v = store.vocabulary();
      std::erase_if(items, [&](const std::shared_ptr<const Entity>& e) {
        json enc = encode(*e);
        for (const auto& [f, values] : filters) {
          if (std::none_of(values.begin(), values.end(),
                           [&](const std::string& val) { return field_matches(v, *e, enc, f, val); }))
            return true;
        }
        return false;
      });
    }

    sort(items, kind, ranked ? &score : nullptr);

    std::set<std::string> fields;
    bool sparse = false;
    if (auto f = req.param("fields[" + std::string(plural(kind)) + "]")) {
      sparse = true;
      for (auto& s : split(*f, ',')) fields.insert(std::string(trim(s)));
    }

    json data = json::array();
    std::size_t first = (page - 1) * size;
    for (std::size_t i = first; i < items.size() && i < first + size; ++i) {
      auto res = entity_resource(*items[i], config.base_url, sparse ? &fields : nullptr);
      if (ranked) res["meta"]["score"] = score[info_of(*items[i]).id];
      data.push_back(std::move(res));
    }
    return json_response(200, {{"data", data}, {"meta", page_meta(items.size(), page, size)}});
  }

  void sort(std::vector<std::shared_ptr<const Entity>>& items, EntityKind kind,
            const std::map<EntityId, double>* score) const {
    auto spec = req.param("sort");
    if (!spec || trim(*spec).empty()) {
      std::stable_sort(items.begin(), items.end(), [&](const auto& a, const auto& b) {
        const auto& ia = info_of(*a).id;
        const auto& ib = info_of(*b).id;
        if (score && score->at(ia) != score->at(ib)) return score->at(ia) > score->at(ib);
        return ia < ib;
      });
      return;
    }
    std::vector<std::pair<std::string, bool>> keys;  // field, descending
    for (auto& s : split(*spec, ',')) {
      std::string f(trim(s));
      bool desc = !f.empty() && f[0] == '-';
      if (desc) f.erase(0, 1);
      static const std::set<std::string> extra = {"id", "name", "created_at", "updated_at"};
      if (!extra.count(f) && !filter_fields(kind).count(f))
        fail(ErrorCode::bad_request, "cannot sort by '" + f + "'", {{"parameter", "sort"}});
      keys.emplace_back(f, desc);
    }
    auto key_of = [](const Entity& e, const json& enc, const std::string& f) -> std::string {
      if (f == "name") return vocab::fold_case(display_name(e));
      if (!enc.contains(f)) return {};
      const auto& x = enc[f];
      return x.is_string() ? x.get<std::string>() : x.dump();
    };
    std::vector<std::pair<json, std::shared_ptr<const Entity>>> enc;
    enc.reserve(items.size());
    for (auto& e : items) enc.emplace_back(encode(*e), e);
    std::stable_sort(enc.begin(), enc.end(), [&](const auto& a, const auto& b) {
      for (const auto& [f, desc] : keys) {
        std::strong_ordering c = std::strong_ordering::equal;
        if (f == "id") {
          c = info_of(*a.second).id <=> info_of(*b.second).id;
        } else {
          c = natural_compare(key_of(*a.second, a.first, f), key_of(*b.second, b.first, f));
        }
        if (c != 0) return desc ? c > 0 : c < 0;
      }
      return info_of(*a.second).id < info_of(*b.second).id;
    });
    for (std::size_t i = 0; i < items.size(); ++i) items[i] = enc[i].second;
  }

  HttpResponse get(EntityKind kind, const std::string& id) const {
    auto e = load(kind, id);
    auto r = json_response(200, {{"data", entity_resource(*e, config.base_url)}});
    r.headers["ETag"] = etag(info_of(*e).version);
    return r;
  }

  HttpResponse create(EntityKind kind) const {
    require_auth();
    auto doc = parse_body(req);
    const auto& data = data_of(doc, plural(kind));
    if (data.contains("id")) fail(ErrorCode::forbidden, "client-generated ids are not supported", {{"pointer", "/data/id"}});
    json attrs = attributes_of(data);
    for (const auto& k : kReadOnly) attrs.erase(k);
    auto id = store.next_id(id_prefix(kind));
    attrs["id"] = id.str();
    Entity e = in_attributes([&] { return decode_entity(attrs, kind); });

    if (auto* g = owner_group_mut(e); g && g->empty() && !principal.groups.empty()) *g = *principal.groups.begin();
    if (auto* cs = contacts_of(e); cs && contact) {
      auto owner = store.vocabulary().find(vocab::Category::contact_role, "Owner");
      if (owner && owner->status == vocab::TermStatus::accepted) {
        bool present = std::any_of(cs->begin(), cs->end(), [&](const ContactRole& c) {
          return c.contact == *contact && c.role == owner->id;
        });
        if (!present) cs->push_back({*contact, owner->id});
      }
    }
    if (auto* p = pid_of(e); p && p->has_value())
      fail(ErrorCode::bad_request, "pid is assigned by minting", {{"pointer", "/data/attributes/pid"}});

    auto rev = store.put_entity(std::move(e), std::nullopt, write());
    return entity_doc(201, rev.entity_id, rev.warnings);
  }

  HttpResponse update(EntityKind kind, const std::string& id) const {
    auto cur = load(kind, id, Action::update);
    auto doc = parse_body(req);
    const auto& data = data_of(doc, plural(kind));
    if (data.contains("id") && data["id"] != id)
      fail(ErrorCode::conflict, "id does not match the URL", {{"pointer", "/data/id"}});
    auto expected = expected_version(req, &data);
    if (!expected)
      fail(ErrorCode::bad_request, "expected version required (If-Match or data.meta.version)",
           {{"pointer", "/data/meta/version"}});
    json attrs = attributes_of(data);
    json merged = encode(*cur);
    for (const auto& [k, v] : attrs.items()) {
      if (kReadOnly.count(k)) continue;
      if (v.is_null()) {
        merged.erase(k);
      } else {
        merged[k] = v;
      }
    }
    Entity e = in_attributes([&] { return decode_entity(merged, kind); });
    if (const auto* p = pid_of(e); p && *p != *pid_of(*cur) && store.pid_record(EntityId(id)))
      fail(ErrorCode::conflict, "pid is managed by the handle service", {{"pointer", "/data/attributes/pid"}});
    auto rev = store.put_entity(std::move(e), expected, write());
    return entity_doc(200, rev.entity_id, rev.warnings);
  }

  HttpResponse remove(EntityKind kind, const std::string& id) const {
    load(kind, id, Action::remove);
    auto rev = store.archive(EntityId(id), expected_version(req, nullptr), write());
    return entity_doc(200, rev.entity_id);
  }

  HttpResponse revisions(EntityKind kind, const std::string& id) const {
    load(kind, id);
    json data = json::array();
    for (const auto& r : store.history(EntityId(id))) {
      json attrs{{"version", r.version}, {"updated_at", r.updated_at.to_string()}};
      if (r.updated_by) attrs["updated_by"] = r.updated_by->str();
      data.push_back({{"type", "revisions"}, {"id", id + "@" + std::to_string(r.version)}, {"attributes", attrs}});
    }
    return json_response(200, {{"data", data}});
  }

  HttpResponse revision(EntityKind kind, const std::string& id, const std::string& version) const {
    load(kind, id);
    auto v = to_int(version);
    auto r = v ? store.revision(EntityId(id), *v) : std::nullopt;
    if (!r) fail(ErrorCode::not_found, "no version " + version + " of " + id);
    auto e = decode_entity(json::parse(r->payload), kind);
    return json_response(200, {{"data", entity_resource(e, config.base_url)}});
  }

  HttpResponse timeline(EntityKind kind, const std::string& id) const {
    auto e = load(kind, id);
    std::vector<temporal::PlacedMount> mounts;
    if (const auto* c = std::get_if<Configuration>(e.get())) {
      for (const auto& m : c->mount_actions) mounts.push_back({c->info.id, m});
    } else {
      mounts = store.mounts_of(EntityId(id));
    }
    json data = json::array();
    for (const auto& ev : temporal::entity_timeline(*e, mounts)) {
      json attrs{{"at", ev.at.to_string()}, {"kind", std::string(to_string(ev.kind))}, {"summary", ev.summary}};
      if (!ev.configuration.empty()) attrs["configuration"] = ev.configuration.str();
      data.push_back({{"type", "timeline-events"}, {"id", ev.id.str()}, {"attributes", attrs}});
    }
    return json_response(200, {{"data", data}});
  }

  // ---- nested items ---------------------------------------------------

  template <class T>
  HttpResponse list_items(EntityKind kind, const std::string& id) const {
    auto e = load(kind, id);
    Entity copy = *e;
    auto* items = items_of<T>(copy);
    if (!items) fail(ErrorCode::not_found, std::string(ItemKind<T>::type) + " do not exist on " + id);
    json data = json::array();
    for (const auto& it : *items) data.push_back(item_resource(ItemKind<T>::type, it, copy));
    return json_response(200, {{"data", data}, {"meta", {{"total", items->size()}}}});
  }

  template <class T>
  HttpResponse get_item(EntityKind kind, const std::string& id, const std::string& item) const {
    auto e = load(kind, id);
    Entity copy = *e;
    const T* it = find_item<T>(copy, item);
    if (!it) fail(ErrorCode::not_found, std::string(ItemKind<T>::type) + " '" + item + "' not found");
    return json_response(200, {{"data", item_resource(ItemKind<T>::type, *it, copy)}});
  }

  template <class T>
  HttpResponse item_doc(int status, const EntityId& parent, const std::string& item,
                        const std::vector<Violation>& warnings) const {
    auto e = store.get(parent);
    Entity copy = *e;
    const T* it = find_item<T>(copy, item);
    if (!it) fail(ErrorCode::internal, "item vanished after write");
    json doc{{"data", item_resource(ItemKind<T>::type, *it, copy)}};
    if (!warnings.empty()) doc["meta"] = {{"warnings", warnings_json(warnings)}};
    auto r = json_response(status, doc);
    r.headers["ETag"] = etag(info_of(copy).version);
    return r;
  }

  template <class T>
  T decode_new_item(const json& data, const std::string& id) const {
    json attrs = attributes_of(data);
    attrs["id"] = id;
    return in_attributes([&] { return decode_as<T>(attrs); });
  }

  template <class T>
  HttpResponse create_item(EntityKind kind, const std::string& id) const {
    auto e = load(kind, id, Action::update);
    Entity probe = *e;
    if (!items_of<T>(probe)) fail(ErrorCode::not_found, std::string(ItemKind<T>::type) + " do not exist on " + id);
    auto doc = parse_body(req);
    const auto& data = data_of(doc, ItemKind<T>::type);
    auto item_id = store.next_id(ItemKind<T>::prefix).str();
    T item = decode_new_item<T>(data, item_id);
    storage::StoredRevision rev;
    if constexpr (std::is_same_v<T, MountAction>) {
      rev = store.mount_transaction(EntityId(id), std::move(item), write());
    } else if constexpr (std::is_same_v<T, LocationAction>) {
      rev = store.add_location(EntityId(id), std::move(item), write());
    } else {
      rev = store.modify(
          EntityId(id), [&](Entity& x) { items_of<T>(x)->push_back(item); }, expected_version(req, &data), write());
    }
    return item_doc<T>(201, rev.entity_id, item_id, rev.warnings);
  }

  template <class T>
  HttpResponse update_item(EntityKind kind, const std::string& id, const std::string& item_id) const {
    auto e = load(kind, id, Action::update);
    Entity copy = *e;
    const T* cur = find_item<T>(copy, item_id);
    if (!cur) fail(ErrorCode::not_found, std::string(ItemKind<T>::type) + " '" + item_id + "' not found");
    auto doc = parse_body(req);
    const auto& data = data_of(doc, ItemKind<T>::type);
    json attrs = attributes_of(data);

    if constexpr (std::is_same_v<T, MountAction>) {
      if (attrs.contains("at")) {
        // Split: end the mount at `at` and continue with the changed fields.
        TimeInstant at = in_attributes([&] { return decode_as<TimeInstant>(attrs["at"], "/at"); });
        attrs.erase("at");
        attrs.erase("id");
        attrs.erase("interval");
        json base = encode(*cur);
        for (const auto& [k, v] : attrs.items()) base[k] = v;
        auto changed = in_attributes([&] { return decode_as<MountAction>(base); });
        auto rev = store.modify_mount(
            EntityId(id), EntityId(item_id), at,
            [&](MountAction& m) {
              auto keep_id = m.id;
              auto keep_interval = m.interval;
              m = changed;
              m.id = keep_id;
              m.interval = keep_interval;
            },
            write());
        auto after = store.get(EntityId(id));
        const auto& mounts = std::get<Configuration>(*after).mount_actions;
        std::string next = item_id;
        for (const auto& m : mounts) {
          if (m.child == cur->child && m.interval.begin == at) next = m.id.str();
        }
        return item_doc<T>(200, rev.entity_id, next, rev.warnings);
      }
    }

    json merged = encode(*cur);
    for (const auto& [k, v] : attrs.items()) {
      if (k == "id") continue;
      if (v.is_null()) {
        merged.erase(k);
      } else {
        merged[k] = v;
      }
    }
    T updated = in_attributes([&] { return decode_as<T>(merged); });
    auto rev = store.modify(
        EntityId(id),
        [&](Entity& x) {
          for (auto& it : *items_of<T>(x)) {
            if (it.id.str() == item_id) it = updated;
          }
        },
        expected_version(req, &data), write());
    return item_doc<T>(200, rev.entity_id, item_id, rev.warnings);
  }

  template <class T>
  HttpResponse delete_item(EntityKind kind, const std::string& id, const std::string& item_id) const {
    if constexpr (std::is_same_v<T, MountAction> || std::is_same_v<T, LocationAction>) {
      fail(ErrorCode::invalid_state, std::string(ItemKind<T>::type) + " are ended, not deleted");
    }
    auto e = load(kind, id, Action::update);
    Entity copy = *e;
    if (!find_item<T>(copy, item_id))
      fail(ErrorCode::not_found, std::string(ItemKind<T>::type) + " '" + item_id + "' not found");
    auto rev = store.modify(
        EntityId(id),
        [&](Entity& x) { std::erase_if(*items_of<T>(x), [&](const T& it) { return it.id.str() == item_id; }); },
        expected_version(req, nullptr), write());
    return entity_doc(200, rev.entity_id, rev.warnings);
  }

  HttpResponse add_parameter_value(EntityKind kind, const std::string& id, const std::string& param) const {
    auto e = load(kind, id, Action::update);
    Entity copy = *e;
    if (!find_item<Parameter>(copy, param)) fail(ErrorCode::not_found, "parameter '" + param + "' not found");
    auto doc = parse_body(req);
    const auto& data = data_of(doc, "parameter-values");
    json attrs = attributes_of(data);
    if (!attrs.contains("contact") && contact) attrs["contact"] = contact->str();
    auto value = in_attributes([&] { return decode_as<ParameterValue>(attrs); });
    auto rev = store.modify(
        EntityId(id),
        [&](Entity& x) {
          for (auto& p : *parameters_of(x)) {
            if (p.id.str() != param) continue;
            auto pos = std::upper_bound(p.values.begin(), p.values.end(), value.at,
                                        [](TimeInstant t, const ParameterValue& v) { return t < v.at; });
            p.values.insert(pos, value);
          }
        },
        expected_version(req, &data), write());
    return item_doc<Parameter>(201, rev.entity_id, param, rev.warnings);
  }

  HttpResponse create_attachment(EntityKind kind, const std::string& id) const {
    auto e = load(kind, id, Action::update);
    Entity probe = *e;
    if (!attachments_of(probe)) fail(ErrorCode::not_found, "attachments do not exist on " + id);
    Attachment a;
    a.id = store.next_id(ItemKind<Attachment>::prefix);
    a.uploaded_at = TimeInstant::now();
    a.uploaded_by = contact;
    std::optional<std::int64_t> expected = expected_version(req, nullptr);
    if (!req.parts.empty()) {
      const auto* file = req.part("file");
      if (!file) fail(ErrorCode::bad_request, "multipart upload needs a 'file' part", {{"pointer", "/file"}});
      auto ct = file->content_type.empty() ? std::string("application/octet-stream") : file->content_type;
      auto blob = store.put_blob(file->content, ct);
      a.origin = AttachmentOrigin::file;
      a.blob_ref = blob.content_hash;
      a.media_type = ct;
      const auto* label = req.part("label");
      a.label = label ? label->content : file->filename;
      const auto* preview = req.part("is_preview_image");
      a.is_preview_image = preview && preview->content == "true";
    } else {
      auto doc = parse_body(req);
      const auto& data = data_of(doc, "attachments");
      if (!expected) expected = expected_version(req, &data);
      json attrs = attributes_of(data);
      for (const char* k : {"origin", "blob_ref", "uploaded_at", "uploaded_by", "id"}) {
        if (attrs.contains(k))
          fail(ErrorCode::bad_request, std::string(k) + " is assigned by the server",
               {{"pointer", std::string("/data/attributes/") + k}});
      }
      attrs["origin"] = "url";
      a = [&] {
        auto parsed = in_attributes([&] { return decode_as<Attachment>(attrs); });
        parsed.id = a.id;
        parsed.uploaded_at = a.uploaded_at;
        parsed.uploaded_by = a.uploaded_by;
        return parsed;
      }();
    }
    auto rev = store.modify(
        EntityId(id), [&](Entity& x) { attachments_of(x)->push_back(a); }, expected, write());
    return item_doc<Attachment>(201, rev.entity_id, a.id.str(), rev.warnings);
  }

  HttpResponse attachment_content(EntityKind kind, const std::string& id, const std::string& aid) const {
    auto e = load(kind, id);
    Entity copy = *e;
    const auto* a = find_item<Attachment>(copy, aid);
    if (!a) fail(ErrorCode::not_found, "attachment '" + aid + "' not found");
    HttpResponse r;
    if (a->origin == AttachmentOrigin::url) {
      r.status = 303;
      r.headers["Location"] = a->url.value_or("");
      r.content_type = "text/plain";
      return r;
    }
    r.body = store.get_blob(a->blob_ref.value_or(""));
    r.content_type = a->media_type.empty() ? "application/octet-stream" : a->media_type;
    r.headers["ETag"] = "\"" + a->blob_ref.value_or("") + "\"";
    return r;
  }

  // ---- configuration state --------------------------------------------

  HttpResponse state(const std::string& id) const {
    auto e = load(EntityKind::configuration, id);
    auto at = instant_param(req, "at", TimeInstant::now());
    auto attrs = state_document(store, std::get<Configuration>(*e), at,
                                [&](const Entity& x) { return can(Action::read, x); });
    return json_response(200, {{"data", {{"type", "configuration-states"}, {"id", id}, {"attributes", attrs}}}});
  }

  // ---- search ---------------------------------------------------------

  HttpResponse search() const {
    std::optional<EntityKind> kind;
    for (const auto& [k, v] : req.query) {
      if (k.rfind("filter[", 0) != 0) continue;
      if (k != "filter[kind]") fail(ErrorCode::bad_request, "unknown filter field '" + k + "'", {{"parameter", k}});
      kind = kind_from_plural(v);
      if (!kind) kind = kind_from_string(v);
      if (!kind) fail(ErrorCode::bad_request, "unknown kind '" + v + "'", {{"parameter", k}});
    }
    auto q = req.param("q").value_or("");
    auto size = page_param(req, "page[size]", config.default_page_size, config.max_page_size);
    auto page = page_param(req, "page[number]", 1, std::numeric_limits<int>::max());
    auto hits = store.search(q, kind, [&](const Entity& e) { return can(Action::read, e); });
    json data = json::array();
    std::size_t first = (page - 1) * size;
    for (std::size_t i = first; i < hits.size() && i < first + size; ++i) {
      const auto& h = hits[i];
      auto e = store.get(h.ref.id);
      data.push_back({{"type", std::string(plural(h.ref.kind))},
                      {"id", h.ref.id.str()},
                      {"attributes", {{"name", e ? display_name(*e) : std::string()}}},
                      {"links", {{"self", canonical_url(config.base_url, h.ref)}}},
                      {"meta", {{"score", h.score}}}});
    }
    return json_response(200, {{"data", data}, {"meta", page_meta(hits.size(), page, size)}});
  }

  // ---- vocabulary -----------------------------------------------------

  EntityId actor() const {
    require_auth();
    if (!contact) fail(ErrorCode::forbidden, "principal has no linked contact");
    return *contact;
  }

  HttpResponse terms() const {
    vocab::TermQuery q;
    for (const auto& [k, v] : req.query) {
      if (k == "q" || k == "filter[q]" || k == "filter[text]") {
        q.text = v;
      } else if (k == "filter[category]") {
        q.category = vocab::category_from_string(v);
        if (!q.category) fail(ErrorCode::bad_request, "unknown category '" + v + "'", {{"parameter", k}});
      } else if (k == "filter[status]") {
        q.status = vocab::term_status_from_string(v);
        if (!q.status) fail(ErrorCode::bad_request, "unknown status '" + v + "'", {{"parameter", k}});
      } else if (k.rfind("filter[", 0) == 0) {
        fail(ErrorCode::bad_request, "unknown filter field '" + k + "'", {{"parameter", k}});
      }
    }
    q.page_size = page_param(req, "page[size]", 50, config.max_page_size);
    q.page = page_param(req, "page[number]", 1, std::numeric_limits<int>::max());
    auto page = store.vocabulary().list_terms(q);
    json data = json::array();
    for (const auto& t : page.items) data.push_back(term_resource(t));
    return json_response(200, {{"data", data}, {"meta", page_meta(page.total, page.page, page.page_size)}});
  }

  HttpResponse term(const std::string& id) const {
    auto t = store.vocabulary().get_term(EntityId(id));
    if (!t) fail(ErrorCode::not_found, "term '" + id + "' not found");
    json doc{{"data", term_resource(*t)}};
    if (auto ticket = store.vocabulary().ticket_for_term(t->id)) doc["included"] = {ticket_resource(*ticket)};
    return json_response(200, doc);
  }

  HttpResponse deprecate(const std::string& id) const {
    require_auth();
    auto t = store.vocabulary().deprecate(EntityId(id), principal.is_curator());
    return json_response(200, {{"data", term_resource(t)}});
  }

  HttpResponse propose() const {
    auto who = actor();
    auto doc = parse_body(req);
    const auto& data = data_of(doc, "proposals");
    auto attrs = attributes_of(data);
    auto draft = in_attributes([&] { return vocab::decode_draft(attrs); });
    auto p = store.vocabulary().propose_term(draft, who);
    auto r = json_response(201, {{"data", ticket_resource(p.ticket)}, {"included", {term_resource(p.term)}}});
    r.headers["Location"] = config.base_url + "/cv/proposals/" + p.ticket.id.str();
    return r;
  }

  HttpResponse tickets() const {
    require_auth();
    std::optional<vocab::TicketState> state;
    for (const auto& [k, v] : req.query) {
      if (k == "filter[state]") {
        for (auto s : {vocab::TicketState::open, vocab::TicketState::in_review, vocab::TicketState::accepted,
                       vocab::TicketState::rejected}) {
          if (to_string(s) == v) state = s;
        }
        if (!state) fail(ErrorCode::bad_request, "unknown ticket state '" + v + "'", {{"parameter", k}});
      } else if (k.rfind("filter[", 0) == 0) {
        fail(ErrorCode::bad_request, "unknown filter field '" + k + "'", {{"parameter", k}});
      }
    }
    json data = json::array();
    for (const auto& t : store.vocabulary().tickets(state)) data.push_back(ticket_resource(t));
    return json_response(200, {{"data", data}, {"meta", {{"total", data.size()}}}});
  }

  vocab::CurationTicket ticket(const std::string& id) const {
    require_auth();
    auto t = store.vocabulary().get_ticket(EntityId(id));
    if (!t) fail(ErrorCode::not_found, "proposal '" + id + "' not found");
    return *t;
  }

  HttpResponse ticket_doc(const vocab::CurationTicket& t, int status = 200) const {
    json doc{{"data", ticket_resource(t)}};
    if (auto term = store.vocabulary().get_term(t.term_id)) doc["included"] = {term_resource(*term)};
    return json_response(status, doc);
  }

  HttpResponse comment(const std::string& id) const {
    auto who = actor();
    ticket(id);
    auto doc = parse_body(req);
    auto attrs = attributes_of(data_of(doc, "comments"));
    auto message = string_attr(attrs, "message", true);
    return ticket_doc(store.vocabulary().comment(EntityId(id), who, message), 201);
  }

  HttpResponse review(const std::string& id) const {
    auto who = actor();
    ticket(id);
    return ticket_doc(store.vocabulary().start_review(EntityId(id), who, principal.is_curator()));
  }

  HttpResponse decide(const std::string& id) const {
    auto who = actor();
    ticket(id);
    auto doc = parse_body(req);
    auto attrs = attributes_of(data_of(doc, "decisions"));
    auto d = string_attr(attrs, "decision", true);
    vocab::Decision decision;
    if (d == "accept") {
      decision = vocab::Decision::accept;
    } else if (d == "reject") {
      decision = vocab::Decision::reject;
    } else {
      fail(ErrorCode::bad_request, "decision must be accept or reject", {{"pointer", "/data/attributes/decision"}});
    }
    auto edits = decode_edits(attrs.contains("edits") ? attrs["edits"] : json(nullptr));
    for (const auto& [k, _] : attrs.items()) {
      if (k != "decision" && k != "edits" && k != "message")
        fail(ErrorCode::bad_request, "unknown member '" + k + "'", {{"pointer", "/data/attributes/" + k}});
    }
    if (!principal.is_curator()) fail(ErrorCode::forbidden, "curator role required");
    auto message = string_attr(attrs, "message", false);
    if (!message.empty()) store.vocabulary().comment(EntityId(id), who, message);
    auto result = store.vocabulary().curate(EntityId(id), decision, edits, who, principal.is_curator());
    json refs = json::array();
    for (const auto& r : result.referencing_entities) refs.push_back(r.str());
    return json_response(200, {{"data", ticket_resource(result.ticket)},
                               {"included", {term_resource(result.term)}},
                               {"meta", {{"referencing_entities", refs}}}});
  }

  HttpResponse export_ttl() const {
    HttpResponse r;
    r.content_type = "text/turtle; charset=utf-8";
    r.body = store.vocabulary().export_skos(config.base_url);
    return r;
  }

  // ---- PIDs -----------------------------------------------------------

  json pid_resource(const storage::PidRecord& p) const {
    json attrs = storage::encode(p);
    return {{"type", "pids"}, {"id", p.handle}, {"attributes", attrs}};
  }

  pid::PidService& pid_service() const {
    if (!pids) fail(ErrorCode::handle_service_unavailable, "no handle service configured");
    return *pids;
  }

  HttpResponse mint(EntityKind kind, const std::string& id) const {
    load(kind, id, Action::update);
    auto result = pid_service().mint(EntityId(id), write());
    return json_response(result.already_minted ? 200 : 201,
                         {{"data", pid_resource(result.record)}, {"meta", {{"already_minted", result.already_minted}}}});
  }

  HttpResponse get_pid(EntityKind kind, const std::string& id) const {
    load(kind, id);
    auto rec = store.pid_record(EntityId(id));
    if (!rec) fail(ErrorCode::not_found, id + " has no PID");
    return json_response(200, {{"data", pid_resource(*rec)}});
  }

  HttpResponse sync_pid(EntityKind kind, const std::string& id) const {
    load(kind, id, Action::update);
    return json_response(200, {{"data", pid_resource(pid_service().sync(EntityId(id)))}});
  }

  // ---- auth -----------------------------------------------------------

  HttpResponse token() const {
    if (!issuer) fail(ErrorCode::not_found, "password login is not enabled");
    auto doc = parse_body(req);
    json attrs = doc;
    if (doc.is_object() && doc.contains("data")) attrs = attributes_of(data_of(doc, "credentials"));
    if (!attrs.is_object()) fail(ErrorCode::bad_request, "credentials must be an object");
    auto account = auth.login(string_attr(attrs, "username", true), string_attr(attrs, "password", true));
    return json_response(200,
                         {{"access_token", issuer->issue(account.id)},
                          {"token_type", "Bearer"},
                          {"expires_in", issuer->ttl().count()}},
                         "application/json");
  }

  HttpResponse me() const {
    require_auth();
    json groups = json::array();
    for (const auto& g : principal.groups) groups.push_back(g.str());
    json roles = json::array();
    for (auto r : principal.roles) roles.push_back(std::string(to_string(r)));
    json attrs{{"kind", std::string(to_string(principal.kind))},
               {"groups", groups},
               {"roles", roles},
               {"contact", contact ? json(contact->str()) : json(nullptr)}};
    if (principal.account) {
      if (auto a = store.account(*principal.account)) attrs["username"] = a->username;
    }
    return json_response(200, {{"data",
                                {{"type", "principals"},
                                 {"id", principal.account ? principal.account->str() : std::string()},
                                 {"attributes", attrs}}}});
  }

  HttpResponse groups() const {
    require_auth();
    json data = json::array();
    for (const auto& g : store.groups()) {
      data.push_back({{"type", "groups"}, {"id", g.id.str()}, {"attributes", {{"display_name", g.display_name}}}});
    }
    return json_response(200, {{"data", data}});
  }
};

template <class T>
std::optional<HttpResponse> item_routes(const Handlers& h, std::string_view method, EntityKind kind,
                                        const std::vector<std::string>& s) {
  // s = {kind, id, collection, [item]}
  if (s.size() == 3) {
    if (method == "GET") return h.list_items<T>(kind, s[1]);
    if (method == "POST") return h.create_item<T>(kind, s[1]);
    return method_not_allowed();
  }
  if (s.size() == 4) {
    if (method == "GET") return h.get_item<T>(kind, s[1], s[3]);
    if (method == "PATCH") return h.update_item<T>(kind, s[1], s[3]);
    if (method == "DELETE") return h.delete_item<T>(kind, s[1], s[3]);
    return method_not_allowed();
  }
  return std::nullopt;
}

}  // namespace

HttpResponse ApiService::route(Context& cx) {
  Handlers h{store_, config_, *authenticator_, issuer_.get(), pids_.get(), cx.req, cx.principal, cx.contact};
  const auto& s = cx.segs;
  std::string method = cx.req.method == "HEAD" ? "GET" : cx.req.method;
  auto not_found = [&]() -> HttpResponse { fail(ErrorCode::not_found, "no route for " + cx.req.path); };
  if (s.empty()) return not_found();

  if (s[0] == "healthz" && s.size() == 1) {
    if (method != "GET") return method_not_allowed();
    return json_response(200, {{"status", "ok"}}, "application/json");
  }
  if (s[0] == "auth" && s.size() == 2 && s[1] == "token") {
    if (method != "POST") return method_not_allowed();
    return h.token();
  }
  if (s[0] == "me" && s.size() == 1) return method == "GET" ? h.me() : method_not_allowed();
  if (s[0] == "groups" && s.size() == 1) return method == "GET" ? h.groups() : method_not_allowed();
  if (s[0] == "search" && s.size() == 1) return method == "GET" ? h.search() : method_not_allowed();

  if (s[0] == "cv") {
    if (s.size() == 2 && s[1] == "export.ttl") return method == "GET" ? h.export_ttl() : method_not_allowed();
    if (s.size() >= 2 && s[1] == "terms") {
      if (s.size() == 2) return method == "GET" ? h.terms() : method_not_allowed();
      if (s.size() == 3) return method == "GET" ? h.term(s[2]) : method_not_allowed();
      if (s.size() == 4 && s[3] == "deprecate") return method == "POST" ? h.deprecate(s[2]) : method_not_allowed();
    }
    if (s.size() >= 2 && s[1] == "proposals") {
      if (s.size() == 2) {
        if (method == "GET") return h.tickets();
        if (method == "POST") return h.propose();
        return method_not_allowed();
      }
      if (s.size() == 3) return method == "GET" ? h.ticket_doc(h.ticket(s[2])) : method_not_allowed();
      if (s.size() == 4 && method != "POST") return method_not_allowed();
      if (s.size() == 4 && s[3] == "comments") return h.comment(s[2]);
      if (s.size() == 4 && s[3] == "review") return h.review(s[2]);
      if (s.size() == 4 && s[3] == "decision") return h.decide(s[2]);
    }
    return not_found();
  }

  auto kind = kind_from_plural(s[0]);
  if (!kind) return not_found();
  if (s.size() == 1) {
    if (method == "GET") return h.list(*kind);
    if (method == "POST") return h.create(*kind);
    return method_not_allowed();
  }
  const auto& id = s[1];
  if (s.size() == 2) {
    if (method == "GET") return h.get(*kind, id);
    if (method == "PATCH") return h.update(*kind, id);
    if (method == "DELETE") return h.remove(*kind, id);
    return method_not_allowed();
  }
  const auto& sub = s[2];
  if (sub == "revisions") {
    if (method != "GET") return method_not_allowed();
    if (s.size() == 3) return h.revisions(*kind, id);
    if (s.size() == 4) return h.revision(*kind, id, s[3]);
  }
  if (sub == "timeline" && s.size() == 3) return method == "GET" ? h.timeline(*kind, id) : method_not_allowed();
  if (sub == "pid") {
    if (s.size() == 3) {
      if (method == "GET") return h.get_pid(*kind, id);
      if (method == "POST") return h.mint(*kind, id);
      return method_not_allowed();
    }
    if (s.size() == 4 && s[3] == "sync") return method == "POST" ? h.sync_pid(*kind, id) : method_not_allowed();
  }
  if (sub == "attachments") {
    if (s.size() == 3 && method == "POST") return h.create_attachment(*kind, id);
    if (s.size() == 5 && s[4] == "content")
      return method == "GET" ? h.attachment_content(*kind, id, s[3]) : method_not_allowed();
    if (auto r = item_routes<Attachment>(h, method, *kind, s)) return *r;
  }
  if (sub == "parameters") {
    if (s.size() == 5 && s[4] == "values")
      return method == "POST" ? h.add_parameter_value(*kind, id, s[3]) : method_not_allowed();
    if (auto r = item_routes<Parameter>(h, method, *kind, s)) return *r;
  }
  if (sub == "actions") {
    if (auto r = item_routes<GenericAction>(h, method, *kind, s)) return *r;
  }
  if (*kind == EntityKind::device && sub == "measured-quantities") {
    if (auto r = item_routes<MeasuredQuantity>(h, method, *kind, s)) return *r;
  }
  if (*kind == EntityKind::configuration) {
    if (sub == "mounts") {
      if (auto r = item_routes<MountAction>(h, method, *kind, s)) return *r;
    }
    if (sub == "locations") {
      if (auto r = item_routes<LocationAction>(h, method, *kind, s)) return *r;
    }
    if (sub == "state" && s.size() == 3) return method == "GET" ? h.state(id) : method_not_allowed();
  }
  return not_found();
}

}  // namespace sms::api
