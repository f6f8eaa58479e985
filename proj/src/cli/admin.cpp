#include "sms/cli/admin.hpp"

#include <sys/stat.h>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "sms/api/auth.hpp"
#include "sms/core/codec.hpp"
#include "sms/core/errors.hpp"
#include "sms/vocabulary/turtle.hpp"

namespace sms::cli {

using nlohmann::json;

namespace {

const char* const kSections[] = {"groups",   "accounts",  "terms",   "contacts",
                                 "sites",    "platforms", "devices", "configurations"};

const std::pair<const char*, EntityKind> kEntitySections[] = {
    {"contacts", EntityKind::contact},     {"sites", EntityKind::site},
    {"platforms", EntityKind::platform},   {"devices", EntityKind::device},
    {"configurations", EntityKind::configuration},
};

[[noreturn]] void bad(std::string msg, const std::string& pointer) {
  throw Error(ErrorCode::bad_request, std::move(msg), {{"pointer", pointer}});
}

const json& section(const json& bundle, const char* name) {
  static const json empty = json::array();
  if (!bundle.contains(name)) return empty;
  if (!bundle[name].is_array()) bad(std::string(name) + " must be an array", std::string("/") + name);
  return bundle[name];
}

void resolve_refs(json& j, storage::Transaction& tx, const std::string& path) {
  if (j.is_object()) {
    for (auto& [k, v] : j.items()) resolve_refs(v, tx, path + "/" + k);
  } else if (j.is_array()) {
    for (std::size_t i = 0; i < j.size(); ++i) resolve_refs(j[i], tx, path + "/" + std::to_string(i));
  } else if (j.is_string()) {
    const auto& s = j.get_ref<const std::string&>();
    if (s.size() < 2 || s[0] != '@') return;
    auto slash = s.find('/');
    if (slash == std::string::npos) bad("malformed reference " + s, path);
    auto type = s.substr(1, slash - 1);
    auto key = s.substr(slash + 1);
    if (auto c = vocabulary::category_from_string(type)) {
      auto t = tx.find_term(*c, key);
      if (!t) bad("unknown term " + s, path);
      j = t->id.str();
    } else if (auto k = kind_from_string(type)) {
      auto e = tx.find_by_natural_key(*k, key);
      if (!e) bad("unknown " + type + " " + key, path);
      j = info_of(*e).id.str();
    } else {
      bad("unknown reference type in " + s, path);
    }
  }
}

std::string natural_key_of(const json& rec, EntityKind kind, const std::string& path) {
  const char* field = kind == EntityKind::contact                                          ? "email"
                      : (kind == EntityKind::device || kind == EntityKind::platform) ? "short_name"
                                                                                           : "label";
  if (!rec.is_object() || !rec.contains(field) || !rec[field].is_string())
    bad(std::string(field) + " is required", path + "/" + field);
  return rec[field].get<std::string>();
}

}  // namespace

std::size_t SeedSummary::total_created() const {
  std::size_t n = 0;
  for (const auto& [_, c] : created) n += c;
  return n;
}

json SeedSummary::to_json() const {
  json out = json::object();
  for (const char* s : kSections) {
    auto c = created.count(s) ? created.at(s) : 0;
    auto k = skipped.count(s) ? skipped.at(s) : 0;
    out[s] = {{"created", c}, {"skipped", k}};
  }
  return out;
}

SeedSummary seed(storage::Store& store, const json& bundle) {
  if (!bundle.is_object()) bad("seed bundle must be a JSON object", "");
  for (const auto& [k, _] : bundle.items()) {
    if (std::none_of(std::begin(kSections), std::end(kSections), [&](const char* s) { return k == s; }))
      bad("unknown section " + k, "/" + k);
  }
  SeedSummary summary;
  for (const char* s : kSections) {
    summary.created[s] = 0;
    summary.skipped[s] = 0;
  }

  // Account and group lookups take the store lock, so they happen before the
  // transaction; so does password hashing.
  std::vector<storage::Group> groups;
  for (std::size_t i = 0; i < section(bundle, "groups").size(); ++i) {
    const auto& g = section(bundle, "groups")[i];
    auto path = "/groups/" + std::to_string(i);
    if (!g.is_object() || !g.contains("id") || !g["id"].is_string()) bad("group id is required", path + "/id");
    storage::Group group{GroupId(g["id"].get<std::string>()), g.value("display_name", g["id"].get<std::string>())};
    if (store.group(group.id)) {
      ++summary.skipped["groups"];
    } else {
      groups.push_back(group);
    }
  }
  std::vector<storage::Account> accounts;
  for (std::size_t i = 0; i < section(bundle, "accounts").size(); ++i) {
    const auto& a = section(bundle, "accounts")[i];
    auto path = "/accounts/" + std::to_string(i);
    if (!a.is_object() || !a.contains("username") || !a["username"].is_string())
      bad("username is required", path + "/username");
    auto username = a["username"].get<std::string>();
    if (store.account_by_username(username)) {
      ++summary.skipped["accounts"];
      continue;
    }
    storage::Account acc;
    acc.id = AccountId("u-" + username);
    acc.username = username;
    acc.given_name = a.value("given_name", "");
    acc.family_name = a.value("family_name", "");
    acc.email = a.value("email", "");
    acc.organization = a.value("organization", "");
    if (a.contains("password")) acc.password_hash = api::hash_password(a["password"].get<std::string>());
    for (const auto& g : a.value("groups", json::array())) acc.groups.insert(GroupId(g.get<std::string>()));
    for (const auto& r : a.value("roles", json::array())) {
      auto role = storage::role_from_string(r.get<std::string>());
      if (!role) bad("unknown role " + r.get<std::string>(), path + "/roles");
      acc.roles.insert(*role);
    }
    acc.created_at = TimeInstant::now();
    accounts.push_back(std::move(acc));
  }

  store.transaction([&](storage::Transaction& tx) {
    for (const auto& g : groups) {
      tx.put_group(g);
      ++summary.created["groups"];
    }
    for (const auto& a : accounts) {
      tx.put_account(a);
      ++summary.created["accounts"];
    }
    const auto& terms = section(bundle, "terms");
    for (std::size_t i = 0; i < terms.size(); ++i) {
      auto draft = vocabulary::decode_draft(terms[i], "/terms/" + std::to_string(i));
      auto [term, outcome] = tx.upsert_term(draft);
      ++(outcome == vocabulary::Vocabulary::UpsertOutcome::created ? summary.created : summary.skipped)["terms"];
    }
    for (const auto& [name, kind] : kEntitySections) {
      const auto& records = section(bundle, name);
      for (std::size_t i = 0; i < records.size(); ++i) {
        auto path = std::string("/") + name + "/" + std::to_string(i);
        auto key = natural_key_of(records[i], kind, path);
        if (tx.find_by_natural_key(kind, key)) {
          ++summary.skipped[name];
          continue;
        }
        json rec = records[i];
        resolve_refs(rec, tx, path);
        rec["id"] = tx.next_id(id_prefix(kind)).str();
        tx.put_entity(decode_entity(rec, kind), std::nullopt);
        ++summary.created[name];
      }
    }
  });
  return summary;
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::not_found, "cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return json::parse(ss.str());
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::bad_request, path.string() + ": " + e.what(), {{"byte", e.byte}});
  }
}

std::shared_ptr<const Entity> find_configuration(const storage::Store& store, const std::string& ref) {
  if (auto e = store.get(EntityId(ref)); e && kind_of(*e) == EntityKind::configuration) return e;
  return store.find_by_natural_key(EntityKind::configuration, ref);
}

namespace {

std::string num(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

std::string offset_text(const json& o) {
  return "(" + num(o.value("x", 0.0)) + ", " + num(o.value("y", 0.0)) + ", " + num(o.value("z", 0.0)) + ")";
}

std::string position_text(const json& p) {
  auto kind = p.value("kind", "undefined");
  if (kind == "static") {
    const auto& l = p["location"];
    return "lat " + num(l["latitude"].get<double>()) + " lon " + num(l["longitude"].get<double>()) + " h " +
           num(l["height"].get<double>()) + " + " + offset_text(p["offset"]) + " m";
  }
  if (kind == "dynamic") {
    return "dynamic from " + p["x_source"]["device"].get<std::string>() + "/" +
           p["y_source"]["device"].get<std::string>() + "/" + p["z_source"]["device"].get<std::string>();
  }
  return "no location";
}

void render_node(const json& n, int depth, std::string& out) {
  out += std::string(static_cast<std::size_t>(depth) * 2, ' ') + "- ";
  out += n["name"].is_string() ? n["name"].get<std::string>() : std::string("(restricted)");
  out += " [" + n["type"].get<std::string>() + " " + n["id"].get<std::string>() + "]";
  out += " offset " + offset_text(n["mount"]["offset"]);
  out += " at " + position_text(n["position"]) + "\n";
  for (const auto& c : n["children"]) render_node(c, depth + 1, out);
}

}  // namespace

std::string render_state(const json& state) {
  std::string out = state.value("label", "") + " (" + state["configuration"].get<std::string>() + ") at " +
                    state["at"].get<std::string>() + "\n";
  const auto& loc = state["location"];
  if (loc.is_object() && loc.contains("static")) {
    const auto& s = loc["static"];
    out += "location: lat " + num(s["latitude"].get<double>()) + " lon " + num(s["longitude"].get<double>()) +
           " h " + num(s["height"].get<double>()) + " (EPSG:" + s["epsg_code"].get<std::string>() + ")\n";
  } else if (loc.is_object()) {
    out += "location: dynamic\n";
  } else {
    out += "location: none\n";
  }
  if (state["tree"].empty()) out += "(nothing mounted)\n";
  for (const auto& n : state["tree"]) render_node(n, 0, out);
  return out;
}

namespace {

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::not_found, "cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t parse_size(const std::string& text, const std::string& what) {
  try {
    std::size_t used = 0;
    auto v = std::stoull(text, &used);
    if (used == text.size()) return static_cast<std::size_t>(v);
  } catch (const std::exception&) {
  }
  throw Error(ErrorCode::bad_request, what + " must be a non-negative integer, got '" + text + "'");
}

}  // namespace

vocabulary::ImportSummary import_vocabulary(storage::Store& store, const std::filesystem::path& path) {
  auto text = read_text(path);
  std::vector<vocabulary::ImportRow> rows;
  if (path.extension() == ".ttl") {
    rows = vocabulary::drafts_from_skos(vocabulary::parse_turtle(text));
  } else {
    rows = vocabulary::parse_terms_jsonl(text);
  }
  return store.vocabulary().import_terms(rows);
}

std::string Settings::effective_base_url() const {
  if (!base_url.empty()) return base_url;
  return "http://" + bind + ":" + std::to_string(port);
}

Settings load_settings(const std::optional<std::filesystem::path>& config_file, const EnvLookup& env) {
  Settings s;
  if (config_file) {
    auto j = read_json_file(*config_file);
    if (!j.is_object()) throw Error(ErrorCode::bad_request, config_file->string() + ": expected a JSON object");
    for (const auto& [k, v] : j.items()) {
      auto text = [&, key = k](const json& value) {
        if (!value.is_string()) throw Error(ErrorCode::bad_request, "config " + key + " must be a string");
        return value.get<std::string>();
      };
      auto number = [&, key = k](const json& value) {
        if (!value.is_number_unsigned()) throw Error(ErrorCode::bad_request, "config " + key + " must be a number");
        return value.get<std::size_t>();
      };
      if (k == "data_dir") s.data_dir = text(v);
      else if (k == "bind") s.bind = text(v);
      else if (k == "port") s.port = static_cast<int>(number(v));
      else if (k == "base_url") s.base_url = text(v);
      else if (k == "blob_limit") s.blob_limit = number(v);
      else if (k == "handle_endpoint") s.handle_endpoint = text(v);
      else if (k == "handle_token") s.handle_token = text(v);
      else if (k == "token_secret") s.token_secret = text(v);
      else throw Error(ErrorCode::bad_request, config_file->string() + ": unknown setting " + k);
    }
  }
  auto var = [&](const char* name) -> std::optional<std::string> {
    const char* v = env ? env(name) : nullptr;
    if (!v) return std::nullopt;
    return std::string(v);
  };
  if (auto v = var("SMS_DATA_DIR")) s.data_dir = *v;
  if (auto v = var("SMS_BIND")) s.bind = *v;
  if (auto v = var("SMS_PORT")) s.port = static_cast<int>(parse_size(*v, "SMS_PORT"));
  if (auto v = var("SMS_BASE_URL")) s.base_url = *v;
  if (auto v = var("SMS_BLOB_LIMIT")) s.blob_limit = parse_size(*v, "SMS_BLOB_LIMIT");
  if (auto v = var("SMS_HANDLE_ENDPOINT")) s.handle_endpoint = *v;
  if (auto v = var("SMS_HANDLE_TOKEN")) s.handle_token = *v;
  if (auto v = var("SMS_TOKEN_SECRET")) s.token_secret = *v;
  if (s.port < 0 || s.port > 65535) throw Error(ErrorCode::bad_request, "port out of range");
  return s;
}

std::string token_secret_for(const Settings& settings) {
  if (!settings.token_secret.empty()) return settings.token_secret;
  auto path = settings.data_dir / "token_secret";
  if (std::filesystem::exists(path)) {
    auto text = read_text(path);
    while (!text.empty() && (text.back() == '\n' || text.back() == '\r')) text.pop_back();
    if (!text.empty()) return text;
  }
  std::filesystem::create_directories(settings.data_dir);
  auto secret = api::random_hex(32);
  {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error(ErrorCode::internal, "cannot write " + path.string());
    out << secret << "\n";
  }
  ::chmod(path.c_str(), 0600);
  return secret;
}

}  // namespace sms::cli
