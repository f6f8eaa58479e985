#include "sms/core/codec.hpp"

#include <set>

#include "sms/core/errors.hpp"

namespace sms {

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw Error(ErrorCode::bad_request, "invalid document at '" + (path.empty() ? "/" : path) + "': " + what,
              Json{{"pointer", path.empty() ? "/" : path}});
}

void decode(const Json& j, const std::string& path, std::string& out) {
  if (!j.is_string()) fail(path, "expected a string");
  out = j.get<std::string>();
}

void decode(const Json& j, const std::string& path, double& out) {
  if (!j.is_number()) fail(path, "expected a number");
  out = j.get<double>();
}

void decode(const Json& j, const std::string& path, bool& out) {
  if (!j.is_boolean()) fail(path, "expected a boolean");
  out = j.get<bool>();
}

void decode(const Json& j, const std::string& path, std::int64_t& out) {
  if (!j.is_number_integer()) fail(path, "expected an integer");
  out = j.get<std::int64_t>();
}

template <class Tag>
void decode(const Json& j, const std::string& path, Identifier<Tag>& out) {
  decode(j, path, out.value);
}

void decode(const Json& j, const std::string& path, Visibility& out) {
  std::string s;
  decode(j, path, s);
  auto v = visibility_from_string(s);
  if (!v) fail(path, "visibility must be one of private, internal, public");
  out = *v;
}

void decode(const Json& j, const std::string& path, ConfigurationStatus& out) {
  std::string s;
  decode(j, path, s);
  auto v = configuration_status_from_string(s);
  if (!v) fail(path, "status must be one of draft, active, deprecated");
  out = *v;
}

void decode(const Json& j, const std::string& path, AttachmentOrigin& out) {
  std::string s;
  decode(j, path, s);
  if (s == "file") {
    out = AttachmentOrigin::file;
  } else if (s == "url") {
    out = AttachmentOrigin::url;
  } else {
    fail(path, "origin must be 'file' or 'url'");
  }
}

template <class T>
void decode(const Json& j, const std::string& path, std::optional<T>& out) {
  if (j.is_null()) {
    out.reset();
    return;
  }
  T v{};
  decode(j, path, v);
  out = std::move(v);
}

template <class T>
void decode(const Json& j, const std::string& path, std::vector<T>& out) {
  if (!j.is_array()) fail(path, "expected an array");
  out.clear();
  out.reserve(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    T v{};
    decode(j[i], path + "/" + std::to_string(i), v);
    out.push_back(std::move(v));
  }
}

// Reads members of one JSON object, tracking which keys were consumed so
// leftovers can be reported.
class ObjectReader {
 public:
  ObjectReader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(path_, "expected an object");
  }

  template <class T>
  void required(const char* key, T& out) {
    auto it = j_.find(key);
    if (it == j_.end() || it->is_null()) fail(path_ + "/" + key, "missing required member");
    seen_.insert(key);
    decode(*it, path_ + "/" + key, out);
  }

  template <class T>
  void optional(const char* key, T& out) {
    auto it = j_.find(key);
    if (it == j_.end()) return;
    seen_.insert(key);
    if (it->is_null()) {
      if constexpr (requires { out.reset(); }) out.reset();
      return;
    }
    decode(*it, path_ + "/" + key, out);
  }

  bool has(const char* key) const { return j_.contains(key) && !j_.at(key).is_null(); }
  void ignore(const char* key) { seen_.insert(key); }
  const std::string& path() const { return path_; }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) fail(path_ + "/" + key, "unknown member");
    }
  }

 private:
  const Json& j_;
  std::string path_;
  std::set<std::string, std::less<>> seen_;
};

template <class T>
Json encode_list(const std::vector<T>& items) {
  Json out = Json::array();
  for (const auto& item : items) out.push_back(encode(item));
  return out;
}

template <class T>
void put_opt(Json& j, const char* key, const std::optional<T>& v) {
  if (!v) return;
  if constexpr (std::is_same_v<T, TimeInstant>) {
    j[key] = v->to_string();
  } else if constexpr (requires { v->value; }) {
    j[key] = v->value;
  } else if constexpr (std::is_same_v<T, Offset>) {
    j[key] = encode(*v);
  } else if constexpr (std::is_same_v<T, EntityRef>) {
    j[key] = encode(*v);
  } else {
    j[key] = *v;
  }
}

Json encode_ids(const std::vector<EntityId>& ids) {
  Json out = Json::array();
  for (const auto& id : ids) out.push_back(id.value);
  return out;
}

void encode_info(const RecordInfo& info, Json& j) {
  j["id"] = info.id.value;
  j["created_at"] = info.created_at.to_string();
  j["updated_at"] = info.updated_at.to_string();
  put_opt(j, "created_by", info.created_by);
  put_opt(j, "updated_by", info.updated_by);
  j["version"] = info.version;
  j["archived"] = info.archived;
}

void decode_info(ObjectReader& r, RecordInfo& info) {
  r.optional("id", info.id);
  r.optional("created_at", info.created_at);
  r.optional("updated_at", info.updated_at);
  r.optional("created_by", info.created_by);
  r.optional("updated_by", info.updated_by);
  r.optional("version", info.version);
  r.optional("archived", info.archived);
  r.ignore("kind");
}

Json encode_record(const Device& d) {
  Json j;
  encode_info(d.info, j);
  j["kind"] = "device";
  j["short_name"] = d.short_name;
  j["description"] = d.description;
  j["urn"] = d.urn;
  put_opt(j, "pid", d.pid);
  put_opt(j, "device_type", d.device_type);
  put_opt(j, "manufacturer", d.manufacturer);
  j["model"] = d.model;
  j["serial_number"] = d.serial_number;
  j["inventory_number"] = d.inventory_number;
  j["visibility"] = to_string(d.visibility);
  j["owner_group"] = d.owner_group.value;
  j["measured_quantities"] = encode_list(d.measured_quantities);
  j["contacts"] = encode_list(d.contacts);
  j["parameters"] = encode_list(d.parameters);
  j["custom_fields"] = encode_list(d.custom_fields);
  j["attachments"] = encode_list(d.attachments);
  j["actions"] = encode_list(d.actions);
  return j;
}

void decode_record(ObjectReader& r, Device& d) {
  decode_info(r, d.info);
  r.optional("short_name", d.short_name);
  r.optional("description", d.description);
  r.optional("urn", d.urn);
  r.optional("pid", d.pid);
  r.optional("device_type", d.device_type);
  r.optional("manufacturer", d.manufacturer);
  r.optional("model", d.model);
  r.optional("serial_number", d.serial_number);
  r.optional("inventory_number", d.inventory_number);
  r.optional("visibility", d.visibility);
  r.optional("owner_group", d.owner_group);
  r.optional("measured_quantities", d.measured_quantities);
  r.optional("contacts", d.contacts);
  r.optional("parameters", d.parameters);
  r.optional("custom_fields", d.custom_fields);
  r.optional("attachments", d.attachments);
  r.optional("actions", d.actions);
}

Json encode_record(const Platform& p) {
  Json j;
  encode_info(p.info, j);
  j["kind"] = "platform";
  j["short_name"] = p.short_name;
  j["description"] = p.description;
  j["urn"] = p.urn;
  put_opt(j, "pid", p.pid);
  put_opt(j, "platform_type", p.platform_type);
  put_opt(j, "manufacturer", p.manufacturer);
  j["model"] = p.model;
  j["serial_number"] = p.serial_number;
  j["inventory_number"] = p.inventory_number;
  j["visibility"] = to_string(p.visibility);
  j["owner_group"] = p.owner_group.value;
  j["contacts"] = encode_list(p.contacts);
  j["parameters"] = encode_list(p.parameters);
  j["custom_fields"] = encode_list(p.custom_fields);
  j["attachments"] = encode_list(p.attachments);
  j["actions"] = encode_list(p.actions);
  return j;
}

void decode_record(ObjectReader& r, Platform& p) {
  decode_info(r, p.info);
  r.optional("short_name", p.short_name);
  r.optional("description", p.description);
  r.optional("urn", p.urn);
  r.optional("pid", p.pid);
  r.optional("platform_type", p.platform_type);
  r.optional("manufacturer", p.manufacturer);
  r.optional("model", p.model);
  r.optional("serial_number", p.serial_number);
  r.optional("inventory_number", p.inventory_number);
  r.optional("visibility", p.visibility);
  r.optional("owner_group", p.owner_group);
  r.optional("contacts", p.contacts);
  r.optional("parameters", p.parameters);
  r.optional("custom_fields", p.custom_fields);
  r.optional("attachments", p.attachments);
  r.optional("actions", p.actions);
}

Json encode_record(const Configuration& c) {
  Json j;
  encode_info(c.info, j);
  j["kind"] = "configuration";
  j["label"] = c.label;
  j["description"] = c.description;
  put_opt(j, "pid", c.pid);
  j["status"] = to_string(c.status);
  put_opt(j, "site", c.site);
  j["project"] = c.project;
  j["visibility"] = to_string(c.visibility);
  j["owner_group"] = c.owner_group.value;
  j["contacts"] = encode_list(c.contacts);
  j["parameters"] = encode_list(c.parameters);
  j["custom_fields"] = encode_list(c.custom_fields);
  j["attachments"] = encode_list(c.attachments);
  j["actions"] = encode_list(c.actions);
  j["mount_actions"] = encode_list(c.mount_actions);
  j["location_actions"] = encode_list(c.location_actions);
  return j;
}

void decode_record(ObjectReader& r, Configuration& c) {
  decode_info(r, c.info);
  r.optional("label", c.label);
  r.optional("description", c.description);
  r.optional("pid", c.pid);
  r.optional("status", c.status);
  r.optional("site", c.site);
  r.optional("project", c.project);
  r.optional("visibility", c.visibility);
  r.optional("owner_group", c.owner_group);
  r.optional("contacts", c.contacts);
  r.optional("parameters", c.parameters);
  r.optional("custom_fields", c.custom_fields);
  r.optional("attachments", c.attachments);
  r.optional("actions", c.actions);
  r.optional("mount_actions", c.mount_actions);
  r.optional("location_actions", c.location_actions);
}

Json encode_record(const Site& s) {
  Json j;
  encode_info(s.info, j);
  j["kind"] = "site";
  j["label"] = s.label;
  j["description"] = s.description;
  j["geometry"] = encode_list(s.geometry);
  put_opt(j, "parent_site", s.parent_site);
  put_opt(j, "usage", s.usage);
  j["visibility"] = to_string(s.visibility);
  j["owner_group"] = s.owner_group.value;
  j["contacts"] = encode_list(s.contacts);
  j["attachments"] = encode_list(s.attachments);
  return j;
}

void decode_record(ObjectReader& r, Site& s) {
  decode_info(r, s.info);
  r.optional("label", s.label);
  r.optional("description", s.description);
  r.optional("geometry", s.geometry);
  r.optional("parent_site", s.parent_site);
  r.optional("usage", s.usage);
  r.optional("visibility", s.visibility);
  r.optional("owner_group", s.owner_group);
  r.optional("contacts", s.contacts);
  r.optional("attachments", s.attachments);
}

Json encode_record(const Contact& c) {
  Json j;
  encode_info(c.info, j);
  j["kind"] = "contact";
  j["given_name"] = c.given_name;
  j["family_name"] = c.family_name;
  j["email"] = c.email;
  j["organization"] = c.organization;
  put_opt(j, "orcid", c.orcid);
  put_opt(j, "account", c.account);
  return j;
}

void decode_record(ObjectReader& r, Contact& c) {
  decode_info(r, c.info);
  r.optional("given_name", c.given_name);
  r.optional("family_name", c.family_name);
  r.optional("email", c.email);
  r.optional("organization", c.organization);
  r.optional("orcid", c.orcid);
  r.optional("account", c.account);
}

}  // namespace

Json encode(const Entity& entity) {
  return std::visit([](const auto& record) { return encode_record(record); }, entity);
}

Entity decode_entity(const Json& j, EntityKind kind) {
  Entity e = make_empty(kind);
  ObjectReader r(j, "");
  if (r.has("kind")) {
    std::string k;
    r.required("kind", k);
    if (k != to_string(kind)) fail("/kind", "expected kind '" + std::string(to_string(kind)) + "'");
  }
  std::visit([&](auto& record) { decode_record(r, record); }, e);
  r.finish();
  return e;
}

Entity decode_entity(const Json& j) {
  if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string()) fail("/kind", "missing entity kind");
  auto kind = kind_from_string(j["kind"].get<std::string>());
  if (!kind) fail("/kind", "unknown entity kind");
  return decode_entity(j, *kind);
}

Json encode(const TimeInterval& v) {
  Json j{{"begin", v.begin.to_string()}};
  if (v.end) j["end"] = v.end->to_string();
  return j;
}

Json encode(const EntityRef& v) { return Json{{"kind", to_string(v.kind)}, {"id", v.id.value}}; }

Json encode(const MeasuredQuantity& v) {
  Json j;
  j["id"] = v.id.value;
  j["compartment"] = v.compartment.value;
  j["sampling_media"] = v.sampling_media.value;
  j["quantity"] = v.quantity.value;
  j["unit"] = v.unit.value;
  put_opt(j, "range_min", v.range_min);
  put_opt(j, "range_max", v.range_max);
  put_opt(j, "accuracy", v.accuracy);
  put_opt(j, "accuracy_unit", v.accuracy_unit);
  put_opt(j, "resolution", v.resolution);
  put_opt(j, "resolution_unit", v.resolution_unit);
  j["label"] = v.label;
  return j;
}

Json encode(const ContactRole& v) { return Json{{"contact", v.contact.value}, {"role", v.role.value}}; }

Json encode(const ParameterValue& v) {
  Json j{{"at", v.at.to_string()}, {"value", v.value}};
  put_opt(j, "contact", v.contact);
  return j;
}

Json encode(const Parameter& v) {
  Json j{{"id", v.id.value}, {"label", v.label}, {"description", v.description}};
  put_opt(j, "unit", v.unit);
  j["values"] = encode_list(v.values);
  return j;
}

Json encode(const CustomField& v) { return Json{{"key", v.key}, {"value", v.value}}; }

Json encode(const Attachment& v) {
  Json j{{"id", v.id.value},
         {"label", v.label},
         {"origin", v.origin == AttachmentOrigin::file ? "file" : "url"},
         {"media_type", v.media_type},
         {"is_preview_image", v.is_preview_image},
         {"uploaded_at", v.uploaded_at.to_string()}};
  put_opt(j, "url", v.url);
  put_opt(j, "blob_ref", v.blob_ref);
  put_opt(j, "uploaded_by", v.uploaded_by);
  return j;
}

Json encode(const GenericAction& v) {
  Json j{{"id", v.id.value}, {"kind", v.kind.value}, {"description", v.description}};
  if (const auto* t = std::get_if<TimeInstant>(&v.when)) {
    j["when"] = Json{{"at", t->to_string()}};
  } else {
    j["when"] = encode(std::get<TimeInterval>(v.when));
  }
  put_opt(j, "contact", v.contact);
  j["attachments"] = encode_ids(v.attachments);
  return j;
}

Json encode(const Offset& v) { return Json{{"x", v.x}, {"y", v.y}, {"z", v.z}}; }

Json encode(const MountAction& v) {
  Json j{{"id", v.id.value},
         {"child", encode(v.child)},
         {"interval", encode(v.interval)},
         {"offset", encode(v.offset)},
         {"begin_description", v.begin_description},
         {"end_description", v.end_description}};
  put_opt(j, "parent", v.parent);
  put_opt(j, "absolute_offset", v.absolute_offset);
  put_opt(j, "begin_contact", v.begin_contact);
  put_opt(j, "end_contact", v.end_contact);
  return j;
}

Json encode(const LocationAction& v) {
  Json j{{"id", v.id.value}, {"interval", encode(v.interval)}, {"label", v.label}};
  if (const auto* s = std::get_if<StaticLocation>(&v.location)) {
    j["static"] = Json{{"latitude", s->latitude},
                       {"longitude", s->longitude},
                       {"height", s->height},
                       {"epsg_code", s->epsg_code}};
  } else {
    const auto& d = std::get<DynamicLocation>(v.location);
    auto q = [](const QuantityRef& r) {
      return Json{{"device", r.device.value}, {"measured_quantity", r.measured_quantity.value}};
    };
    j["dynamic"] = Json{{"x_source", q(d.x_source)}, {"y_source", q(d.y_source)}, {"z_source", q(d.z_source)}};
  }
  put_opt(j, "contact", v.contact);
  return j;
}

Json encode(const GeoPoint& v) { return Json{{"latitude", v.latitude}, {"longitude", v.longitude}}; }

void decode(const Json& j, const std::string& path, TimeInstant& out) {
  if (!j.is_string()) fail(path, "expected an RFC-3339 timestamp string");
  auto t = TimeInstant::try_parse(j.get<std::string>());
  if (!t) fail(path, "invalid RFC-3339 timestamp");
  out = *t;
}

void decode(const Json& j, const std::string& path, TimeInterval& out) {
  ObjectReader r(j, path);
  r.required("begin", out.begin);
  r.optional("end", out.end);
  r.finish();
}

void decode(const Json& j, const std::string& path, EntityRef& out) {
  ObjectReader r(j, path);
  std::string kind;
  r.required("kind", kind);
  auto k = kind_from_string(kind);
  if (!k) k = kind_from_plural(kind);
  if (!k) fail(path + "/kind", "unknown entity kind");
  out.kind = *k;
  r.required("id", out.id);
  r.finish();
}

void decode(const Json& j, const std::string& path, MeasuredQuantity& out) {
  ObjectReader r(j, path);
  r.optional("id", out.id);
  r.optional("compartment", out.compartment);
  r.optional("sampling_media", out.sampling_media);
  r.optional("quantity", out.quantity);
  r.optional("unit", out.unit);
  r.optional("range_min", out.range_min);
  r.optional("range_max", out.range_max);
  r.optional("accuracy", out.accuracy);
  r.optional("accuracy_unit", out.accuracy_unit);
  r.optional("resolution", out.resolution);
  r.optional("resolution_unit", out.resolution_unit);
  r.optional("label", out.label);
  r.finish();
}

void decode(const Json& j, const std::string& path, ContactRole& out) {
  ObjectReader r(j, path);
  r.required("contact", out.contact);
  r.required("role", out.role);
  r.finish();
}

void decode(const Json& j, const std::string& path, ParameterValue& out) {
  ObjectReader r(j, path);
  r.required("at", out.at);
  r.optional("value", out.value);
  r.optional("contact", out.contact);
  r.finish();
}

void decode(const Json& j, const std::string& path, Parameter& out) {
  ObjectReader r(j, path);
  r.optional("id", out.id);
  r.optional("label", out.label);
  r.optional("description", out.description);
  r.optional("unit", out.unit);
  r.optional("values", out.values);
  r.finish();
}

void decode(const Json& j, const std::string& path, CustomField& out) {
  ObjectReader r(j, path);
  r.required("key", out.key);
  r.optional("value", out.value);
  r.finish();
}

void decode(const Json& j, const std::string& path, Attachment& out) {
  ObjectReader r(j, path);
  r.optional("id", out.id);
  r.optional("label", out.label);
  r.required("origin", out.origin);
  r.optional("url", out.url);
  r.optional("blob_ref", out.blob_ref);
  r.optional("media_type", out.media_type);
  r.optional("is_preview_image", out.is_preview_image);
  r.optional("uploaded_at", out.uploaded_at);
  r.optional("uploaded_by", out.uploaded_by);
  r.finish();
}

void decode(const Json& j, const std::string& path, GenericAction& out) {
  ObjectReader r(j, path);
  r.optional("id", out.id);
  r.required("kind", out.kind);
  r.optional("description", out.description);
  r.optional("contact", out.contact);
  r.optional("attachments", out.attachments);
  r.ignore("when");
  if (!j.contains("when")) fail(path + "/when", "missing required member");
  const Json& when = j["when"];
  if (when.is_object() && when.contains("at")) {
    ObjectReader w(when, path + "/when");
    TimeInstant t;
    w.required("at", t);
    w.finish();
    out.when = t;
  } else {
    out.when = decode_as<TimeInterval>(when, path + "/when");
  }
  r.finish();
}

void decode(const Json& j, const std::string& path, Offset& out) {
  ObjectReader r(j, path);
  r.optional("x", out.x);
  r.optional("y", out.y);
  r.optional("z", out.z);
  r.finish();
}

void decode(const Json& j, const std::string& path, MountAction& out) {
  ObjectReader r(j, path);
  r.optional("id", out.id);
  r.required("child", out.child);
  r.optional("parent", out.parent);
  r.required("interval", out.interval);
  r.optional("offset", out.offset);
  r.optional("absolute_offset", out.absolute_offset);
  r.optional("begin_contact", out.begin_contact);
  r.optional("end_contact", out.end_contact);
  r.optional("begin_description", out.begin_description);
  r.optional("end_description", out.end_description);
  r.finish();
}

namespace {

void decode_quantity_ref(const Json& j, const std::string& path, QuantityRef& out) {
  ObjectReader r(j, path);
  r.required("device", out.device);
  r.required("measured_quantity", out.measured_quantity);
  r.finish();
}

}  // namespace

void decode(const Json& j, const std::string& path, LocationAction& out) {
  ObjectReader r(j, path);
  r.optional("id", out.id);
  r.required("interval", out.interval);
  r.optional("label", out.label);
  r.optional("contact", out.contact);
  bool is_static = r.has("static");
  bool is_dynamic = r.has("dynamic");
  if (is_static == is_dynamic) fail(path, "exactly one of 'static' or 'dynamic' is required");
  if (is_static) {
    r.ignore("static");
    ObjectReader s(j["static"], path + "/static");
    StaticLocation loc;
    s.required("latitude", loc.latitude);
    s.required("longitude", loc.longitude);
    s.optional("height", loc.height);
    s.optional("epsg_code", loc.epsg_code);
    s.finish();
    out.location = loc;
  } else {
    r.ignore("dynamic");
    const Json& d = j["dynamic"];
    ObjectReader s(d, path + "/dynamic");
    s.ignore("x_source");
    s.ignore("y_source");
    s.ignore("z_source");
    s.finish();
    DynamicLocation loc;
    for (auto [key, target] : {std::pair{"x_source", &loc.x_source}, std::pair{"y_source", &loc.y_source},
                               std::pair{"z_source", &loc.z_source}}) {
      if (!d.contains(key)) fail(path + "/dynamic/" + key, "missing required member");
      decode_quantity_ref(d[key], path + "/dynamic/" + key, *target);
    }
    out.location = loc;
  }
  r.finish();
}

void decode(const Json& j, const std::string& path, GeoPoint& out) {
  ObjectReader r(j, path);
  r.required("latitude", out.latitude);
  r.required("longitude", out.longitude);
  r.finish();
}

}  // namespace sms
