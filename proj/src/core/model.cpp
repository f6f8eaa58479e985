#include "sms/core/model.hpp"

#include <cctype>

#include "sms/core/errors.hpp"

namespace sms {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

template <class T, class Member>
auto* member_ptr(Entity& e, Member T::*m) {
  using R = std::remove_reference_t<decltype(std::declval<T&>().*m)>;
  if (auto* v = std::get_if<T>(&e)) return static_cast<R*>(&(v->*m));
  return static_cast<R*>(nullptr);
}

}  // namespace

std::strong_ordering natural_compare(std::string_view a, std::string_view b) {
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    bool da = std::isdigit(static_cast<unsigned char>(a[i]));
    bool db = std::isdigit(static_cast<unsigned char>(b[j]));
    if (da && db) {
      std::size_t ei = i, ej = j;
      while (ei < a.size() && std::isdigit(static_cast<unsigned char>(a[ei]))) ++ei;
      while (ej < b.size() && std::isdigit(static_cast<unsigned char>(b[ej]))) ++ej;
      std::string_view na = a.substr(i, ei - i), nb = b.substr(j, ej - j);
      while (na.size() > 1 && na.front() == '0') na.remove_prefix(1);
      while (nb.size() > 1 && nb.front() == '0') nb.remove_prefix(1);
      if (na.size() != nb.size()) return na.size() <=> nb.size();
      if (auto c = na.compare(nb); c != 0) return c <=> 0;
      i = ei;
      j = ej;
    } else {
      if (a[i] != b[j]) return a[i] <=> b[j];
      ++i;
      ++j;
    }
  }
  if (auto c = (a.size() - i) <=> (b.size() - j); c != 0) return c;
  return a.compare(b) <=> 0;
}

std::string_view to_string(EntityKind kind) {
  switch (kind) {
    case EntityKind::device: return "device";
    case EntityKind::platform: return "platform";
    case EntityKind::configuration: return "configuration";
    case EntityKind::site: return "site";
    case EntityKind::contact: return "contact";
  }
  return "unknown";
}

std::string_view plural(EntityKind kind) {
  switch (kind) {
    case EntityKind::device: return "devices";
    case EntityKind::platform: return "platforms";
    case EntityKind::configuration: return "configurations";
    case EntityKind::site: return "sites";
    case EntityKind::contact: return "contacts";
  }
  return "unknown";
}

std::optional<EntityKind> kind_from_string(std::string_view name) {
  for (auto k : kAllEntityKinds) {
    if (to_string(k) == name) return k;
  }
  return std::nullopt;
}

std::optional<EntityKind> kind_from_plural(std::string_view name) {
  for (auto k : kAllEntityKinds) {
    if (plural(k) == name) return k;
  }
  return std::nullopt;
}

char id_prefix(EntityKind kind) {
  switch (kind) {
    case EntityKind::device: return 'd';
    case EntityKind::platform: return 'p';
    case EntityKind::configuration: return 'c';
    case EntityKind::site: return 's';
    case EntityKind::contact: return 'k';
  }
  return 'x';
}

std::string to_string(const EntityRef& ref) {
  return std::string(to_string(ref.kind)) + ":" + ref.id.value;
}

std::string canonical_url(std::string_view base_url, const EntityRef& ref) {
  while (!base_url.empty() && base_url.back() == '/') base_url.remove_suffix(1);
  return std::string(base_url) + "/" + std::string(plural(ref.kind)) + "/" + ref.id.value;
}

std::string_view to_string(Visibility v) {
  switch (v) {
    case Visibility::private_: return "private";
    case Visibility::internal: return "internal";
    case Visibility::public_: return "public";
  }
  return "private";
}

std::optional<Visibility> visibility_from_string(std::string_view s) {
  if (s == "private") return Visibility::private_;
  if (s == "internal") return Visibility::internal;
  if (s == "public") return Visibility::public_;
  return std::nullopt;
}

std::string_view to_string(ConfigurationStatus s) {
  switch (s) {
    case ConfigurationStatus::draft: return "draft";
    case ConfigurationStatus::active: return "active";
    case ConfigurationStatus::deprecated: return "deprecated";
  }
  return "draft";
}

std::optional<ConfigurationStatus> configuration_status_from_string(std::string_view s) {
  if (s == "draft") return ConfigurationStatus::draft;
  if (s == "active") return ConfigurationStatus::active;
  if (s == "deprecated") return ConfigurationStatus::deprecated;
  return std::nullopt;
}

TimeInstant GenericAction::begin() const {
  return std::visit(overloaded{[](TimeInstant t) { return t; },
                               [](const TimeInterval& i) { return i.begin; }},
                    when);
}

EntityKind kind_of(const Entity& e) {
  return std::visit(overloaded{[](const Device&) { return EntityKind::device; },
                               [](const Platform&) { return EntityKind::platform; },
                               [](const Configuration&) { return EntityKind::configuration; },
                               [](const Site&) { return EntityKind::site; },
                               [](const Contact&) { return EntityKind::contact; }},
                    e);
}

RecordInfo& info_of(Entity& e) {
  return std::visit([](auto& r) -> RecordInfo& { return r.info; }, e);
}

const RecordInfo& info_of(const Entity& e) {
  return std::visit([](const auto& r) -> const RecordInfo& { return r.info; }, e);
}

EntityRef ref_of(const Entity& e) { return EntityRef{kind_of(e), info_of(e).id}; }

const std::string& natural_key(const Entity& e) {
  return std::visit(overloaded{[](const Device& d) -> const std::string& { return d.short_name; },
                               [](const Platform& p) -> const std::string& { return p.short_name; },
                               [](const Configuration& c) -> const std::string& { return c.label; },
                               [](const Site& s) -> const std::string& { return s.label; },
                               [](const Contact& c) -> const std::string& { return c.email; }},
                    e);
}

std::string display_name(const Entity& e) {
  if (const auto* c = std::get_if<Contact>(&e)) return c->given_name + " " + c->family_name;
  return natural_key(e);
}

Visibility visibility_of(const Entity& e) {
  return std::visit(overloaded{[](const Contact&) { return Visibility::internal; },
                               [](const auto& r) { return r.visibility; }},
                    e);
}

const GroupId* owner_group_of(const Entity& e) {
  return std::visit(overloaded{[](const Contact&) -> const GroupId* { return nullptr; },
                               [](const auto& r) -> const GroupId* { return &r.owner_group; }},
                    e);
}

std::vector<ContactRole>* contacts_of(Entity& e) {
  return std::visit(overloaded{[](Contact&) -> std::vector<ContactRole>* { return nullptr; },
                               [](auto& r) -> std::vector<ContactRole>* { return &r.contacts; }},
                    e);
}

const std::vector<ContactRole>* contacts_of(const Entity& e) {
  return contacts_of(const_cast<Entity&>(e));
}

std::vector<Parameter>* parameters_of(Entity& e) {
  if (auto* p = member_ptr(e, &Device::parameters)) return p;
  if (auto* p = member_ptr(e, &Platform::parameters)) return p;
  return member_ptr(e, &Configuration::parameters);
}

const std::vector<Parameter>* parameters_of(const Entity& e) {
  return parameters_of(const_cast<Entity&>(e));
}

std::vector<Attachment>* attachments_of(Entity& e) {
  return std::visit(overloaded{[](Contact&) -> std::vector<Attachment>* { return nullptr; },
                               [](auto& r) -> std::vector<Attachment>* { return &r.attachments; }},
                    e);
}

const std::vector<Attachment>* attachments_of(const Entity& e) {
  return attachments_of(const_cast<Entity&>(e));
}

std::vector<GenericAction>* actions_of(Entity& e) {
  if (auto* p = member_ptr(e, &Device::actions)) return p;
  if (auto* p = member_ptr(e, &Platform::actions)) return p;
  return member_ptr(e, &Configuration::actions);
}

const std::vector<GenericAction>* actions_of(const Entity& e) {
  return actions_of(const_cast<Entity&>(e));
}

std::optional<std::string>* pid_of(Entity& e) {
  if (auto* p = member_ptr(e, &Device::pid)) return p;
  if (auto* p = member_ptr(e, &Platform::pid)) return p;
  return member_ptr(e, &Configuration::pid);
}

const std::optional<std::string>* pid_of(const Entity& e) { return pid_of(const_cast<Entity&>(e)); }

Entity make_empty(EntityKind kind) {
  switch (kind) {
    case EntityKind::device: return Device{};
    case EntityKind::platform: return Platform{};
    case EntityKind::configuration: return Configuration{};
    case EntityKind::site: return Site{};
    case EntityKind::contact: return Contact{};
  }
  throw Error(ErrorCode::bad_request, "unknown entity kind");
}

}  // namespace sms
