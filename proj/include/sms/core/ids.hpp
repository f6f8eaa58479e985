#pragma once

#include <compare>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

namespace sms {

// Natural ordering for generated identifiers: "d9" < "d10".
std::strong_ordering natural_compare(std::string_view a, std::string_view b);

template <class Tag>
struct Identifier {
  std::string value;

  Identifier() = default;
  explicit Identifier(std::string v) : value(std::move(v)) {}

  bool empty() const { return value.empty(); }
  const std::string& str() const { return value; }

  friend bool operator==(const Identifier&, const Identifier&) = default;
  friend std::strong_ordering operator<=>(const Identifier& a, const Identifier& b) {
    return natural_compare(a.value, b.value);
  }
};

struct EntityIdTag {};
struct GroupIdTag {};
struct AccountIdTag {};

// Opaque, never reused. Generated ids are a kind prefix plus a store-wide
// sequence number.
using EntityId = Identifier<EntityIdTag>;
using GroupId = Identifier<GroupIdTag>;
using AccountId = Identifier<AccountIdTag>;

enum class EntityKind { device, platform, configuration, site, contact };

inline constexpr EntityKind kAllEntityKinds[] = {EntityKind::device, EntityKind::platform,
                                                 EntityKind::configuration, EntityKind::site,
                                                 EntityKind::contact};

std::string_view to_string(EntityKind kind);
// "devices", "platforms", ... used in URLs and resource types.
std::string_view plural(EntityKind kind);
std::optional<EntityKind> kind_from_string(std::string_view name);
std::optional<EntityKind> kind_from_plural(std::string_view name);
char id_prefix(EntityKind kind);

struct EntityRef {
  EntityKind kind = EntityKind::device;
  EntityId id;

  friend bool operator==(const EntityRef&, const EntityRef&) = default;
  friend std::strong_ordering operator<=>(const EntityRef& a, const EntityRef& b) {
    if (auto c = a.id <=> b.id; c != 0) return c;
    return a.kind <=> b.kind;
  }
};

std::string to_string(const EntityRef& ref);

}  // namespace sms

template <class Tag>
struct std::hash<sms::Identifier<Tag>> {
  std::size_t operator()(const sms::Identifier<Tag>& id) const noexcept {
    return std::hash<std::string>{}(id.value);
  }
};
