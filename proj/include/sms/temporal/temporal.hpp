#pragma once

#include <functional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "sms/core/model.hpp"

// Interval algebra and point-in-time reconstruction of configurations. All
// functions are pure; callers supply every record they need.
namespace sms::temporal {

// max(a.begin, b.begin) < min(a.end, b.end) with open ends treated as +inf.
bool interval_overlaps(const TimeInterval& a, const TimeInterval& b);

// A mount together with the configuration it belongs to.
struct PlacedMount {
  EntityId configuration;
  MountAction mount;
};

struct Available {
  friend bool operator==(const Available&, const Available&) = default;
};

struct MountConflict {
  EntityId configuration;
  MountAction mount;
};

using AvailabilityResult = std::variant<Available, MountConflict>;

// Checks the proposed interval of `equipment` against every existing mount of
// it (mounts of other children in `all_mounts` are ignored). The first
// conflict by (begin, mount id) is reported.
AvailabilityResult check_device_availability(const EntityId& equipment, const TimeInterval& proposed,
                                             std::span<const PlacedMount> all_mounts);

struct Contained {
  friend bool operator==(const Contained&, const Contained&) = default;
};

struct ContainmentViolation {
  TimeInstant first_uncovered;
};

using ContainmentResult = std::variant<Contained, ContainmentViolation>;

// The union of the parent's mount intervals must cover the child interval.
ContainmentResult check_parent_containment(const TimeInterval& child_interval,
                                           std::span<const MountAction> parent_mounts);

struct Acyclic {
  friend bool operator==(const Acyclic&, const Acyclic&) = default;
};

struct Cycle {
  std::vector<EntityRef> path;
};

struct MultipleParents {
  EntityRef node;
  std::vector<EntityId> mounts;
  TimeInstant at;
};

using CycleResult = std::variant<Acyclic, Cycle, MultipleParents>;

// Considers only mounts in force at `at`. Two simultaneous parents for one
// node are reported before cycles.
CycleResult detect_cycle(std::span<const MountAction> mounts, TimeInstant at);

// Instants at which the mount state of a configuration may change inside
// `window`: the window begin plus every mount begin/end falling in it.
std::vector<TimeInstant> breakpoints(std::span<const MountAction> mounts, const TimeInterval& window);

// Runs detect_cycle at every breakpoint inside `window`.
CycleResult detect_cycle_in(std::span<const MountAction> mounts, const TimeInterval& window);

struct MountTreeNode {
  EntityRef entity;
  MountAction mount;
  std::vector<MountTreeNode> children;
};

struct MountTree {
  EntityId configuration;
  TimeInstant at;
  std::vector<MountTreeNode> roots;  // nodes mounted directly on the configuration root

  std::size_t node_count() const;
  // Levels below the configuration root; 0 for an empty tree.
  std::size_t depth() const;
  std::size_t leaf_count() const;
  const MountTreeNode* find(const EntityId& id) const;
  // Path from a top-level node down to `id`; empty when absent.
  std::vector<const MountTreeNode*> path_to(const EntityId& id) const;
  // Pre-order traversal.
  std::vector<const MountTreeNode*> flatten() const;
};

// Resolves display names for deterministic child ordering; defaults to ids.
using NameLookup = std::function<std::string(const EntityRef&)>;

// Throws Error(inconsistent_state) when the mounts in force at `at` do not
// form a forest hanging off the configuration root.
MountTree mount_tree_at(const Configuration& configuration, TimeInstant at, const NameLookup& names = {});

struct AbsolutePosition {
  StaticLocation location;
  Offset local_offset;
};

struct DynamicPosition {
  DynamicLocation sources;
};

struct UndefinedPosition {};

using ResolvedPosition = std::variant<AbsolutePosition, DynamicPosition, UndefinedPosition>;

const LocationAction* location_at(const Configuration& configuration, TimeInstant at);

// Local offset = the node's absolute_offset when set, otherwise the sum of
// relative offsets along the root-to-node path. Throws Error(not_mounted).
ResolvedPosition resolve_position(const Configuration& configuration, const EntityRef& node, TimeInstant at);

enum class TimelineEventKind { mount_end, mount_begin, parameter, generic };

std::string_view to_string(TimelineEventKind kind);

struct TimelineEvent {
  TimeInstant at;
  TimelineEventKind kind;
  EntityId id;             // mount, parameter or action id
  EntityId configuration;  // mount events only
  std::string summary;
};

// Merges generic actions, parameter value changes and mount begin/end events
// into one list ordered by (instant, kind, id). `mounts` are the mounts that
// involve the entity (for a configuration: its own mounts).
std::vector<TimelineEvent> entity_timeline(const Entity& entity, std::span<const PlacedMount> mounts);

}  // namespace sms::temporal
