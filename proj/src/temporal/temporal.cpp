#include "sms/temporal/temporal.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "sms/core/errors.hpp"

namespace sms::temporal {

bool interval_overlaps(const TimeInterval& a, const TimeInterval& b) {
  return std::max(a.begin, b.begin) < std::min(a.end_or_max(), b.end_or_max());
}

AvailabilityResult check_device_availability(const EntityId& equipment, const TimeInterval& proposed,
                                             std::span<const PlacedMount> all_mounts) {
  const PlacedMount* first = nullptr;
  for (const auto& placed : all_mounts) {
    if (placed.mount.child.id != equipment) continue;
    if (!interval_overlaps(proposed, placed.mount.interval)) continue;
    if (!first || placed.mount.interval.begin < first->mount.interval.begin ||
        (placed.mount.interval.begin == first->mount.interval.begin && placed.mount.id < first->mount.id)) {
      first = &placed;
    }
  }
  if (!first) return Available{};
  return MountConflict{first->configuration, first->mount};
}

ContainmentResult check_parent_containment(const TimeInterval& child_interval,
                                           std::span<const MountAction> parent_mounts) {
  std::vector<TimeInterval> intervals;
  intervals.reserve(parent_mounts.size());
  for (const auto& m : parent_mounts) intervals.push_back(m.interval);
  std::sort(intervals.begin(), intervals.end(),
            [](const TimeInterval& a, const TimeInterval& b) { return a.begin < b.begin; });

  TimeInstant covered_until = child_interval.begin;
  const TimeInstant target = child_interval.end_or_max();
  for (const auto& interval : intervals) {
    if (covered_until >= target) break;
    if (interval.begin > covered_until) break;
    covered_until = std::max(covered_until, interval.end_or_max());
  }
  if (covered_until >= target) return Contained{};
  return ContainmentViolation{covered_until};
}

CycleResult detect_cycle(std::span<const MountAction> mounts, TimeInstant at) {
  // parent link per child at `at`
  std::map<EntityId, std::vector<const MountAction*>> active;
  for (const auto& m : mounts) {
    if (m.interval.contains(at)) active[m.child.id].push_back(&m);
  }
  for (const auto& [child, list] : active) {
    if (list.size() > 1) {
      MultipleParents mp{list.front()->child, {}, at};
      for (const auto* m : list) mp.mounts.push_back(m->id);
      std::sort(mp.mounts.begin(), mp.mounts.end());
      return mp;
    }
  }
  for (const auto& [start, list] : active) {
    std::vector<EntityRef> path;
    std::set<EntityId> on_path;
    const MountAction* current = list.front();
    path.push_back(current->child);
    on_path.insert(current->child.id);
    while (current->parent) {
      const EntityRef& parent = *current->parent;
      if (on_path.count(parent.id)) {
        auto it = std::find_if(path.begin(), path.end(), [&](const EntityRef& r) { return r.id == parent.id; });
        return Cycle{std::vector<EntityRef>(it, path.end())};
      }
      auto next = active.find(parent.id);
      if (next == active.end()) break;
      current = next->second.front();
      path.push_back(current->child);
      on_path.insert(current->child.id);
    }
  }
  return Acyclic{};
}

std::vector<TimeInstant> breakpoints(std::span<const MountAction> mounts, const TimeInterval& window) {
  std::set<TimeInstant> points{window.begin};
  for (const auto& m : mounts) {
    if (window.contains(m.interval.begin)) points.insert(m.interval.begin);
    if (m.interval.end && window.contains(*m.interval.end)) points.insert(*m.interval.end);
  }
  return {points.begin(), points.end()};
}

CycleResult detect_cycle_in(std::span<const MountAction> mounts, const TimeInterval& window) {
  for (auto t : breakpoints(mounts, window)) {
    auto result = detect_cycle(mounts, t);
    if (!std::holds_alternative<Acyclic>(result)) return result;
  }
  return Acyclic{};
}

namespace {

std::size_t count_nodes(const std::vector<MountTreeNode>& nodes) {
  std::size_t n = 0;
  for (const auto& node : nodes) n += 1 + count_nodes(node.children);
  return n;
}

std::size_t depth_of(const std::vector<MountTreeNode>& nodes) {
  std::size_t d = 0;
  for (const auto& node : nodes) d = std::max(d, 1 + depth_of(node.children));
  return d;
}

std::size_t leaves_of(const std::vector<MountTreeNode>& nodes) {
  std::size_t n = 0;
  for (const auto& node : nodes) n += node.children.empty() ? 1 : leaves_of(node.children);
  return n;
}

bool find_path(const std::vector<MountTreeNode>& nodes, const EntityId& id,
               std::vector<const MountTreeNode*>& path) {
  for (const auto& node : nodes) {
    path.push_back(&node);
    if (node.entity.id == id || find_path(node.children, id, path)) return true;
    path.pop_back();
  }
  return false;
}

void flatten_into(const std::vector<MountTreeNode>& nodes, std::vector<const MountTreeNode*>& out) {
  for (const auto& node : nodes) {
    out.push_back(&node);
    flatten_into(node.children, out);
  }
}

}  // namespace

std::size_t MountTree::node_count() const { return count_nodes(roots); }
std::size_t MountTree::depth() const { return depth_of(roots); }
std::size_t MountTree::leaf_count() const { return leaves_of(roots); }

const MountTreeNode* MountTree::find(const EntityId& id) const {
  auto path = path_to(id);
  return path.empty() ? nullptr : path.back();
}

std::vector<const MountTreeNode*> MountTree::path_to(const EntityId& id) const {
  std::vector<const MountTreeNode*> path;
  if (!find_path(roots, id, path)) path.clear();
  return path;
}

std::vector<const MountTreeNode*> MountTree::flatten() const {
  std::vector<const MountTreeNode*> out;
  flatten_into(roots, out);
  return out;
}

MountTree mount_tree_at(const Configuration& configuration, TimeInstant at, const NameLookup& names) {
  const auto& mounts = configuration.mount_actions;
  auto cycles = detect_cycle(mounts, at);
  if (const auto* c = std::get_if<Cycle>(&cycles)) {
    throw Error(ErrorCode::inconsistent_state, "mount cycle at " + at.to_string() + " starting at " +
                                                   to_string(c->path.front()));
  }
  if (const auto* mp = std::get_if<MultipleParents>(&cycles)) {
    throw Error(ErrorCode::inconsistent_state,
                to_string(mp->node) + " has more than one parent at " + at.to_string());
  }

  std::map<std::string, std::vector<const MountAction*>> by_parent;  // "" = root
  std::set<EntityId> present;
  for (const auto& m : mounts) {
    if (!m.interval.contains(at)) continue;
    by_parent[m.parent ? m.parent->id.value : std::string()].push_back(&m);
    present.insert(m.child.id);
  }
  for (const auto& [parent, children] : by_parent) {
    if (!parent.empty() && !present.count(EntityId{parent})) {
      throw Error(ErrorCode::inconsistent_state, "parent " + parent + " of " + children.front()->child.id.value +
                                                     " is not mounted at " + at.to_string());
    }
  }

  auto name_of = [&](const EntityRef& ref) { return names ? names(ref) : ref.id.value; };
  std::function<std::vector<MountTreeNode>(const std::string&)> build = [&](const std::string& parent) {
    std::vector<MountTreeNode> nodes;
    auto it = by_parent.find(parent);
    if (it == by_parent.end()) return nodes;
    std::vector<std::pair<std::string, const MountAction*>> ordered;
    for (const auto* m : it->second) ordered.emplace_back(name_of(m->child), m);
    std::sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first < b.first;
      return a.second->child.id < b.second->child.id;
    });
    for (const auto& [name, m] : ordered) {
      nodes.push_back(MountTreeNode{m->child, *m, build(m->child.id.value)});
    }
    return nodes;
  };

  MountTree tree{configuration.info.id, at, build(std::string())};
  return tree;
}

const LocationAction* location_at(const Configuration& configuration, TimeInstant at) {
  for (const auto& l : configuration.location_actions) {
    if (l.interval.contains(at)) return &l;
  }
  return nullptr;
}

ResolvedPosition resolve_position(const Configuration& configuration, const EntityRef& node, TimeInstant at) {
  auto tree = mount_tree_at(configuration, at);
  auto path = tree.path_to(node.id);
  if (path.empty()) {
    throw Error(ErrorCode::not_mounted, to_string(node) + " is not mounted in configuration " +
                                            configuration.info.id.value + " at " + at.to_string());
  }
  const auto* location = location_at(configuration, at);
  if (!location) return UndefinedPosition{};
  if (const auto* dynamic = std::get_if<DynamicLocation>(&location->location)) {
    return DynamicPosition{*dynamic};
  }
  Offset local;
  const auto& leaf = path.back()->mount;
  if (leaf.absolute_offset) {
    local = *leaf.absolute_offset;
  } else {
    for (const auto* step : path) local += step->mount.offset;
  }
  return AbsolutePosition{std::get<StaticLocation>(location->location), local};
}

std::string_view to_string(TimelineEventKind kind) {
  switch (kind) {
    case TimelineEventKind::mount_end: return "mount-end";
    case TimelineEventKind::mount_begin: return "mount-begin";
    case TimelineEventKind::parameter: return "parameter";
    case TimelineEventKind::generic: return "generic";
  }
  return "generic";
}

std::vector<TimelineEvent> entity_timeline(const Entity& entity, std::span<const PlacedMount> mounts) {
  std::vector<TimelineEvent> events;
  if (const auto* actions = actions_of(entity)) {
    for (const auto& a : *actions) {
      events.push_back({a.begin(), TimelineEventKind::generic, a.id, {}, a.kind.value});
    }
  }
  if (const auto* params = parameters_of(entity)) {
    for (const auto& p : *params) {
      for (const auto& v : p.values) {
        events.push_back({v.at, TimelineEventKind::parameter, p.id, {}, p.label + " = " + v.value});
      }
    }
  }
  for (const auto& placed : mounts) {
    const auto& m = placed.mount;
    std::string what = to_string(m.child) + " on " + (m.parent ? to_string(*m.parent) : std::string("root"));
    events.push_back({m.interval.begin, TimelineEventKind::mount_begin, m.id, placed.configuration, what});
    if (m.interval.end) {
      events.push_back({*m.interval.end, TimelineEventKind::mount_end, m.id, placed.configuration, what});
    }
  }
  std::sort(events.begin(), events.end(), [](const TimelineEvent& a, const TimelineEvent& b) {
    if (a.at != b.at) return a.at < b.at;
    if (a.kind != b.kind) return a.kind < b.kind;
    return a.id < b.id;
  });
  return events;
}

}  // namespace sms::temporal
