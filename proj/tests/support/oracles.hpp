#pragma once

// Independent brute-force oracles. None of these call into the temporal
// engine; they only use the plain record types.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "sms/core/model.hpp"

namespace sms::testing {

inline bool member(const TimeInterval& i, TimeInstant t) {
  if (t < i.begin) return false;
  if (i.end && !(t < *i.end)) return false;
  return true;
}

// Walks instants from `from` to `to` (exclusive) in fixed steps and reports
// the first instant contained in both intervals.
inline std::optional<TimeInstant> first_joint_instant(const TimeInterval& a, const TimeInterval& b, TimeInstant from,
                                                      TimeInstant to, std::int64_t step_micros) {
  for (auto t = from; t < to; t = t.plus_micros(step_micros)) {
    if (member(a, t) && member(b, t)) return t;
  }
  return std::nullopt;
}

inline constexpr std::int64_t kDay = 86'400LL * 1'000'000;

// Daily enumeration over a window, for examples whose endpoints are dates.
inline bool overlaps_by_days(const TimeInterval& a, const TimeInterval& b, TimeInstant from, TimeInstant to) {
  return first_joint_instant(a, b, from, to, kDay).has_value();
}

// First instant of `child` (sampled per `step`) not covered by any parent
// interval.
inline std::optional<TimeInstant> first_uncovered(const TimeInterval& child, const std::vector<TimeInterval>& parents,
                                                  TimeInstant to, std::int64_t step_micros) {
  TimeInstant end = child.end ? std::min(*child.end, to) : to;
  for (auto t = child.begin; t < end; t = t.plus_micros(step_micros)) {
    bool covered = std::any_of(parents.begin(), parents.end(), [&](const TimeInterval& p) { return member(p, t); });
    if (!covered) return t;
  }
  return std::nullopt;
}

// One-second brute force over a bounded horizon. Intervals must have
// whole-second endpoints inside [horizon_begin, horizon_end]; open ends run to
// the horizon end. Enumerates the shorter interval in chunks, counting joint
// seconds branch-free so the inner loop stays cheap.
inline bool overlaps_by_seconds(const TimeInterval& a, const TimeInterval& b, TimeInstant horizon_begin,
                                TimeInstant horizon_end) {
  auto sec = [&](TimeInstant t) {
    return static_cast<std::int32_t>((t.micros() - horizon_begin.micros()) / 1'000'000);
  };
  std::int32_t a0 = sec(a.begin), a1 = sec(a.end.value_or(horizon_end));
  std::int32_t b0 = sec(b.begin), b1 = sec(b.end.value_or(horizon_end));
  if (a1 - a0 > b1 - b0) {
    std::swap(a0, b0);
    std::swap(a1, b1);
  }
  constexpr std::int32_t chunk = 1 << 14;
  for (std::int32_t start = a0; start < a1; start += chunk) {
    std::int32_t stop = std::min(a1, start + chunk);
    std::int32_t joint = 0;
    for (std::int32_t t = start; t < stop; ++t) joint += (t >= b0) & (t < b1);
    if (joint > 0) return true;
  }
  return false;
}

// Parent edge of every child in force at `at`, obtained by replaying mount
// begin/end events in time order (ends before begins at equal instants).
struct ReplayEdge {
  std::optional<EntityId> parent;  // nullopt = configuration root
  EntityId mount;
  friend bool operator==(const ReplayEdge&, const ReplayEdge&) = default;
};

inline std::map<EntityId, ReplayEdge> replay_state(const std::vector<MountAction>& mounts, TimeInstant at) {
  struct Event {
    TimeInstant t;
    int order;  // 0 = end, 1 = begin
    const MountAction* mount;
  };
  std::vector<Event> events;
  for (const auto& m : mounts) {
    events.push_back({m.interval.begin, 1, &m});
    if (m.interval.end) events.push_back({*m.interval.end, 0, &m});
  }
  std::stable_sort(events.begin(), events.end(), [](const Event& x, const Event& y) {
    if (x.t != y.t) return x.t < y.t;
    return x.order < y.order;
  });
  std::map<EntityId, ReplayEdge> state;
  for (const auto& e : events) {
    if (at < e.t) break;
    if (e.order == 0) {
      auto it = state.find(e.mount->child.id);
      if (it != state.end() && it->second.mount == e.mount->id) state.erase(it);
    } else {
      state[e.mount->child.id] =
          ReplayEdge{e.mount->parent ? std::optional<EntityId>(e.mount->parent->id) : std::nullopt, e.mount->id};
    }
  }
  return state;
}

}  // namespace sms::testing
