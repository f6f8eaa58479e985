#pragma once

#include <compare>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>

namespace sms {

// UTC instant with microsecond resolution.
class TimeInstant {
 public:
  constexpr TimeInstant() = default;

  static constexpr TimeInstant from_micros(std::int64_t micros) {
    TimeInstant t;
    t.micros_ = micros;
    return t;
  }
  static constexpr TimeInstant from_seconds(std::int64_t seconds) {
    return from_micros(seconds * 1'000'000);
  }
  static constexpr TimeInstant max() {
    return from_micros(std::numeric_limits<std::int64_t>::max());
  }

  static TimeInstant now();

  // Accepts RFC-3339 date-times ("2020-01-01T00:00:00Z", "...+02:00",
  // fractional seconds) and plain dates ("2020-01-01", midnight UTC).
  // Throws sms::Error(bad_request) on malformed input.
  static TimeInstant parse(std::string_view text);
  static std::optional<TimeInstant> try_parse(std::string_view text);

  constexpr std::int64_t micros() const { return micros_; }

  // Always UTC with a trailing 'Z'; fractional digits only when non-zero.
  std::string to_string() const;

  constexpr TimeInstant plus_micros(std::int64_t d) const { return from_micros(micros_ + d); }
  constexpr TimeInstant plus_seconds(std::int64_t d) const { return plus_micros(d * 1'000'000); }

  friend constexpr auto operator<=>(TimeInstant, TimeInstant) = default;

 private:
  std::int64_t micros_ = 0;
};

// Half-open [begin, end); an absent end means the interval is still ongoing.
struct TimeInterval {
  TimeInstant begin;
  std::optional<TimeInstant> end;

  bool is_valid() const { return !end || begin < *end; }
  bool is_open() const { return !end.has_value(); }
  TimeInstant end_or_max() const { return end.value_or(TimeInstant::max()); }
  bool contains(TimeInstant t) const { return begin <= t && t < end_or_max(); }

  friend bool operator==(const TimeInterval&, const TimeInterval&) = default;
};

std::string to_string(const TimeInterval& interval);

}  // namespace sms
