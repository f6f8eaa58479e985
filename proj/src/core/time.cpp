#include "sms/core/time.hpp"

#include <cctype>
#include <chrono>
#include <cstdio>

#include "sms/core/errors.hpp"

namespace sms {

namespace {

using namespace std::chrono;

bool read_digits(std::string_view s, std::size_t& pos, int count, int& out) {
  if (pos + count > s.size()) return false;
  int v = 0;
  for (int i = 0; i < count; ++i) {
    char c = s[pos + i];
    if (!std::isdigit(static_cast<unsigned char>(c))) return false;
    v = v * 10 + (c - '0');
  }
  pos += count;
  out = v;
  return true;
}

bool expect_char(std::string_view s, std::size_t& pos, char c) {
  if (pos < s.size() && s[pos] == c) {
    ++pos;
    return true;
  }
  return false;
}

}  // namespace

TimeInstant TimeInstant::now() {
  auto us = duration_cast<microseconds>(system_clock::now().time_since_epoch()).count();
  return from_micros(us);
}

std::optional<TimeInstant> TimeInstant::try_parse(std::string_view s) {
  std::size_t pos = 0;
  int y = 0, mo = 0, d = 0;
  if (!read_digits(s, pos, 4, y) || !expect_char(s, pos, '-') || !read_digits(s, pos, 2, mo) ||
      !expect_char(s, pos, '-') || !read_digits(s, pos, 2, d)) {
    return std::nullopt;
  }
  year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) return std::nullopt;
  std::int64_t micros = duration_cast<microseconds>(sys_days{ymd}.time_since_epoch()).count();
  if (pos == s.size()) return from_micros(micros);

  if (s[pos] != 'T' && s[pos] != 't' && s[pos] != ' ') return std::nullopt;
  ++pos;
  int hh = 0, mm = 0, ss = 0;
  if (!read_digits(s, pos, 2, hh) || !expect_char(s, pos, ':') || !read_digits(s, pos, 2, mm)) {
    return std::nullopt;
  }
  if (expect_char(s, pos, ':') && !read_digits(s, pos, 2, ss)) return std::nullopt;
  if (hh > 23 || mm > 59 || ss > 60) return std::nullopt;
  std::int64_t frac = 0;
  if (expect_char(s, pos, '.') || expect_char(s, pos, ',')) {
    int digits = 0;
    while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) {
      if (digits < 6) frac = frac * 10 + (s[pos] - '0');
      ++digits;
      ++pos;
    }
    if (digits == 0) return std::nullopt;
    for (int i = digits; i < 6; ++i) frac *= 10;
  }
  std::int64_t offset_s = 0;
  if (expect_char(s, pos, 'Z') || expect_char(s, pos, 'z')) {
  } else if (pos < s.size() && (s[pos] == '+' || s[pos] == '-')) {
    int sign = s[pos] == '-' ? -1 : 1;
    ++pos;
    int oh = 0, om = 0;
    if (!read_digits(s, pos, 2, oh)) return std::nullopt;
    expect_char(s, pos, ':');
    if (!read_digits(s, pos, 2, om)) return std::nullopt;
    offset_s = sign * (oh * 3600 + om * 60);
  } else {
    return std::nullopt;
  }
  if (pos != s.size()) return std::nullopt;
  micros += (static_cast<std::int64_t>(hh) * 3600 + mm * 60 + ss - offset_s) * 1'000'000 + frac;
  return from_micros(micros);
}

TimeInstant TimeInstant::parse(std::string_view text) {
  if (auto t = try_parse(text)) return *t;
  throw Error(ErrorCode::bad_request, "invalid RFC-3339 timestamp: '" + std::string(text) + "'");
}

std::string TimeInstant::to_string() const {
  std::int64_t us = micros_;
  std::int64_t day_us = 86'400LL * 1'000'000;
  std::int64_t days_since = us / day_us;
  std::int64_t rem = us % day_us;
  if (rem < 0) {
    rem += day_us;
    --days_since;
  }
  year_month_day ymd{sys_days{days{days_since}}};
  std::int64_t secs = rem / 1'000'000;
  std::int64_t frac = rem % 1'000'000;
  char buf[48];
  int n = std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02lld:%02lld:%02lld", static_cast<int>(ymd.year()),
                        static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                        static_cast<long long>(secs / 3600), static_cast<long long>(secs / 60 % 60),
                        static_cast<long long>(secs % 60));
  std::string out(buf, n);
  if (frac != 0) {
    std::snprintf(buf, sizeof buf, ".%06lld", static_cast<long long>(frac));
    out += buf;
  }
  out += 'Z';
  return out;
}

std::string to_string(const TimeInterval& interval) {
  return "[" + interval.begin.to_string() + ", " + (interval.end ? interval.end->to_string() : "open") + ")";
}

}  // namespace sms
