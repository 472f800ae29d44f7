#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>

#include <boost/date_time/local_time/local_time.hpp>

#include "mesviz/errors.hpp"

namespace mesviz {

using Timestamp = std::chrono::sys_seconds;    // UTC instant
using LocalTime = std::chrono::local_seconds;  // site wall-clock time
using Date = std::chrono::local_days;          // site calendar date

inline constexpr int kMinutesPerDay = 24 * 60;

namespace detail {

inline bool parse_uint(std::string_view s, int& out) {
  if (s.empty()) return false;
  for (char c : s) {
    if (c < '0' || c > '9') return false;
  }
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && p == s.data() + s.size();
}

inline std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace detail

// Site time zone described by a POSIX TZ rule, e.g. "UTC0" or
// "GMT0IST,M3.5.0/1,M10.5.0". Copies share the parsed rule.
class SiteTimeZone {
 public:
  SiteTimeZone() : SiteTimeZone("UTC0") {}

  explicit SiteTimeZone(std::string rule) : rule_(std::move(rule)) {
    try {
      zone_.reset(new boost::local_time::posix_time_zone(rule_));
    } catch (const std::exception& e) {
      throw InvalidArgument("invalid time zone '" + rule_ + "': " + e.what());
    }
    fixed_ = !zone_->has_dst();
    fixed_offset_ = std::chrono::seconds{zone_->base_utc_offset().total_seconds()};
  }

  const std::string& rule() const { return rule_; }

  LocalTime to_local(Timestamp t) const {
    if (fixed_) return LocalTime{t.time_since_epoch() + fixed_offset_};
    namespace pt = boost::posix_time;
    static const pt::ptime epoch(boost::gregorian::date(1970, 1, 1));
    pt::ptime utc = epoch + pt::seconds(static_cast<long>(t.time_since_epoch().count()));
    boost::local_time::local_date_time ldt(utc, zone_);
    return LocalTime{std::chrono::seconds{(ldt.local_time() - epoch).total_seconds()}};
  }

 private:
  std::string rule_;
  boost::local_time::time_zone_ptr zone_;
  bool fixed_ = true;
  std::chrono::seconds fixed_offset_{0};
};

inline Date date_of(LocalTime t) { return std::chrono::floor<std::chrono::days>(t); }

inline int minute_of_day(LocalTime t) {
  auto since_midnight = t - std::chrono::floor<std::chrono::days>(t);
  return static_cast<int>(std::chrono::duration_cast<std::chrono::minutes>(since_midnight).count());
}

inline std::chrono::weekday weekday_of(Date d) { return std::chrono::weekday{d}; }

inline std::string format_date(Date d) {
  std::chrono::year_month_day ymd{d};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

inline std::optional<Date> try_parse_date(std::string_view s) {
  int y = 0, m = 0, d = 0;
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
  if (!detail::parse_uint(s.substr(0, 4), y) || !detail::parse_uint(s.substr(5, 2), m) ||
      !detail::parse_uint(s.substr(8, 2), d))
    return std::nullopt;
  std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(m)},
                                  std::chrono::day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) return std::nullopt;
  return Date{ymd};
}

inline Date parse_date(std::string_view s) {
  if (auto d = try_parse_date(s)) return *d;
  throw InvalidArgument("invalid date '" + std::string(s) + "' (expected YYYY-MM-DD)");
}

// "HH:MM" for a minute-of-day value.
inline std::string format_clock(int minute) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%02d:%02d", minute / 60, minute % 60);
  return buf;
}

inline std::optional<int> try_parse_clock(std::string_view s) {
  int h = 0, m = 0;
  if (s.size() != 5 || s[2] != ':') return std::nullopt;
  if (!detail::parse_uint(s.substr(0, 2), h) || !detail::parse_uint(s.substr(3, 2), m)) return std::nullopt;
  if (m > 59 || h > 24 || (h == 24 && m != 0)) return std::nullopt;
  return h * 60 + m;
}

// ISO-8601 instant: YYYY-MM-DD[T| ]HH:MM:SS[.fraction][Z|+HH:MM|-HH:MM].
// No offset means UTC. Fractional seconds are truncated.
inline std::optional<Timestamp> try_parse_timestamp(std::string_view s) {
  if (s.size() < 19) return std::nullopt;
  auto date = try_parse_date(s.substr(0, 10));
  if (!date || (s[10] != 'T' && s[10] != 't' && s[10] != ' ')) return std::nullopt;
  int hh = 0, mm = 0, ss = 0;
  if (s[13] != ':' || s[16] != ':') return std::nullopt;
  if (!detail::parse_uint(s.substr(11, 2), hh) || !detail::parse_uint(s.substr(14, 2), mm) ||
      !detail::parse_uint(s.substr(17, 2), ss))
    return std::nullopt;
  if (hh > 23 || mm > 59 || ss > 60) return std::nullopt;
  std::string_view rest = s.substr(19);
  if (!rest.empty() && rest.front() == '.') {
    std::size_t i = 1;
    while (i < rest.size() && rest[i] >= '0' && rest[i] <= '9') ++i;
    if (i == 1) return std::nullopt;
    rest.remove_prefix(i);
  }
  std::chrono::seconds offset{0};
  if (rest == "Z" || rest == "z") {
    rest = {};
  } else if (!rest.empty()) {
    if (rest.size() != 6 || (rest[0] != '+' && rest[0] != '-') || rest[3] != ':') return std::nullopt;
    int oh = 0, om = 0;
    if (!detail::parse_uint(rest.substr(1, 2), oh) || !detail::parse_uint(rest.substr(4, 2), om))
      return std::nullopt;
    if (oh > 23 || om > 59) return std::nullopt;
    offset = std::chrono::hours{oh} + std::chrono::minutes{om};
    if (rest[0] == '-') offset = -offset;
  }
  auto wall = std::chrono::sys_days{date->time_since_epoch()} + std::chrono::hours{hh} +
              std::chrono::minutes{mm} + std::chrono::seconds{ss};
  return Timestamp{wall - offset};
}

// Canonical form used when writing logs: naive UTC, second resolution.
inline std::string format_timestamp(Timestamp t) {
  auto day = std::chrono::floor<std::chrono::days>(t);
  auto secs = (t - day).count();
  std::chrono::year_month_day ymd{day};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02d", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(secs / 3600), static_cast<int>(secs / 60 % 60), static_cast<int>(secs % 60));
  return buf;
}

inline std::string format_local_time(LocalTime t) {
  return format_timestamp(Timestamp{t.time_since_epoch()});
}

inline std::optional<std::chrono::weekday> try_parse_weekday(std::string_view s) {
  static constexpr std::string_view names[] = {"sunday",   "monday", "tuesday", "wednesday",
                                               "thursday", "friday", "saturday"};
  std::string l = detail::lower(s);
  if (l.size() < 3) return std::nullopt;
  for (unsigned i = 0; i < 7; ++i) {
    if (names[i].substr(0, l.size()) == l) return std::chrono::weekday{i};
  }
  return std::nullopt;
}

inline std::string weekday_name(std::chrono::weekday w) {
  static constexpr const char* names[] = {"sunday",   "monday", "tuesday", "wednesday",
                                          "thursday", "friday", "saturday"};
  return names[w.c_encoding()];
}

}  // namespace mesviz
