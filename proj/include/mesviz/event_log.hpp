#pragma once

#include <algorithm>
#include <bitset>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "mesviz/errors.hpp"
#include "mesviz/time.hpp"

namespace mesviz {

enum class Action : std::uint8_t { Start, Complete, Scrap, Delay };

inline constexpr Action kAllActions[] = {Action::Start, Action::Complete, Action::Scrap, Action::Delay};

inline constexpr std::string_view to_string(Action a) {
  switch (a) {
    case Action::Start: return "start";
    case Action::Complete: return "complete";
    case Action::Scrap: return "scrap";
    case Action::Delay: return "delay";
  }
  return "?";
}

// Case-insensitive.
inline std::optional<Action> parse_action(std::string_view s) {
  std::string l = detail::lower(s);
  for (Action a : kAllActions) {
    if (l == to_string(a)) return a;
  }
  return std::nullopt;
}

struct ProcessEvent {
  Timestamp timestamp;
  LocalTime local;  // timestamp in site wall-clock time
  std::string unit_id;
  int step = 0;
  Action action = Action::Start;

  friend bool operator==(const ProcessEvent&, const ProcessEvent&) = default;
};

inline constexpr std::string_view kLogHeader = "timestamp,unit_id,step,action";

struct RecordError {
  std::size_t line = 0;  // 1-based; the header is line 1
  std::string reason;
};

enum class AnomalyKind : std::uint8_t { DuplicateEvent, OutOfOrder, UnknownAction, UnknownStep };

inline constexpr std::string_view to_string(AnomalyKind k) {
  switch (k) {
    case AnomalyKind::DuplicateEvent: return "duplicate_event";
    case AnomalyKind::OutOfOrder: return "out_of_order";
    case AnomalyKind::UnknownAction: return "unknown_action";
    case AnomalyKind::UnknownStep: return "unknown_step";
  }
  return "?";
}

// Location is a source line for parse-time anomalies and event indices
// (into the normalized log) for anomalies found on an EventLog.
struct Anomaly {
  AnomalyKind kind = AnomalyKind::DuplicateEvent;
  std::optional<std::size_t> line;
  std::optional<std::size_t> event_index;
  std::optional<std::size_t> related_index;
  std::string unit_id;
  int step = 0;
  std::string detail;
};

struct ValidationReport {
  std::vector<RecordError> record_errors;
  std::vector<Anomaly> anomalies;

  bool empty() const { return record_errors.empty() && anomalies.empty(); }

  void append(const ValidationReport& other) {
    record_errors.insert(record_errors.end(), other.record_errors.begin(), other.record_errors.end());
    anomalies.insert(anomalies.end(), other.anomalies.begin(), other.anomalies.end());
  }

  std::size_t count(AnomalyKind kind) const {
    return static_cast<std::size_t>(std::count_if(anomalies.begin(), anomalies.end(),
                                                  [kind](const Anomaly& a) { return a.kind == kind; }));
  }
};

// Immutable, normalized event sequence: sorted by (timestamp, unit_id) with
// ties kept in input order.
class EventLog {
 public:
  EventLog() = default;

  explicit EventLog(std::vector<ProcessEvent> events, std::string provenance = {})
      : events_(std::move(events)), provenance_(std::move(provenance)) {
    std::stable_sort(events_.begin(), events_.end(), [](const ProcessEvent& a, const ProcessEvent& b) {
      return std::tie(a.timestamp, a.unit_id) < std::tie(b.timestamp, b.unit_id);
    });
  }

  std::span<const ProcessEvent> events() const { return events_; }
  std::size_t size() const { return events_.size(); }
  bool empty() const { return events_.empty(); }
  const ProcessEvent& operator[](std::size_t i) const { return events_[i]; }
  auto begin() const { return events_.begin(); }
  auto end() const { return events_.end(); }
  const std::string& provenance() const { return provenance_; }

  // Distinct local dates carrying at least one event, ascending.
  std::vector<Date> dates() const {
    std::set<Date> seen;
    for (const auto& e : events_) seen.insert(date_of(e.local));
    return {seen.begin(), seen.end()};
  }

  // Events of `other` are placed after this log's events among ties.
  EventLog merged_with(const EventLog& other) const {
    std::vector<ProcessEvent> all = events_;
    all.insert(all.end(), other.events_.begin(), other.events_.end());
    std::string prov = provenance_;
    if (!other.provenance_.empty()) prov += prov.empty() ? other.provenance_ : "+" + other.provenance_;
    return EventLog(std::move(all), std::move(prov));
  }

 private:
  std::vector<ProcessEvent> events_;
  std::string provenance_;
};

struct ParseOptions {
  SiteTimeZone timezone;
  int max_step = 7;
};

struct ParseResult {
  EventLog log;
  ValidationReport report;
};

namespace detail {

inline bool next_line(std::istream& in, std::string& line) {
  if (!std::getline(in, line)) return false;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return true;
}

}  // namespace detail

// Reads the canonical delimited log. Malformed rows are skipped and listed in
// the report; unknown actions and steps additionally raise an anomaly.
inline ParseResult parse_event_log(std::istream& in, const ParseOptions& options = {},
                                   std::string provenance = {}) {
  if (!in) throw IngestError("event log source is not readable");
  std::string line;
  if (!detail::next_line(in, line)) {
    if (in.bad()) throw IngestError("failed reading event log");
    throw FormatError("missing header (expected '" + std::string(kLogHeader) + "')");
  }
  if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
  if (line != kLogHeader) throw FormatError("bad header '" + line + "' (expected '" + std::string(kLogHeader) + "')");

  ParseResult result;
  std::vector<ProcessEvent> events;
  std::size_t line_no = 1;
  auto reject = [&](std::string reason) { result.report.record_errors.push_back({line_no, std::move(reason)}); };

  while (detail::next_line(in, line)) {
    ++line_no;
    std::string_view row = line;
    std::string_view fields[4];
    std::size_t n = 0;
    bool too_many = false;
    while (true) {
      auto comma = row.find(',');
      if (n == 4) {
        too_many = true;
        break;
      }
      fields[n++] = row.substr(0, comma);
      if (comma == std::string_view::npos) break;
      row.remove_prefix(comma + 1);
    }
    if (line.empty()) {
      reject("empty line");
      continue;
    }
    if (too_many || n != 4) {
      reject("expected 4 fields");
      continue;
    }
    auto ts = try_parse_timestamp(detail::trim(fields[0]));
    if (!ts) {
      reject("invalid timestamp '" + std::string(fields[0]) + "'");
      continue;
    }
    std::string_view unit = detail::trim(fields[1]);
    if (unit.empty()) {
      reject("empty unit_id");
      continue;
    }
    int step = 0;
    if (!detail::parse_uint(detail::trim(fields[2]), step)) {
      reject("invalid step '" + std::string(fields[2]) + "'");
      continue;
    }
    if (step < 1 || step > options.max_step) {
      reject("unknown step " + std::to_string(step));
      result.report.anomalies.push_back(
          {AnomalyKind::UnknownStep, line_no, std::nullopt, std::nullopt, std::string(unit), step,
           "step outside 1.." + std::to_string(options.max_step)});
      continue;
    }
    auto action = parse_action(detail::trim(fields[3]));
    if (!action) {
      reject("unknown action '" + std::string(fields[3]) + "'");
      result.report.anomalies.push_back({AnomalyKind::UnknownAction, line_no, std::nullopt, std::nullopt,
                                         std::string(unit), step, std::string(fields[3])});
      continue;
    }
    events.push_back({*ts, options.timezone.to_local(*ts), std::string(unit), step, *action});
  }
  if (in.bad()) throw IngestError("failed reading event log");
  result.log = EventLog(std::move(events), std::move(provenance));
  return result;
}

inline ParseResult parse_event_log(std::string_view text, const ParseOptions& options = {},
                                   std::string provenance = {}) {
  std::istringstream in{std::string(text)};
  return parse_event_log(in, options, std::move(provenance));
}

inline ParseResult read_event_log_file(const std::string& path, const ParseOptions& options = {}) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestError("cannot open '" + path + "'");
  return parse_event_log(in, options, path);
}

inline void write_event(std::ostream& out, const ProcessEvent& e) {
  out << format_timestamp(e.timestamp) << ',' << e.unit_id << ',' << e.step << ',' << to_string(e.action) << '\n';
}

inline void write_event_log(std::ostream& out, const EventLog& log, bool header = true) {
  if (header) out << kLogHeader << '\n';
  for (const auto& e : log) write_event(out, e);
}

// Exact duplicates (k identical rows give k-1 anomalies) and per-unit
// ordering anomalies (Complete at a step with no earlier Start there).
inline ValidationReport validate_log(const EventLog& log) {
  ValidationReport report;
  auto events = log.events();

  // Duplicates share a timestamp, so only equal-timestamp runs need checking.
  for (std::size_t i = 0; i < events.size();) {
    std::size_t j = i;
    while (j < events.size() && events[j].timestamp == events[i].timestamp) ++j;
    for (std::size_t a = i + 1; a < j; ++a) {
      for (std::size_t b = i; b < a; ++b) {
        const auto& x = events[a];
        const auto& y = events[b];
        if (x.unit_id == y.unit_id && x.step == y.step && x.action == y.action) {
          report.anomalies.push_back({AnomalyKind::DuplicateEvent, std::nullopt, a, b, x.unit_id, x.step,
                                      "identical to event " + std::to_string(b)});
          break;
        }
      }
    }
    i = j;
  }

  std::map<std::string_view, std::set<int>> started;
  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto& e = events[i];
    auto& steps = started[e.unit_id];
    if (e.action == Action::Start) {
      steps.insert(e.step);
    } else if (e.action == Action::Complete && !steps.contains(e.step)) {
      report.anomalies.push_back({AnomalyKind::OutOfOrder, std::nullopt, i, std::nullopt, e.unit_id, e.step,
                                  "complete before any start at step " + std::to_string(e.step)});
    }
  }
  return report;
}

using WeekdaySet = std::bitset<7>;  // indexed by weekday::c_encoding(), Sunday = 0

inline WeekdaySet weekdays_of(std::initializer_list<std::chrono::weekday> days) {
  WeekdaySet set;
  for (auto d : days) set.set(d.c_encoding());
  return set;
}

// Each unset member places no restriction. Date bounds are inclusive local dates.
struct LogFilter {
  std::optional<Date> from;
  std::optional<Date> to;
  std::optional<std::set<int>> steps;
  std::optional<WeekdaySet> weekdays;

  bool matches(const ProcessEvent& e) const {
    Date d = date_of(e.local);
    if (from && d < *from) return false;
    if (to && d > *to) return false;
    if (steps && !steps->contains(e.step)) return false;
    if (weekdays && !weekdays->test(weekday_of(d).c_encoding())) return false;
    return true;
  }

  LogFilter intersect(const LogFilter& o) const {
    LogFilter r = *this;
    if (o.from) r.from = r.from ? std::max(*r.from, *o.from) : *o.from;
    if (o.to) r.to = r.to ? std::min(*r.to, *o.to) : *o.to;
    if (o.steps) {
      if (!r.steps) {
        r.steps = o.steps;
      } else {
        std::set<int> both;
        std::set_intersection(r.steps->begin(), r.steps->end(), o.steps->begin(), o.steps->end(),
                              std::inserter(both, both.end()));
        r.steps = std::move(both);
      }
    }
    if (o.weekdays) r.weekdays = r.weekdays ? (*r.weekdays & *o.weekdays) : *o.weekdays;
    return r;
  }
};

inline EventLog filter_log(const EventLog& log, const LogFilter& filter) {
  std::vector<ProcessEvent> kept;
  for (const auto& e : log) {
    if (filter.matches(e)) kept.push_back(e);
  }
  // Already ordered; the stable re-sort inside EventLog keeps it that way.
  return EventLog(std::move(kept), log.provenance());
}

}  // namespace mesviz
