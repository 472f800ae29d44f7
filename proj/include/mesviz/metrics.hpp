#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "mesviz/errors.hpp"
#include "mesviz/event_log.hpp"

namespace mesviz {

struct UnitTrace {
  std::string unit_id;
  std::vector<ProcessEvent> events;  // log order, non-decreasing timestamps
};

// Partition of the log by unit, traces ordered by first appearance.
inline std::vector<UnitTrace> unit_traces(const EventLog& log) {
  std::vector<UnitTrace> traces;
  std::unordered_map<std::string_view, std::size_t> slot;
  for (const auto& e : log) {
    auto [it, inserted] = slot.try_emplace(e.unit_id, traces.size());
    if (inserted) traces.push_back({e.unit_id, {}});
    traces[it->second].events.push_back(e);
  }
  return traces;
}

inline double to_minutes(std::chrono::seconds s) { return static_cast<double>(s.count()) / 60.0; }

struct IdleInterval {
  std::string unit_id;
  int from_step = 0;
  int to_step = 0;
  std::chrono::seconds idle{0};
  LocalTime completed_at;
  LocalTime started_at;  // the Start that ends the idle period
};

// For every step with a Complete, pairs the last Complete there with the
// first subsequent Start at a different step. Gaps that would be negative are
// skipped and reported as OutOfOrder anomalies.
inline std::vector<IdleInterval> idle_times(const UnitTrace& trace, ValidationReport* anomalies = nullptr) {
  const auto& ev = trace.events;
  std::map<int, std::size_t> last_complete;
  for (std::size_t i = 0; i < ev.size(); ++i) {
    if (ev[i].action == Action::Complete) last_complete[ev[i].step] = i;
  }
  std::vector<std::pair<std::size_t, int>> order;
  for (auto [step, idx] : last_complete) order.emplace_back(idx, step);
  std::sort(order.begin(), order.end());

  std::vector<IdleInterval> out;
  for (auto [ic, step] : order) {
    std::size_t j = ic + 1;
    while (j < ev.size() && !(ev[j].action == Action::Start && ev[j].step != step)) ++j;
    if (j == ev.size()) continue;
    if (ev[j].timestamp < ev[ic].timestamp) {
      if (anomalies) {
        anomalies->anomalies.push_back({AnomalyKind::OutOfOrder, std::nullopt, std::nullopt, std::nullopt,
                                        trace.unit_id, ev[j].step, "start precedes previous complete"});
      }
      continue;
    }
    out.push_back({trace.unit_id, step, ev[j].step, ev[j].timestamp - ev[ic].timestamp, ev[ic].local, ev[j].local});
  }
  return out;
}

struct StepDuration {
  std::string unit_id;
  int step = 0;
  std::optional<std::chrono::seconds> duration;  // set iff complete_flag
  bool complete_flag = false;
  LocalTime first_start;
};

// First Start to last Complete at `step`. Throws when the trace never starts there.
inline StepDuration step_duration(const UnitTrace& trace, int step) {
  const ProcessEvent* first_start = nullptr;
  const ProcessEvent* last_complete = nullptr;
  for (const auto& e : trace.events) {
    if (e.step != step) continue;
    if (e.action == Action::Start && !first_start) first_start = &e;
    if (e.action == Action::Complete) last_complete = &e;
  }
  if (!first_start) {
    throw PreconditionError("unit " + trace.unit_id + " has no start at step " + std::to_string(step));
  }
  StepDuration d{trace.unit_id, step, std::nullopt, false, first_start->local};
  if (last_complete && last_complete->timestamp >= first_start->timestamp) {
    d.duration = last_complete->timestamp - first_start->timestamp;
    d.complete_flag = true;
  }
  return d;
}

inline std::vector<StepDuration> step_durations(const UnitTrace& trace) {
  std::vector<int> steps;
  for (const auto& e : trace.events) {
    if (e.action == Action::Start && std::find(steps.begin(), steps.end(), e.step) == steps.end())
      steps.push_back(e.step);
  }
  std::vector<StepDuration> out;
  out.reserve(steps.size());
  for (int s : steps) out.push_back(step_duration(trace, s));
  return out;
}

// Unit-level values for a whole log.
struct UnitMetrics {
  std::vector<IdleInterval> idle;
  std::vector<StepDuration> durations;  // includes incomplete visits
  ValidationReport anomalies;

  std::size_t incomplete() const {
    return static_cast<std::size_t>(
        std::count_if(durations.begin(), durations.end(), [](const StepDuration& d) { return !d.complete_flag; }));
  }
};

inline UnitMetrics unit_metrics(const EventLog& log) {
  UnitMetrics m;
  for (const auto& trace : unit_traces(log)) {
    auto idle = idle_times(trace, &m.anomalies);
    m.idle.insert(m.idle.end(), std::make_move_iterator(idle.begin()), std::make_move_iterator(idle.end()));
    auto dur = step_durations(trace);
    m.durations.insert(m.durations.end(), std::make_move_iterator(dur.begin()), std::make_move_iterator(dur.end()));
  }
  return m;
}

// Idle minutes keyed by the step the unit moves into.
inline std::map<int, std::vector<double>> idle_minutes_by_step(const UnitMetrics& m) {
  std::map<int, std::vector<double>> out;
  for (const auto& i : m.idle) out[i.to_step].push_back(to_minutes(i.idle));
  return out;
}

// Completed visits only.
inline std::map<int, std::vector<double>> duration_minutes_by_step(const UnitMetrics& m) {
  std::map<int, std::vector<double>> out;
  for (const auto& d : m.durations) {
    if (d.complete_flag) out[d.step].push_back(to_minutes(*d.duration));
  }
  return out;
}

struct SummaryStats {
  double mean = 0;
  double sd = 0;
  double median = 0;
  double p2_5 = 0;
  double p97_5 = 0;
  std::size_t n = 0;
};

// Linear interpolation between closest order statistics: position
// (n - 1) * pct / 100 in the sorted sample.
inline double quantile_sorted(std::span<const double> sorted, double pct) {
  if (sorted.empty()) throw PreconditionError("quantile of empty sample");
  if (!(pct >= 0 && pct <= 100)) throw InvalidArgument("percentile level outside [0, 100]");
  double h = static_cast<double>(sorted.size() - 1) * pct / 100.0;
  auto lo = static_cast<std::size_t>(std::floor(h));
  std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  double frac = h - static_cast<double>(lo);
  if (frac == 0) return sorted[lo];
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

inline double quantile(std::span<const double> values, double pct) {
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  return quantile_sorted(sorted, pct);
}

inline double mean_of(std::span<const double> values) {
  if (values.empty()) throw PreconditionError("mean of empty sample");
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

inline SummaryStats summarize(std::span<const double> values) {
  if (values.empty()) throw PreconditionError("cannot summarize an empty sample");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  SummaryStats s;
  s.n = sorted.size();
  s.mean = mean_of(sorted);
  if (s.n > 1) {
    double ss = 0;
    for (double v : sorted) ss += (v - s.mean) * (v - s.mean);
    s.sd = std::sqrt(ss / static_cast<double>(s.n - 1));
  }
  s.median = quantile_sorted(sorted, 50);
  s.p2_5 = quantile_sorted(sorted, 2.5);
  s.p97_5 = quantile_sorted(sorted, 97.5);
  return s;
}

// Divides by the sample mean, giving dimensionless multiples of the mean.
inline std::vector<double> rescale(std::span<const double> values) {
  if (values.empty()) throw PreconditionError("cannot rescale an empty sample");
  double m = mean_of(values);
  if (!(m > 0)) throw PreconditionError("cannot rescale: sample mean is not positive");
  std::vector<double> out;
  out.reserve(values.size());
  for (double v : values) out.push_back(v / m);
  return out;
}

struct ActionBreakdown {
  int max_step = 7;
  std::vector<std::array<std::size_t, 4>> counts;  // [step - 1][action]

  std::size_t count(int step, Action a) const { return counts.at(step - 1)[static_cast<std::size_t>(a)]; }

  std::size_t total(Action a) const {
    std::size_t t = 0;
    for (const auto& row : counts) t += row[static_cast<std::size_t>(a)];
    return t;
  }

  // Share of all `a` events that occurred at `step`; 0 when `a` never occurs.
  double proportion(int step, Action a) const {
    std::size_t t = total(a);
    return t == 0 ? 0.0 : static_cast<double>(count(step, a)) / static_cast<double>(t);
  }
};

inline ActionBreakdown action_breakdown(const EventLog& log, int max_step = 7) {
  ActionBreakdown b;
  b.max_step = max_step;
  b.counts.assign(static_cast<std::size_t>(max_step), {});
  for (const auto& e : log) {
    if (e.step < 1 || e.step > max_step) throw InvalidArgument("event step outside breakdown range");
    ++b.counts[static_cast<std::size_t>(e.step - 1)][static_cast<std::size_t>(e.action)];
  }
  return b;
}

struct SummaryRow {
  int step = 0;
  SummaryStats stats;
};

inline std::string format_fixed(double v, int precision) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, v);
  return buf;
}

inline constexpr std::string_view kSummaryHeader = "step,mean,sd,median,p2.5,p97.5";

inline void write_summary_table(std::ostream& out, std::span<const SummaryRow> rows, int precision = 2) {
  out << kSummaryHeader << '\n';
  for (const auto& r : rows) {
    out << r.step << ',' << format_fixed(r.stats.mean, precision) << ',' << format_fixed(r.stats.sd, precision)
        << ',' << format_fixed(r.stats.median, precision) << ',' << format_fixed(r.stats.p2_5, precision) << ','
        << format_fixed(r.stats.p97_5, precision) << '\n';
  }
}

}  // namespace mesviz
