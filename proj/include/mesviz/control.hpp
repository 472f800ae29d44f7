#pragma once

#include <array>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mesviz/errors.hpp"
#include "mesviz/metrics.hpp"
#include "mesviz/timeseries.hpp"

namespace mesviz {

enum class BinFlag : std::uint8_t { Below, Within, Above, NoData };

inline constexpr std::string_view to_string(BinFlag f) {
  switch (f) {
    case BinFlag::Below: return "below";
    case BinFlag::Within: return "within";
    case BinFlag::Above: return "above";
    case BinFlag::NoData: return "no_data";
  }
  return "?";
}

struct ExceedanceReport {
  int step = 0;
  Quantity quantity = Quantity::StartCount;
  Curve today_ma;  // today's curve after smoothing
  std::vector<BinFlag> flags;
  std::size_t below = 0;
  std::size_t above = 0;
  std::size_t with_data = 0;
  double exceedance_fraction = 0;  // 0 when no bin has data
};

// Smooths today's curve with the template's MA order and checks each bin
// against the closed band [lower, upper].
inline ExceedanceReport compare_today(const BinSeries& today, const TemplateDay& tmpl) {
  if (today.step != tmpl.step || today.quantity != tmpl.quantity)
    throw InvalidArgument("today's series and the template describe different step/quantity");
  if (today.bins.size() != tmpl.ma_mean.size()) throw InvalidArgument("today's series and the template differ in bin count");

  ExceedanceReport r;
  r.step = today.step;
  r.quantity = today.quantity;
  r.today_ma = moving_average(today.bins, tmpl.ma_order);
  r.flags.assign(r.today_ma.size(), BinFlag::NoData);
  for (std::size_t i = 0; i < r.today_ma.size(); ++i) {
    const auto& v = r.today_ma[i];
    if (!v || !tmpl.lower[i] || !tmpl.upper[i]) continue;
    ++r.with_data;
    if (*v < *tmpl.lower[i]) {
      r.flags[i] = BinFlag::Below;
      ++r.below;
    } else if (*v > *tmpl.upper[i]) {
      r.flags[i] = BinFlag::Above;
      ++r.above;
    } else {
      r.flags[i] = BinFlag::Within;
    }
  }
  if (r.with_data > 0)
    r.exceedance_fraction = static_cast<double>(r.below + r.above) / static_cast<double>(r.with_data);
  return r;
}

struct DailyKpis {
  Date date;
  int step = 0;
  std::size_t n_start = 0;
  std::size_t n_complete = 0;
  std::size_t n_scrap = 0;
  std::optional<double> mean_idle;      // minutes, idle periods ending at this step
  std::optional<double> mean_duration;  // minutes, completed visits starting this date

  static DailyKpis empty(Date d, int step) { return {d, step, 0, 0, 0, std::nullopt, std::nullopt}; }

  std::optional<double> value(Quantity q) const {
    switch (q) {
      case Quantity::StartCount: return static_cast<double>(n_start);
      case Quantity::CompleteCount: return static_cast<double>(n_complete);
      case Quantity::ScrapCount: return static_cast<double>(n_scrap);
      case Quantity::MeanIdle: return mean_idle;
      case Quantity::MeanDuration: return mean_duration;
    }
    return std::nullopt;
  }
};

// KPIs of one step for every date of the log.
inline std::map<Date, DailyKpis> daily_kpi_table(const EventLog& log, const UnitMetrics& metrics, int step) {
  std::map<Date, DailyKpis> table;
  for (Date d : log.dates()) table[d] = DailyKpis::empty(d, step);
  for (const auto& e : log) {
    if (e.step != step) continue;
    auto& k = table[date_of(e.local)];
    if (e.action == Action::Start) ++k.n_start;
    if (e.action == Action::Complete) ++k.n_complete;
    if (e.action == Action::Scrap) ++k.n_scrap;
  }
  std::map<Date, std::pair<double, std::size_t>> idle, dur;
  for (const auto& i : metrics.idle) {
    if (i.to_step != step) continue;
    auto& a = idle[date_of(i.started_at)];
    a.first += to_minutes(i.idle);
    ++a.second;
  }
  for (const auto& d : metrics.durations) {
    if (d.step != step || !d.complete_flag) continue;
    auto& a = dur[date_of(d.first_start)];
    a.first += to_minutes(*d.duration);
    ++a.second;
  }
  for (const auto& [d, a] : idle) {
    if (auto it = table.find(d); it != table.end()) it->second.mean_idle = a.first / static_cast<double>(a.second);
  }
  for (const auto& [d, a] : dur) {
    if (auto it = table.find(d); it != table.end()) it->second.mean_duration = a.first / static_cast<double>(a.second);
  }
  return table;
}

inline DailyKpis daily_kpis(const EventLog& log, const UnitMetrics& metrics, Date date, int step) {
  auto table = daily_kpi_table(log, metrics, step);
  auto it = table.find(date);
  return it == table.end() ? DailyKpis::empty(date, step) : it->second;
}

inline DailyKpis daily_kpis(const EventLog& log, Date date, int step) {
  return daily_kpis(log, unit_metrics(log), date, step);
}

enum class GaugeColor : std::uint8_t { Green, Orange, Red };

inline constexpr std::string_view to_string(GaugeColor c) {
  switch (c) {
    case GaugeColor::Green: return "green";
    case GaugeColor::Orange: return "orange";
    case GaugeColor::Red: return "red";
  }
  return "?";
}

using MetricKind = Quantity;

// Starts and completes: higher is better. Scraps, idle and duration: lower is better.
inline constexpr bool higher_is_better(MetricKind k) {
  return k == MetricKind::StartCount || k == MetricKind::CompleteCount;
}

// Percentile-rank cut points. A rank exactly on a cut point takes the less
// severe color.
struct GaugeThresholds {
  double count_green = 40;  // rank >= this: green
  double count_orange = 20;  // rank >= this: orange, below: red
  double cost_green = 60;  // rank <= this: green
  double cost_orange = 80;  // rank <= this: orange, above: red

  void validate() const {
    if (!(0 <= count_orange && count_orange <= count_green && count_green <= 100))
      throw InvalidArgument("count thresholds must satisfy 0 <= orange <= green <= 100");
    if (!(0 <= cost_green && cost_green <= cost_orange && cost_orange <= 100))
      throw InvalidArgument("cost thresholds must satisfy 0 <= green <= orange <= 100");
  }

  friend bool operator==(const GaugeThresholds&, const GaugeThresholds&) = default;
};

// 100 * (#less + #equal / 2) / n.
inline double percentile_rank(double value, std::span<const double> history) {
  if (history.empty()) throw PreconditionError("percentile rank against an empty history");
  double less = 0, equal = 0;
  for (double h : history) {
    if (h < value) ++less;
    else if (h == value) ++equal;
  }
  return 100.0 * (less + 0.5 * equal) / static_cast<double>(history.size());
}

inline GaugeColor color_for_rank(MetricKind kind, double rank, const GaugeThresholds& th = {}) {
  if (higher_is_better(kind)) {
    if (rank >= th.count_green) return GaugeColor::Green;
    if (rank >= th.count_orange) return GaugeColor::Orange;
    return GaugeColor::Red;
  }
  if (rank <= th.cost_green) return GaugeColor::Green;
  if (rank <= th.cost_orange) return GaugeColor::Orange;
  return GaugeColor::Red;
}

// `today`, `rank` and `color` are unset only when today has no value for a
// mean metric, or no historical day has one.
struct GaugeState {
  MetricKind metric = MetricKind::StartCount;
  std::optional<double> today;
  std::optional<double> rank;
  std::optional<GaugeColor> color;
  std::size_t history_n = 0;
};

inline GaugeState gauge_color(MetricKind kind, double today, std::span<const double> history,
                              const GaugeThresholds& th = {}) {
  if (history.empty()) throw PreconditionError("gauge needs a non-empty history");
  double rank = percentile_rank(today, history);
  return {kind, today, rank, color_for_rank(kind, rank, th), history.size()};
}

// One gauge per metric kind for `date`, ranked against the daily KPI values of
// every other log date that matches the comparison.
inline std::array<GaugeState, 5> homepage_state(const EventLog& log, const UnitMetrics& metrics, Date date, int step,
                                                const Comparison& comparison, const GaugeThresholds& th = {}) {
  auto table = daily_kpi_table(log, metrics, step);
  std::vector<const DailyKpis*> history;
  for (const auto& [d, k] : table) {
    if (d != date && comparison.matches(d)) history.push_back(&k);
  }
  if (history.empty()) {
    throw PreconditionError("no historical days for comparison '" + comparison.label() + "' (excluding " +
                            format_date(date) + ")");
  }
  DailyKpis today = DailyKpis::empty(date, step);
  if (auto it = table.find(date); it != table.end()) today = it->second;

  std::array<GaugeState, 5> out;
  for (std::size_t i = 0; i < 5; ++i) {
    MetricKind kind = kAllQuantities[i];
    std::vector<double> values;
    for (const auto* k : history) {
      if (auto v = k->value(kind)) values.push_back(*v);
    }
    auto tv = today.value(kind);
    if (tv && !values.empty()) {
      out[i] = gauge_color(kind, *tv, values, th);
    } else {
      out[i] = GaugeState{kind, tv, std::nullopt, std::nullopt, values.size()};
    }
  }
  return out;
}

inline std::array<GaugeState, 5> homepage_state(const EventLog& log, Date date, int step, const Comparison& comparison,
                                                const GaugeThresholds& th = {}) {
  return homepage_state(log, unit_metrics(log), date, step, comparison, th);
}

}  // namespace mesviz
