#pragma once

#include <algorithm>
#include <charconv>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "mesviz/errors.hpp"
#include "mesviz/event_log.hpp"
#include "mesviz/metrics.hpp"

namespace mesviz {

enum class Quantity : std::uint8_t { StartCount, CompleteCount, ScrapCount, MeanIdle, MeanDuration };

inline constexpr Quantity kAllQuantities[] = {Quantity::StartCount, Quantity::CompleteCount, Quantity::ScrapCount,
                                              Quantity::MeanIdle, Quantity::MeanDuration};

inline constexpr std::string_view to_string(Quantity q) {
  switch (q) {
    case Quantity::StartCount: return "start_count";
    case Quantity::CompleteCount: return "complete_count";
    case Quantity::ScrapCount: return "scrap_count";
    case Quantity::MeanIdle: return "mean_idle";
    case Quantity::MeanDuration: return "mean_duration";
  }
  return "?";
}

inline std::optional<Quantity> parse_quantity(std::string_view s) {
  std::string l = detail::lower(s);
  for (Quantity q : kAllQuantities) {
    if (l == to_string(q)) return q;
  }
  if (l == "starts" || l == "start") return Quantity::StartCount;
  if (l == "completes" || l == "complete") return Quantity::CompleteCount;
  if (l == "scraps" || l == "scrap") return Quantity::ScrapCount;
  if (l == "idle") return Quantity::MeanIdle;
  if (l == "duration") return Quantity::MeanDuration;
  return std::nullopt;
}

inline constexpr bool is_count(Quantity q) {
  return q == Quantity::StartCount || q == Quantity::CompleteCount || q == Quantity::ScrapCount;
}

inline constexpr Action counted_action(Quantity q) {
  switch (q) {
    case Quantity::CompleteCount: return Action::Complete;
    case Quantity::ScrapCount: return Action::Scrap;
    default: return Action::Start;
  }
}

inline constexpr int kDefaultBinMinutes = 30;

inline int bins_per_day(int bin_minutes) {
  if (bin_minutes <= 0 || kMinutesPerDay % bin_minutes != 0)
    throw InvalidArgument("bin width must divide 24h, got " + std::to_string(bin_minutes) + " min");
  return kMinutesPerDay / bin_minutes;
}

inline int bin_index(LocalTime t, int bin_minutes) { return minute_of_day(t) / bin_minutes; }

struct Shift {
  std::string id;
  int start = 0;  // minute of day, inclusive
  int end = 0;    // minute of day, exclusive; may wrap past midnight
};

// Contiguous, non-overlapping cover of the 24h day.
class ShiftSchedule {
 public:
  ShiftSchedule() : ShiftSchedule(default_shifts()) {}

  explicit ShiftSchedule(std::vector<Shift> shifts) : shifts_(std::move(shifts)) {
    if (shifts_.empty()) throw InvalidArgument("shift schedule is empty");
    int total = 0;
    for (std::size_t i = 0; i < shifts_.size(); ++i) {
      const auto& s = shifts_[i];
      if (s.start < 0 || s.start >= kMinutesPerDay || s.end < 0 || s.end >= kMinutesPerDay)
        throw InvalidArgument("shift '" + s.id + "' has a boundary outside the day");
      const auto& next = shifts_[(i + 1) % shifts_.size()];
      if (s.end != next.start) throw InvalidArgument("shift '" + s.id + "' does not end where the next one starts");
      int len = ((s.end - s.start) % kMinutesPerDay + kMinutesPerDay) % kMinutesPerDay;
      if (len == 0) len = kMinutesPerDay;
      total += len;
    }
    if (total != kMinutesPerDay) throw InvalidArgument("shift schedule does not cover exactly 24h");
  }

  static std::vector<Shift> default_shifts() {
    return {{"Shift 1", 23 * 60 + 30, 7 * 60 + 30}, {"Shift 2", 7 * 60 + 30, 15 * 60 + 30},
            {"Shift 3", 15 * 60 + 30, 23 * 60 + 30}};
  }

  const std::vector<Shift>& shifts() const { return shifts_; }

  void require_aligned(int bin_minutes) const {
    for (const auto& s : shifts_) {
      if (s.start % bin_minutes != 0)
        throw InvalidArgument("shift '" + s.id + "' boundary is not on a " + std::to_string(bin_minutes) + "-min bin edge");
    }
  }

  // Half-open [start, end) containment.
  const Shift& shift_at(int minute) const {
    minute = ((minute % kMinutesPerDay) + kMinutesPerDay) % kMinutesPerDay;
    for (const auto& s : shifts_) {
      int len = ((s.end - s.start) % kMinutesPerDay + kMinutesPerDay) % kMinutesPerDay;
      if (len == 0) len = kMinutesPerDay;
      int offset = ((minute - s.start) % kMinutesPerDay + kMinutesPerDay) % kMinutesPerDay;
      if (offset < len) return s;
    }
    return shifts_.front();  // unreachable for a validated schedule
  }

  friend bool operator==(const ShiftSchedule& a, const ShiftSchedule& b) {
    return a.shifts_.size() == b.shifts_.size() &&
           std::equal(a.shifts_.begin(), a.shifts_.end(), b.shifts_.begin(), [](const Shift& x, const Shift& y) {
             return x.id == y.id && x.start == y.start && x.end == y.end;
           });
  }

 private:
  std::vector<Shift> shifts_;
};

inline const std::string& shift_of(int minute_of_day, const ShiftSchedule& schedule) {
  return schedule.shift_at(minute_of_day).id;
}

using Curve = std::vector<std::optional<double>>;

struct BinSeries {
  Date date;
  int step = 0;
  Quantity quantity = Quantity::StartCount;
  int bin_minutes = kDefaultBinMinutes;
  Curve bins;
};

// Which historical dates feed a template or a gauge history.
struct Comparison {
  std::optional<std::chrono::weekday> weekday;  // unset: all days

  static Comparison all_days() { return {}; }
  static Comparison same_weekday(std::chrono::weekday w) { return {w}; }

  bool matches(Date d) const { return !weekday || weekday_of(d) == *weekday; }

  std::string label() const { return weekday ? "same_weekday:" + weekday_name(*weekday) : "all"; }

  friend bool operator==(const Comparison&, const Comparison&) = default;
};

namespace detail {

struct BinAccumulator {
  std::vector<double> sum;
  std::vector<std::size_t> n;
};

// Per-date accumulation of one (step, quantity); only dates with observations appear.
inline std::map<Date, BinAccumulator> accumulate_bins(const EventLog& log, const UnitMetrics* metrics, int step,
                                                      Quantity quantity, int bin_minutes) {
  const auto nbins = static_cast<std::size_t>(bins_per_day(bin_minutes));
  std::map<Date, BinAccumulator> days;
  auto add = [&](LocalTime at, double value) {
    auto& acc = days[date_of(at)];
    if (acc.sum.empty()) {
      acc.sum.assign(nbins, 0.0);
      acc.n.assign(nbins, 0);
    }
    auto b = static_cast<std::size_t>(bin_index(at, bin_minutes));
    acc.sum[b] += value;
    ++acc.n[b];
  };
  if (is_count(quantity)) {
    Action a = counted_action(quantity);
    for (const auto& e : log) {
      if (e.step == step && e.action == a) add(e.local, 1.0);
    }
  } else if (quantity == Quantity::MeanIdle) {
    for (const auto& i : metrics->idle) {
      if (i.to_step == step) add(i.started_at, to_minutes(i.idle));
    }
  } else {
    for (const auto& d : metrics->durations) {
      if (d.step == step && d.complete_flag) add(d.first_start, to_minutes(*d.duration));
    }
  }
  return days;
}

inline Curve to_curve(const BinAccumulator* acc, Quantity quantity, std::size_t nbins) {
  Curve c(nbins);
  for (std::size_t b = 0; b < nbins; ++b) {
    std::size_t n = acc ? acc->n[b] : 0;
    if (is_count(quantity)) {
      c[b] = static_cast<double>(n);
    } else if (n > 0) {
      c[b] = acc->sum[b] / static_cast<double>(n);
    }
  }
  return c;
}

}  // namespace detail

// Raw curves for every date of the log, one (step, quantity). Dates with no
// matching observation get zero counts or absent means.
inline std::map<Date, Curve> bin_all_dates(const EventLog& log, const UnitMetrics& metrics, int step,
                                           Quantity quantity, int bin_minutes = kDefaultBinMinutes) {
  const auto nbins = static_cast<std::size_t>(bins_per_day(bin_minutes));
  auto days = detail::accumulate_bins(log, &metrics, step, quantity, bin_minutes);
  std::map<Date, Curve> out;
  for (Date d : log.dates()) {
    auto it = days.find(d);
    out.emplace(d, detail::to_curve(it == days.end() ? nullptr : &it->second, quantity, nbins));
  }
  return out;
}

inline BinSeries bin_series(const EventLog& log, const UnitMetrics& metrics, Date date, int step, Quantity quantity,
                            int bin_minutes = kDefaultBinMinutes) {
  const auto nbins = static_cast<std::size_t>(bins_per_day(bin_minutes));
  auto days = detail::accumulate_bins(log, &metrics, step, quantity, bin_minutes);
  auto it = days.find(date);
  return {date, step, quantity, bin_minutes, detail::to_curve(it == days.end() ? nullptr : &it->second, quantity, nbins)};
}

// Counts bin events directly; mean quantities derive unit metrics from the whole
// log so idle periods and visits that cross midnight are attributed correctly.
inline BinSeries bin_series(const EventLog& log, Date date, int step, Quantity quantity,
                            int bin_minutes = kDefaultBinMinutes) {
  UnitMetrics metrics;
  if (!is_count(quantity)) metrics = unit_metrics(log);
  return bin_series(log, metrics, date, step, quantity, bin_minutes);
}

inline void require_ma_order(int order) {
  if (order < 1 || order % 2 == 0) throw InvalidArgument("moving-average order must be odd and >= 1");
}

// Centered window of `order` slots truncated at the day edges; each output is
// the mean of the present inputs in its window.
inline Curve moving_average(std::span<const std::optional<double>> bins, int order = 3) {
  require_ma_order(order);
  const int half = order / 2;
  const int n = static_cast<int>(bins.size());
  Curve out(bins.size());
  for (int i = 0; i < n; ++i) {
    double sum = 0;
    int cnt = 0;
    for (int j = std::max(0, i - half); j <= std::min(n - 1, i + half); ++j) {
      if (bins[static_cast<std::size_t>(j)]) {
        sum += *bins[static_cast<std::size_t>(j)];
        ++cnt;
      }
    }
    if (cnt > 0) out[static_cast<std::size_t>(i)] = sum / cnt;
  }
  return out;
}

struct TemplateOptions {
  int ma_order = 3;
  double lower_pct = 2.5;
  double upper_pct = 97.5;
  int bin_minutes = kDefaultBinMinutes;

  void validate() const {
    require_ma_order(ma_order);
    bins_per_day(bin_minutes);
    if (!(lower_pct > 0 && lower_pct < upper_pct && upper_pct < 100))
      throw InvalidArgument("percentile levels must satisfy 0 < lower < upper < 100");
  }
};

struct TemplateDay {
  int step = 0;
  Quantity quantity = Quantity::StartCount;
  Comparison comparison;
  int bin_minutes = kDefaultBinMinutes;
  int ma_order = 3;
  std::vector<Date> dates;  // historical dates pooled
  Curve ma_mean;
  Curve lower;
  Curve upper;
  std::vector<std::size_t> support;
  std::vector<std::string> shift;  // shift containing each bin's start
};

// Pools raw per-date bin values from each bin's MA window across every
// matching date. The mean of the pool is the MA mean; its percentiles are the
// bounds.
inline TemplateDay template_day(const EventLog& log, const UnitMetrics& metrics, int step, Quantity quantity,
                                const Comparison& comparison, const ShiftSchedule& schedule,
                                const TemplateOptions& options = {}, std::optional<Date> exclude = std::nullopt) {
  options.validate();
  schedule.require_aligned(options.bin_minutes);
  const int nbins = bins_per_day(options.bin_minutes);
  const int half = options.ma_order / 2;

  auto curves = bin_all_dates(log, metrics, step, quantity, options.bin_minutes);
  std::vector<const Curve*> matching;
  TemplateDay t;
  t.step = step;
  t.quantity = quantity;
  t.comparison = comparison;
  t.bin_minutes = options.bin_minutes;
  t.ma_order = options.ma_order;
  for (const auto& [date, curve] : curves) {
    if (comparison.matches(date) && date != exclude) {
      t.dates.push_back(date);
      matching.push_back(&curve);
    }
  }
  if (matching.empty()) {
    throw PreconditionError("no dates match comparison '" + comparison.label() + "' for step " + std::to_string(step));
  }

  const auto n = static_cast<std::size_t>(nbins);
  t.ma_mean.assign(n, std::nullopt);
  t.lower.assign(n, std::nullopt);
  t.upper.assign(n, std::nullopt);
  t.support.assign(n, 0);
  t.shift.resize(n);
  std::vector<double> pool;
  for (int i = 0; i < nbins; ++i) {
    const auto bi = static_cast<std::size_t>(i);
    t.shift[bi] = shift_of(i * options.bin_minutes, schedule);
    pool.clear();
    for (const Curve* c : matching) {
      for (int j = std::max(0, i - half); j <= std::min(nbins - 1, i + half); ++j) {
        if (const auto& v = (*c)[static_cast<std::size_t>(j)]) pool.push_back(*v);
      }
    }
    t.support[bi] = pool.size();
    if (pool.empty()) continue;
    // Summed in window order so a single-date template reproduces moving_average exactly.
    t.ma_mean[bi] = mean_of(pool);
    std::sort(pool.begin(), pool.end());
    t.lower[bi] = quantile_sorted(pool, options.lower_pct);
    t.upper[bi] = quantile_sorted(pool, options.upper_pct);
  }
  return t;
}

inline TemplateDay template_day(const EventLog& log, int step, Quantity quantity, const Comparison& comparison,
                                const ShiftSchedule& schedule, const TemplateOptions& options = {}) {
  UnitMetrics metrics;
  if (!is_count(quantity)) metrics = unit_metrics(log);
  return template_day(log, metrics, step, quantity, comparison, schedule, options);
}

// Shortest representation that round-trips.
inline std::string format_number(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

inline constexpr std::string_view kTemplateHeader = "bin_start,ma_mean,lower,upper,support";

// Absent values are written as empty fields.
inline void write_template_csv(std::ostream& out, const TemplateDay& t) {
  out << kTemplateHeader << '\n';
  auto opt = [](const std::optional<double>& v) { return v ? format_number(*v) : std::string(); };
  for (std::size_t i = 0; i < t.ma_mean.size(); ++i) {
    out << format_clock(static_cast<int>(i) * t.bin_minutes) << ',' << opt(t.ma_mean[i]) << ',' << opt(t.lower[i])
        << ',' << opt(t.upper[i]) << ',' << t.support[i] << '\n';
  }
}

}  // namespace mesviz
