#pragma once

#include <map>
#include <optional>

#include "mesviz/control.hpp"
#include "mesviz/metrics.hpp"
#include "mesviz/timeseries.hpp"

namespace mesviz {

// What a count value aggregates over; means are per unit regardless.
enum class CountScope : std::uint8_t { PerBin, PerDay };

// Per-(quantity, step) divisors taken from a full historical store. Dividing
// by them turns every reported value into a multiple of its historical mean.
class Rescaler {
 public:
  Rescaler() = default;

  Rescaler(const EventLog& log, const UnitMetrics& metrics, int bin_minutes = kDefaultBinMinutes)
      : bins_per_day_(bins_per_day(bin_minutes)) {
    const auto ndates = log.dates().size();
    std::map<int, std::array<std::size_t, 3>> counts;
    for (const auto& e : log) {
      if (e.action == Action::Delay) continue;
      ++counts[e.step][static_cast<std::size_t>(e.action)];
    }
    for (const auto& [step, c] : counts) {
      for (std::size_t a = 0; a < 3; ++a) {
        if (ndates > 0 && c[a] > 0)
          daily_[{a, step}] = static_cast<double>(c[a]) / static_cast<double>(ndates);
      }
    }
    for (const auto& [step, v] : idle_minutes_by_step(metrics)) idle_[step] = mean_of(v);
    for (const auto& [step, v] : duration_minutes_by_step(metrics)) duration_[step] = mean_of(v);
  }

  // Unset when the store has no positive mean for this quantity and step;
  // values are then passed through unchanged.
  std::optional<double> divisor(Quantity q, int step, CountScope scope = CountScope::PerDay) const {
    const std::map<int, double>* table = nullptr;
    if (q == Quantity::MeanIdle) table = &idle_;
    if (q == Quantity::MeanDuration) table = &duration_;
    if (table) {
      auto it = table->find(step);
      if (it == table->end() || !(it->second > 0)) return std::nullopt;
      return it->second;
    }
    auto it = daily_.find({static_cast<std::size_t>(counted_action(q)), step});
    if (it == daily_.end()) return std::nullopt;
    return scope == CountScope::PerDay ? it->second : it->second / bins_per_day_;
  }

  double apply(double value, Quantity q, int step, CountScope scope = CountScope::PerDay) const {
    auto d = divisor(q, step, scope);
    return d ? value / *d : value;
  }

  std::optional<double> apply(const std::optional<double>& value, Quantity q, int step,
                              CountScope scope = CountScope::PerDay) const {
    if (!value) return std::nullopt;
    return apply(*value, q, step, scope);
  }

  Curve apply(const Curve& c, Quantity q, int step, CountScope scope = CountScope::PerBin) const {
    Curve out(c.size());
    for (std::size_t i = 0; i < c.size(); ++i) out[i] = apply(c[i], q, step, scope);
    return out;
  }

 private:
  double bins_per_day_ = 48;
  std::map<std::pair<std::size_t, int>, double> daily_;  // mean count per date
  std::map<int, double> idle_;
  std::map<int, double> duration_;
};

}  // namespace mesviz
