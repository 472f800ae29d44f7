#pragma once

#include <optional>
#include <string>

#include "json.hpp"

#include "mesviz/control.hpp"
#include "mesviz/event_log.hpp"
#include "mesviz/metrics.hpp"
#include "mesviz/synthgen.hpp"
#include "mesviz/timeseries.hpp"

namespace mesviz {

using Json = nlohmann::json;

inline Json opt_json(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

inline Json to_json(const ShiftSchedule& s) {
  Json arr = Json::array();
  for (const auto& sh : s.shifts()) {
    arr.push_back({{"id", sh.id}, {"start", format_clock(sh.start)}, {"end", format_clock(sh.end % kMinutesPerDay)}});
  }
  return arr;
}

inline int clock_from_json(const Json& j, const char* what) {
  auto m = try_parse_clock(j.get<std::string>());
  if (!m) throw InvalidArgument(std::string("invalid ") + what + " time '" + j.get<std::string>() + "'");
  return *m % kMinutesPerDay;
}

inline ShiftSchedule shift_schedule_from_json(const Json& j) {
  if (!j.is_array()) throw InvalidArgument("shift schedule must be an array");
  std::vector<Shift> shifts;
  for (const auto& s : j) {
    shifts.push_back({s.at("id").get<std::string>(), clock_from_json(s.at("start"), "shift start"),
                      clock_from_json(s.at("end"), "shift end")});
  }
  return ShiftSchedule(std::move(shifts));
}

// "Shift 1=23:30-07:30;Shift 2=07:30-15:30;..."
inline ShiftSchedule parse_shift_schedule(std::string_view text) {
  std::vector<Shift> shifts;
  while (!text.empty()) {
    auto semi = text.find(';');
    std::string_view item = detail::trim(text.substr(0, semi));
    text = semi == std::string_view::npos ? std::string_view{} : text.substr(semi + 1);
    if (item.empty()) continue;
    auto eq = item.find('=');
    auto dash = item.rfind('-');
    if (eq == std::string_view::npos || dash == std::string_view::npos || dash < eq)
      throw InvalidArgument("invalid shift '" + std::string(item) + "' (expected id=HH:MM-HH:MM)");
    auto start = try_parse_clock(detail::trim(item.substr(eq + 1, dash - eq - 1)));
    auto end = try_parse_clock(detail::trim(item.substr(dash + 1)));
    if (!start || !end) throw InvalidArgument("invalid shift times in '" + std::string(item) + "'");
    shifts.push_back({std::string(detail::trim(item.substr(0, eq))), *start % kMinutesPerDay, *end % kMinutesPerDay});
  }
  return ShiftSchedule(std::move(shifts));
}

inline Json to_json(const GaugeThresholds& t) {
  return {{"count_green", t.count_green},
          {"count_orange", t.count_orange},
          {"cost_green", t.cost_green},
          {"cost_orange", t.cost_orange}};
}

inline GaugeThresholds gauge_thresholds_from_json(const Json& j, GaugeThresholds t = {}) {
  t.count_green = j.value("count_green", t.count_green);
  t.count_orange = j.value("count_orange", t.count_orange);
  t.cost_green = j.value("cost_green", t.cost_green);
  t.cost_orange = j.value("cost_orange", t.cost_orange);
  t.validate();
  return t;
}

inline Json to_json(const SummaryStats& s) {
  return {{"mean", s.mean}, {"sd", s.sd}, {"median", s.median}, {"p2.5", s.p2_5}, {"p97.5", s.p97_5}, {"n", s.n}};
}

inline Json to_json(const ValidationReport& r) {
  Json errors = Json::array();
  for (const auto& e : r.record_errors) errors.push_back({{"line", e.line}, {"reason", e.reason}});
  Json anomalies = Json::array();
  for (const auto& a : r.anomalies) {
    Json j{{"kind", to_string(a.kind)}, {"unit_id", a.unit_id}, {"step", a.step}, {"detail", a.detail}};
    if (a.line) j["line"] = *a.line;
    if (a.event_index) j["event_index"] = *a.event_index;
    if (a.related_index) j["related_index"] = *a.related_index;
    anomalies.push_back(std::move(j));
  }
  return {{"record_errors", errors}, {"anomalies", anomalies}};
}

inline Json to_json(const GaugeState& g) {
  return {{"metric", to_string(g.metric)},
          {"today", opt_json(g.today)},
          {"rank", opt_json(g.rank)},
          {"color", g.color ? Json(std::string(to_string(*g.color))) : Json(nullptr)},
          {"history_n", g.history_n}};
}

inline Json to_json(const LogNormalLaw& l) { return {{"median_minutes", l.median_minutes}, {"sigma", l.sigma}}; }

inline LogNormalLaw lognormal_from_json(const Json& j, LogNormalLaw l) {
  l.median_minutes = j.value("median_minutes", l.median_minutes);
  l.sigma = j.value("sigma", l.sigma);
  return l;
}

inline Json to_json(const GeneratorConfig& c) {
  Json steps = Json::array();
  for (const auto& s : c.steps) {
    steps.push_back({{"scrap_prob", s.scrap_prob},
                     {"delay_prob", s.delay_prob},
                     {"idle", to_json(s.idle)},
                     {"duration", to_json(s.duration)},
                     {"delay_extra", to_json(s.delay_extra)}});
  }
  return {{"units_per_day", c.units_per_day},
          {"start_date", format_date(c.start_date)},
          {"days", c.days},
          {"seed", c.seed},
          {"excursion_prob", c.excursion_prob},
          {"max_idle_minutes", c.max_idle_minutes},
          {"weekday_volume", c.weekday_volume},
          {"intensity", c.intensity},
          {"shifts", to_json(c.schedule)},
          {"steps", steps}};
}

// Keys absent from `j` keep the values of `base`.
inline GeneratorConfig generator_config_from_json(const Json& j, GeneratorConfig base = preset_paperlike()) {
  try {
    base.units_per_day = j.value("units_per_day", base.units_per_day);
    if (j.contains("start_date")) base.start_date = parse_date(j.at("start_date").get<std::string>());
    base.days = j.value("days", base.days);
    base.seed = j.value("seed", base.seed);
    base.excursion_prob = j.value("excursion_prob", base.excursion_prob);
    base.max_idle_minutes = j.value("max_idle_minutes", base.max_idle_minutes);
    if (j.contains("weekday_volume")) base.weekday_volume = j.at("weekday_volume").get<std::array<double, 7>>();
    if (j.contains("shifts")) base.schedule = shift_schedule_from_json(j.at("shifts"));
    if (j.contains("intensity")) base.intensity = j.at("intensity").get<std::vector<double>>();
    if (j.contains("steps")) {
      const auto& steps = j.at("steps");
      std::vector<StepParams> out;
      for (std::size_t i = 0; i < steps.size(); ++i) {
        StepParams p = i < base.steps.size() ? base.steps[i] : StepParams{};
        const auto& s = steps[i];
        p.scrap_prob = s.value("scrap_prob", p.scrap_prob);
        p.delay_prob = s.value("delay_prob", p.delay_prob);
        if (s.contains("idle")) p.idle = lognormal_from_json(s["idle"], p.idle);
        if (s.contains("duration")) p.duration = lognormal_from_json(s["duration"], p.duration);
        if (s.contains("delay_extra")) p.delay_extra = lognormal_from_json(s["delay_extra"], p.delay_extra);
        out.push_back(p);
      }
      base.steps = std::move(out);
    }
  } catch (const Json::exception& e) {
    throw InvalidArgument(std::string("generator config: ") + e.what());
  }
  base.validate();
  return base;
}

}  // namespace mesviz
