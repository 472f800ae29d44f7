#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <sstream>
#include <string>
#include <unordered_map>

#include "httplib.h"
#include "json.hpp"

#include "mesviz/control.hpp"
#include "mesviz/event_log.hpp"
#include "mesviz/json_io.hpp"
#include "mesviz/metrics.hpp"
#include "mesviz/rescaling.hpp"
#include "mesviz/timeseries.hpp"

namespace mesviz {

struct AppConfig {
  std::string listen = "127.0.0.1:8080";
  std::string timezone = "UTC0";  // POSIX TZ rule
  ShiftSchedule schedule;
  int bin_minutes = kDefaultBinMinutes;
  int ma_order = 3;
  double lower_pct = 2.5;
  double upper_pct = 97.5;
  GaugeThresholds thresholds;
  std::string data_dir = "data";
  int max_step = 7;

  TemplateOptions template_options() const { return {ma_order, lower_pct, upper_pct, bin_minutes}; }

  void validate() const {
    template_options().validate();
    schedule.require_aligned(bin_minutes);
    thresholds.validate();
    SiteTimeZone{timezone};
    if (max_step < 1) throw InvalidArgument("max_step must be >= 1");
    host_port();
  }

  std::pair<std::string, int> host_port() const {
    auto colon = listen.rfind(':');
    int port = 0;
    if (colon == std::string::npos || !detail::parse_uint(std::string_view(listen).substr(colon + 1), port) ||
        port > 65535)
      throw InvalidArgument("listen address must be host:port, got '" + listen + "'");
    return {listen.substr(0, colon), port};
  }

  std::string events_path() const { return (std::filesystem::path(data_dir) / "events.csv").string(); }
};

inline Json to_json(const AppConfig& c) {
  return {{"listen", c.listen},
          {"timezone", c.timezone},
          {"shifts", to_json(c.schedule)},
          {"bin_minutes", c.bin_minutes},
          {"ma_order", c.ma_order},
          {"lower_pct", c.lower_pct},
          {"upper_pct", c.upper_pct},
          {"gauge_thresholds", to_json(c.thresholds)},
          {"data_dir", c.data_dir},
          {"max_step", c.max_step}};
}

inline AppConfig app_config_from_json(const Json& j, AppConfig c = {}) {
  try {
    c.listen = j.value("listen", c.listen);
    c.timezone = j.value("timezone", c.timezone);
    if (j.contains("shifts")) c.schedule = shift_schedule_from_json(j.at("shifts"));
    c.bin_minutes = j.value("bin_minutes", c.bin_minutes);
    c.ma_order = j.value("ma_order", c.ma_order);
    c.lower_pct = j.value("lower_pct", c.lower_pct);
    c.upper_pct = j.value("upper_pct", c.upper_pct);
    if (j.contains("gauge_thresholds")) c.thresholds = gauge_thresholds_from_json(j.at("gauge_thresholds"), c.thresholds);
    c.data_dir = j.value("data_dir", c.data_dir);
    c.max_step = j.value("max_step", c.max_step);
  } catch (const Json::exception& e) {
    throw InvalidArgument(std::string("config: ") + e.what());
  }
  return c;
}

using EnvLookup = std::function<std::optional<std::string>(const char*)>;

inline std::optional<std::string> process_env(const char* name) {
  if (const char* v = std::getenv(name)) return std::string(v);
  return std::nullopt;
}

namespace detail {

inline double env_double(const std::string& name, const std::string& v) {
  try {
    std::size_t pos = 0;
    double d = std::stod(v, &pos);
    if (pos == v.size()) return d;
  } catch (const std::exception&) {
  }
  throw InvalidArgument(name + ": not a number: '" + v + "'");
}

inline int env_int(const std::string& name, const std::string& v) {
  int out = 0;
  if (!parse_uint(v, out)) throw InvalidArgument(name + ": not a non-negative integer: '" + v + "'");
  return out;
}

inline std::vector<double> env_list(const std::string& name, const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(env_double(name, std::string(trim(item))));
  return out;
}

}  // namespace detail

// Environment overrides, one per AppConfig field:
//   MESVIZ_LISTEN, MESVIZ_TIMEZONE, MESVIZ_SHIFTS ("id=HH:MM-HH:MM;..."),
//   MESVIZ_BIN_MINUTES, MESVIZ_MA_ORDER, MESVIZ_PERCENTILES ("lower,upper"),
//   MESVIZ_GAUGE_THRESHOLDS ("count_green,count_orange,cost_green,cost_orange"),
//   MESVIZ_DATA_DIR, MESVIZ_MAX_STEP
inline AppConfig apply_env_overrides(AppConfig c, const EnvLookup& env = process_env) {
  if (auto v = env("MESVIZ_LISTEN")) c.listen = *v;
  if (auto v = env("MESVIZ_TIMEZONE")) c.timezone = *v;
  if (auto v = env("MESVIZ_SHIFTS")) c.schedule = parse_shift_schedule(*v);
  if (auto v = env("MESVIZ_BIN_MINUTES")) c.bin_minutes = detail::env_int("MESVIZ_BIN_MINUTES", *v);
  if (auto v = env("MESVIZ_MA_ORDER")) c.ma_order = detail::env_int("MESVIZ_MA_ORDER", *v);
  if (auto v = env("MESVIZ_PERCENTILES")) {
    auto p = detail::env_list("MESVIZ_PERCENTILES", *v);
    if (p.size() != 2) throw InvalidArgument("MESVIZ_PERCENTILES expects two values");
    c.lower_pct = p[0];
    c.upper_pct = p[1];
  }
  if (auto v = env("MESVIZ_GAUGE_THRESHOLDS")) {
    auto p = detail::env_list("MESVIZ_GAUGE_THRESHOLDS", *v);
    if (p.size() != 4) throw InvalidArgument("MESVIZ_GAUGE_THRESHOLDS expects four values");
    c.thresholds = {p[0], p[1], p[2], p[3]};
  }
  if (auto v = env("MESVIZ_DATA_DIR")) c.data_dir = *v;
  if (auto v = env("MESVIZ_MAX_STEP")) c.max_step = detail::env_int("MESVIZ_MAX_STEP", *v);
  return c;
}

// Defaults, then the optional JSON file, then the environment.
inline AppConfig load_app_config(const std::optional<std::string>& path, const EnvLookup& env = process_env) {
  AppConfig c;
  if (path) {
    std::ifstream in(*path);
    if (!in) throw InvalidArgument("cannot open config file '" + *path + "'");
    Json j;
    try {
      j = Json::parse(in);
    } catch (const Json::exception& e) {
      throw InvalidArgument("config file '" + *path + "': " + e.what());
    }
    c = app_config_from_json(j);
  }
  c = apply_env_overrides(std::move(c), env);
  c.validate();
  return c;
}

// Immutable view of the store after a completed ingest.
struct StoreSnapshot {
  EventLog log;
  UnitMetrics metrics;
  std::vector<Date> dates;
  std::map<Date, std::vector<std::size_t>> by_date;
  std::map<int, std::vector<std::size_t>> by_step;
  std::unordered_map<std::string, std::vector<std::size_t>> by_unit;
  Rescaler rescaler;

  StoreSnapshot() = default;

  StoreSnapshot(EventLog l, int bin_minutes) : log(std::move(l)), metrics(unit_metrics(log)), dates(log.dates()) {
    for (std::size_t i = 0; i < log.size(); ++i) {
      const auto& e = log[i];
      by_date[date_of(e.local)].push_back(i);
      by_step[e.step].push_back(i);
      by_unit[e.unit_id].push_back(i);
    }
    rescaler = Rescaler(log, metrics, bin_minutes);
  }
};

struct HttpResponse {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";
};

using QueryParams = std::map<std::string, std::string>;

// Request handling independent of the transport. Reads run against an
// immutable snapshot; ingests are serialized and publish a new snapshot only
// after the events are persisted.
class Service {
 public:
  explicit Service(AppConfig config)
      : config_(std::move(config)), zone_(config_.timezone), snapshot_(std::make_shared<StoreSnapshot>()) {
    config_.validate();
  }

  const AppConfig& config() const { return config_; }

  std::shared_ptr<const StoreSnapshot> snapshot() const {
    std::shared_lock lock(snapshot_mutex_);
    return snapshot_;
  }

  // Re-reads the persisted log. Rejected rows in the file are ignored.
  void load() {
    std::lock_guard ingest_lock(ingest_mutex_);
    EventLog log;
    if (std::filesystem::exists(config_.events_path())) {
      log = read_event_log_file(config_.events_path(), parse_options()).log;
    }
    auto next = std::make_shared<StoreSnapshot>(std::move(log), config_.bin_minutes);
    std::unique_lock lock(snapshot_mutex_);
    snapshot_ = std::move(next);
  }

  HttpResponse ingest(std::string_view body) {
    std::lock_guard ingest_lock(ingest_mutex_);
    if (detail::trim(body).empty()) return json_response(200, ingest_summary(0, {}));
    ParseResult parsed;
    try {
      parsed = parse_event_log(body, parse_options(), "ingest");
    } catch (const FormatError& e) {
      return error(400, e.what());
    }
    auto batch_report = parsed.report;
    batch_report.append(validate_log(parsed.log));

    auto current = snapshot();
    auto next = std::make_shared<StoreSnapshot>(current->log.merged_with(parsed.log), config_.bin_minutes);
    try {
      persist(parsed.log);
    } catch (const std::exception& e) {
      return error(500, e.what());
    }
    {
      std::unique_lock lock(snapshot_mutex_);
      snapshot_ = std::move(next);
    }
    return json_response(200, ingest_summary(parsed.log.size(), batch_report));
  }

  HttpResponse get(std::string_view path, const QueryParams& query) const {
    try {
      auto snap = snapshot();
      if (path == "/meta") return json_response(200, meta(*snap));
      if (path == "/breakdown") return json_response(200, breakdown(*snap));
      if (path == "/series") return json_response(200, series(*snap, query));
      if (path == "/template") return json_response(200, template_json(*snap, query));
      if (path == "/compare") return json_response(200, compare(*snap, query));
      if (path == "/kpis") return json_response(200, kpis(*snap, query));
      return error(404, "no such endpoint: " + std::string(path));
    } catch (const NotFound& e) {
      return error(404, e.what());
    } catch (const PreconditionError& e) {
      return error(422, e.what());
    } catch (const InvalidArgument& e) {
      return error(400, e.what());
    } catch (const std::exception& e) {
      return error(500, e.what());
    }
  }

  // Values computed here are the module results divided by the store means.
  Json series(const StoreSnapshot& s, const QueryParams& q) const {
    Date date = require_date(q);
    int step = require_step(q);
    Quantity quantity = require_quantity(q);
    auto raw = bin_series(s.log, s.metrics, date, step, quantity, config_.bin_minutes);
    auto ma = moving_average(raw.bins, config_.ma_order);
    auto raw_scaled = s.rescaler.apply(raw.bins, quantity, step);
    auto ma_scaled = s.rescaler.apply(ma, quantity, step);
    Json bins = Json::array();
    for (std::size_t i = 0; i < raw.bins.size(); ++i) {
      int minute = static_cast<int>(i) * config_.bin_minutes;
      bins.push_back({{"bin_start", format_clock(minute)},
                      {"shift", shift_of(minute, config_.schedule)},
                      {"raw", opt_json(raw_scaled[i])},
                      {"ma", opt_json(ma_scaled[i])}});
    }
    return {{"date", format_date(date)},      {"step", step},
            {"quantity", to_string(quantity)}, {"bin_minutes", config_.bin_minutes},
            {"ma_order", config_.ma_order},    {"bins", bins}};
  }

  Json template_json(const StoreSnapshot& s, const QueryParams& q) const {
    int step = require_step(q);
    Quantity quantity = require_quantity(q);
    auto date = optional_date(q);
    Comparison cmp = require_comparison(q, date);
    auto t = template_day(s.log, s.metrics, step, quantity, cmp, config_.schedule, config_.template_options());
    Json out = template_body(s, t);
    out["comparison"] = cmp.label();
    return out;
  }

  Json compare(const StoreSnapshot& s, const QueryParams& q) const {
    Date date = require_date(q);
    int step = require_step(q);
    Quantity quantity = require_quantity(q);
    Comparison cmp = require_comparison(q, date);
    auto t = template_day(s.log, s.metrics, step, quantity, cmp, config_.schedule, config_.template_options(), date);
    auto today = bin_series(s.log, s.metrics, date, step, quantity, config_.bin_minutes);
    auto r = compare_today(today, t);
    auto today_scaled = s.rescaler.apply(r.today_ma, quantity, step);
    auto lower = s.rescaler.apply(t.lower, quantity, step);
    auto upper = s.rescaler.apply(t.upper, quantity, step);
    Json bins = Json::array();
    for (std::size_t i = 0; i < r.flags.size(); ++i) {
      bins.push_back({{"bin_start", format_clock(static_cast<int>(i) * t.bin_minutes)},
                      {"today_ma", opt_json(today_scaled[i])},
                      {"lower", opt_json(lower[i])},
                      {"upper", opt_json(upper[i])},
                      {"flag", to_string(r.flags[i])}});
    }
    return {{"date", format_date(date)},
            {"step", step},
            {"quantity", to_string(quantity)},
            {"comparison", cmp.label()},
            {"history_days", t.dates.size()},
            {"below", r.below},
            {"above", r.above},
            {"bins_with_data", r.with_data},
            {"exceedance_fraction", r.exceedance_fraction},
            {"bins", bins}};
  }

  Json kpis(const StoreSnapshot& s, const QueryParams& q) const {
    Date date = require_date(q);
    int step = require_step(q);
    Comparison cmp = require_comparison(q, date);
    auto k = daily_kpis(s.log, s.metrics, date, step);
    auto gauges = homepage_state(s.log, s.metrics, date, step, cmp, config_.thresholds);
    Json g = Json::array();
    for (auto gs : gauges) {
      gs.today = s.rescaler.apply(gs.today, gs.metric, step, CountScope::PerDay);
      g.push_back(to_json(gs));
    }
    auto scaled = [&](Quantity qty) { return opt_json(s.rescaler.apply(k.value(qty), qty, step, CountScope::PerDay)); };
    Json kp{{"n_start", scaled(Quantity::StartCount)},
            {"n_complete", scaled(Quantity::CompleteCount)},
            {"n_scrap", scaled(Quantity::ScrapCount)},
            {"mean_idle", scaled(Quantity::MeanIdle)},
            {"mean_duration", scaled(Quantity::MeanDuration)}};
    return {{"date", format_date(date)}, {"step", step}, {"comparison", cmp.label()}, {"kpis", kp}, {"gauges", g}};
  }

  Json breakdown(const StoreSnapshot& s) const {
    auto b = action_breakdown(s.log, config_.max_step);
    Json steps = Json::array();
    for (int st = 1; st <= b.max_step; ++st) {
      Json counts, props;
      for (Action a : kAllActions) {
        counts[std::string(to_string(a))] = b.count(st, a);
        props[std::string(to_string(a))] = b.proportion(st, a);
      }
      steps.push_back({{"step", st}, {"counts", counts}, {"proportions", props}});
    }
    Json totals;
    for (Action a : kAllActions) totals[std::string(to_string(a))] = b.total(a);
    return {{"steps", steps}, {"totals", totals}};
  }

  Json meta(const StoreSnapshot& s) const {
    Json range = nullptr;
    if (!s.dates.empty()) range = {{"from", format_date(s.dates.front())}, {"to", format_date(s.dates.back())}};
    Json quantities = Json::array();
    for (Quantity q : kAllQuantities) quantities.push_back(to_string(q));
    return {{"steps", {{"min", 1}, {"max", config_.max_step}}},
            {"date_range", range},
            {"dates", s.dates.size()},
            {"events", s.log.size()},
            {"units", s.by_unit.size()},
            {"shift_schedule", to_json(config_.schedule)},
            {"gauge_thresholds", to_json(config_.thresholds)},
            {"quantities", quantities},
            {"config", to_json(config_)}};
  }

 private:
  class NotFound : public Error {
   public:
    using Error::Error;
  };

  ParseOptions parse_options() const { return {zone_, config_.max_step}; }

  static Json ingest_summary(std::size_t accepted, const ValidationReport& report) {
    Json r = to_json(report);
    return {{"accepted", accepted},
            {"rejected", report.record_errors.size()},
            {"record_errors", r["record_errors"]},
            {"anomalies", r["anomalies"]}};
  }

  void persist(const EventLog& batch) const {
    namespace fs = std::filesystem;
    if (batch.empty()) return;
    fs::create_directories(config_.data_dir);
    const auto path = config_.events_path();
    const bool fresh = !fs::exists(path) || fs::file_size(path) == 0;
    const auto old_size = fresh ? 0 : fs::file_size(path);
    {
      std::ofstream out(path, std::ios::binary | std::ios::app);
      if (out) {
        write_event_log(out, batch, fresh);
        out.flush();
      }
      if (out) return;
    }
    std::error_code ec;
    fs::resize_file(path, old_size, ec);
    throw IngestError("failed to persist events to '" + path + "'");
  }

  Json template_body(const StoreSnapshot& s, const TemplateDay& t) const {
    auto mean = s.rescaler.apply(t.ma_mean, t.quantity, t.step);
    auto lower = s.rescaler.apply(t.lower, t.quantity, t.step);
    auto upper = s.rescaler.apply(t.upper, t.quantity, t.step);
    Json bins = Json::array();
    for (std::size_t i = 0; i < mean.size(); ++i) {
      bins.push_back({{"bin_start", format_clock(static_cast<int>(i) * t.bin_minutes)},
                      {"shift", t.shift[i]},
                      {"ma_mean", opt_json(mean[i])},
                      {"lower", opt_json(lower[i])},
                      {"upper", opt_json(upper[i])},
                      {"support", t.support[i]}});
    }
    return {{"step", t.step},
            {"quantity", to_string(t.quantity)},
            {"bin_minutes", t.bin_minutes},
            {"ma_order", t.ma_order},
            {"lower_pct", config_.lower_pct},
            {"upper_pct", config_.upper_pct},
            {"history_days", t.dates.size()},
            {"bins", bins}};
  }

  static const std::string& require(const QueryParams& q, const char* name) {
    auto it = q.find(name);
    if (it == q.end() || it->second.empty()) throw InvalidArgument(std::string("missing query parameter '") + name + "'");
    return it->second;
  }

  static Date require_date(const QueryParams& q) { return parse_date(require(q, "date")); }

  static std::optional<Date> optional_date(const QueryParams& q) {
    auto it = q.find("date");
    if (it == q.end() || it->second.empty()) return std::nullopt;
    return parse_date(it->second);
  }

  int require_step(const QueryParams& q) const {
    const auto& v = require(q, "step");
    int step = 0;
    if (!detail::parse_uint(v, step) || step < 1 || step > config_.max_step)
      throw NotFound("unknown step '" + v + "'");
    return step;
  }

  static Quantity require_quantity(const QueryParams& q) {
    const auto& v = require(q, "quantity");
    auto qty = parse_quantity(v);
    if (!qty) throw InvalidArgument("unknown quantity '" + v + "'");
    return *qty;
  }

  // all | same_weekday (needs date) | a weekday name
  static Comparison require_comparison(const QueryParams& q, std::optional<Date> date) {
    auto it = q.find("comparison");
    std::string v = it == q.end() || it->second.empty() ? "all" : detail::lower(it->second);
    if (v == "all" || v == "overall" || v == "all_days") return Comparison::all_days();
    if (v == "same_weekday") {
      if (!date) throw InvalidArgument("comparison=same_weekday needs a date");
      return Comparison::same_weekday(weekday_of(*date));
    }
    if (v.rfind("same_weekday:", 0) == 0) v = v.substr(13);
    if (auto w = try_parse_weekday(v)) return Comparison::same_weekday(*w);
    throw InvalidArgument("unknown comparison '" + v + "'");
  }

  static HttpResponse json_response(int status, const Json& body) { return {status, body.dump(), "application/json"}; }

  static HttpResponse error(int status, const std::string& message) {
    return json_response(status, Json{{"error", message}, {"status", status}});
  }

  AppConfig config_;
  SiteTimeZone zone_;
  mutable std::shared_mutex snapshot_mutex_;
  std::mutex ingest_mutex_;
  std::shared_ptr<const StoreSnapshot> snapshot_;
};

// Wires the service into an HTTP server; the caller owns listen/stop.
inline void register_routes(httplib::Server& server, Service& service) {
  auto reply = [](httplib::Response& res, const HttpResponse& r) {
    res.status = r.status;
    res.set_header("Access-Control-Allow-Origin", "*");
    res.set_content(r.body, r.content_type.c_str());
  };
  for (const char* path : {"/meta", "/breakdown", "/series", "/template", "/compare", "/kpis"}) {
    std::string p = path;
    server.Get(p, [&service, reply, p](const httplib::Request& req, httplib::Response& res) {
      QueryParams q;
      for (const auto& [k, v] : req.params) q.emplace(k, v);
      reply(res, service.get(p, q));
    });
  }
  server.Post("/ingest", [&service, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, service.ingest(req.body));
  });
}

inline int serve(const AppConfig& config) {
  Service service(config);
  service.load();
  httplib::Server server;
  register_routes(server, service);
  auto [host, port] = config.host_port();
  if (!server.listen(host, port)) throw Error("cannot listen on " + config.listen);
  return 0;
}

}  // namespace mesviz
