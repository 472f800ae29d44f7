#pragma once

#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"

#include "mesviz/control.hpp"
#include "mesviz/event_log.hpp"
#include "mesviz/json_io.hpp"
#include "mesviz/metrics.hpp"
#include "mesviz/rescaling.hpp"
#include "mesviz/server.hpp"
#include "mesviz/synthgen.hpp"
#include "mesviz/timeseries.hpp"

namespace mesviz::cli {

// Batch front end. `-` names the standard streams for paths.
class Runner {
 public:
  Runner(std::istream& in, std::ostream& out, std::ostream& err) : in_(in), out_(out), err_(err) {}

  int run(int argc, const char* const* argv) {
    CLI::App app{"MES process log analytics: validation, reports, templates, synthetic logs, HTTP API"};
    app.require_subcommand(1);
    std::string tz = "UTC0";
    int max_step = 7;
    app.add_option("--timezone", tz, "Site time zone as a POSIX TZ rule (e.g. UTC0, GMT0IST,M3.5.0/1,M10.5.0)");
    app.add_option("--max-step", max_step, "Highest valid process step")->check(CLI::PositiveNumber);

    std::string path;
    auto* validate = app.add_subcommand("validate", "Check a log; exit 0 iff no row was rejected");
    validate->add_option("path", path, "Log file or -")->required();

    ReportArgs report;
    auto* rep = app.add_subcommand("report", "Idle-time or duration summary per step plus the action breakdown");
    rep->add_option("path", path, "Log file or -")->required();
    rep->add_option("--step", report.step, "Restrict to one step");
    rep->add_option("--quantity", report.quantity, "idle | duration")->check(CLI::IsMember({"idle", "duration"}));
    rep->add_option("--comparison", report.comparison, "all | weekday name (mon..sun)");
    rep->add_option("--out", report.out, "Output file or -");
    rep->add_flag("--raw", report.raw, "Absolute minutes instead of multiples of the step mean");
    rep->add_option("--precision", report.precision, "Decimal places")->check(CLI::Range(0, 12));

    TemplateArgs tmpl;
    auto* tp = app.add_subcommand("template", "Export a template day as delimited text");
    tp->add_option("path", path, "Log file or -")->required();
    tp->add_option("--step", tmpl.step, "Process step")->required();
    tp->add_option("--quantity", tmpl.quantity, "start_count | complete_count | scrap_count | mean_idle | mean_duration");
    tp->add_option("--comparison", tmpl.comparison, "all | weekday name (mon..sun)");
    tp->add_option("--out", tmpl.out, "Output file or -");
    tp->add_flag("--raw", tmpl.raw, "Absolute values instead of multiples of the store mean");
    tp->add_option("--ma-order", tmpl.options.ma_order, "Moving-average order (odd)");
    tp->add_option("--bin-minutes", tmpl.options.bin_minutes, "Bin width in minutes");
    tp->add_option("--lower", tmpl.options.lower_pct, "Lower percentile level");
    tp->add_option("--upper", tmpl.options.upper_pct, "Upper percentile level");
    std::string shifts;
    tp->add_option("--shifts", shifts, "Shift schedule 'id=HH:MM-HH:MM;...'");

    SimulateArgs sim;
    auto* sm = app.add_subcommand("simulate", "Write a synthetic log");
    auto* preset_opt = sm->add_option("--preset", sim.preset, "Built-in configuration")->check(CLI::IsMember({"paperlike"}));
    auto* config_opt = sm->add_option("--config", sim.config, "JSON generator configuration");
    preset_opt->excludes(config_opt);
    sm->add_option("--seed", sim.seed, "Random seed (overrides the configuration)");
    sm->add_option("--days", sim.days, "Number of days (overrides the configuration)");
    sm->add_option("--units-per-day", sim.units_per_day, "Units released per day (overrides the configuration)");
    sm->add_option("--out", sim.out, "Output file or -");

    std::optional<std::string> server_config;
    auto* sv = app.add_subcommand("serve", "Run the HTTP API");
    sv->add_option("--config", server_config, "JSON server configuration");

    try {
      app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
      return app.exit(e, out_, err_);
    }

    try {
      ParseOptions popts{SiteTimeZone(tz), max_step};
      if (*validate) return cmd_validate(path, popts);
      if (*rep) return cmd_report(path, popts, report);
      if (*tp) {
        tmpl.schedule = shifts.empty() ? ShiftSchedule{} : parse_shift_schedule(shifts);
        return cmd_template(path, popts, tmpl);
      }
      if (*sm) return cmd_simulate(sim);
      if (*sv) return serve(load_app_config(server_config));
    } catch (const Error& e) {
      err_ << "error: " << e.what() << '\n';
      return 1;
    } catch (const std::exception& e) {
      err_ << "error: " << e.what() << '\n';
      return 2;
    }
    return 0;
  }

 private:
  struct ReportArgs {
    std::optional<int> step;
    std::string quantity = "duration";
    std::string comparison = "all";
    std::string out = "-";
    bool raw = false;
    int precision = 2;
  };
  struct TemplateArgs {
    int step = 1;
    std::string quantity = "start_count";
    std::string comparison = "all";
    std::string out = "-";
    bool raw = false;
    TemplateOptions options;
    ShiftSchedule schedule;
  };
  struct SimulateArgs {
    std::string preset;
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<int> days;
    std::optional<std::size_t> units_per_day;
    std::string out = "-";
  };

  ParseResult read(const std::string& path, const ParseOptions& popts) {
    if (path == "-") return parse_event_log(in_, popts, "stdin");
    return read_event_log_file(path, popts);
  }

  // Writes through `fn` to a file or, for "-", standard output.
  template <typename Fn>
  void write_to(const std::string& path, Fn&& fn) {
    if (path == "-") {
      fn(out_);
      return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IngestError("cannot write '" + path + "'");
    fn(f);
    if (!f) throw IngestError("failed writing '" + path + "'");
  }

  static Comparison parse_comparison(const std::string& s) {
    std::string l = detail::lower(s);
    if (l == "all") return Comparison::all_days();
    if (auto w = try_parse_weekday(l)) return Comparison::same_weekday(*w);
    throw InvalidArgument("unknown comparison '" + s + "' (use all or a weekday name)");
  }

  int cmd_validate(const std::string& path, const ParseOptions& popts) {
    auto parsed = read(path, popts);
    auto report = parsed.report;
    report.append(validate_log(parsed.log));
    out_ << "events: " << parsed.log.size() << '\n';
    out_ << "record errors: " << report.record_errors.size() << '\n';
    for (const auto& e : report.record_errors) out_ << "  line " << e.line << ": " << e.reason << '\n';
    out_ << "anomalies: " << report.anomalies.size() << '\n';
    for (const auto& a : report.anomalies) {
      out_ << "  " << to_string(a.kind);
      if (a.line) out_ << " line " << *a.line;
      if (a.event_index) out_ << " event " << *a.event_index;
      out_ << " unit " << a.unit_id << " step " << a.step;
      if (!a.detail.empty()) out_ << ": " << a.detail;
      out_ << '\n';
    }
    return report.record_errors.empty() ? 0 : 1;
  }

  int cmd_report(const std::string& path, const ParseOptions& popts, const ReportArgs& args) {
    auto parsed = read(path, popts);
    const auto& log = parsed.log;
    if (log.empty()) throw PreconditionError("no events");
    Comparison cmp = parse_comparison(args.comparison);
    auto metrics = unit_metrics(log);
    const bool idle = args.quantity == "idle";

    // Per step: values attributed to matching dates; divisor from the full history.
    std::map<int, std::vector<double>> all, selected;
    if (idle) {
      for (const auto& i : metrics.idle) {
        all[i.to_step].push_back(to_minutes(i.idle));
        if (cmp.matches(date_of(i.started_at))) selected[i.to_step].push_back(to_minutes(i.idle));
      }
    } else {
      for (const auto& d : metrics.durations) {
        if (!d.complete_flag) continue;
        all[d.step].push_back(to_minutes(*d.duration));
        if (cmp.matches(date_of(d.first_start))) selected[d.step].push_back(to_minutes(*d.duration));
      }
    }
    std::vector<SummaryRow> rows;
    for (auto& [step, values] : selected) {
      if (args.step && step != *args.step) continue;
      if (!args.raw) {
        double divisor = mean_of(all[step]);
        if (divisor > 0) {
          for (double& v : values) v /= divisor;
        }
      }
      rows.push_back({step, summarize(values)});
    }
    if (rows.empty()) throw PreconditionError("no " + args.quantity + " values for the selection");

    auto b = action_breakdown(log, popts.max_step);
    write_to(args.out, [&](std::ostream& os) {
      write_summary_table(os, rows, args.precision);
      os << '\n' << "step,start,complete,scrap,delay\n";
      for (int s = 1; s <= b.max_step; ++s) {
        if (args.step && s != *args.step) continue;
        os << s;
        for (Action a : kAllActions) os << ',' << format_fixed(b.proportion(s, a), args.precision);
        os << '\n';
      }
    });
    return 0;
  }

  int cmd_template(const std::string& path, const ParseOptions& popts, const TemplateArgs& args) {
    auto parsed = read(path, popts);
    const auto& log = parsed.log;
    if (log.empty()) throw PreconditionError("no events");
    auto quantity = parse_quantity(args.quantity);
    if (!quantity) throw InvalidArgument("unknown quantity '" + args.quantity + "'");
    auto metrics = unit_metrics(log);
    auto t = template_day(log, metrics, args.step, *quantity, parse_comparison(args.comparison), args.schedule,
                          args.options);
    if (!args.raw) {
      Rescaler r(log, metrics, args.options.bin_minutes);
      t.ma_mean = r.apply(t.ma_mean, *quantity, args.step);
      t.lower = r.apply(t.lower, *quantity, args.step);
      t.upper = r.apply(t.upper, *quantity, args.step);
    }
    write_to(args.out, [&](std::ostream& os) { write_template_csv(os, t); });
    return 0;
  }

  int cmd_simulate(const SimulateArgs& args) {
    GeneratorConfig config = preset_paperlike();
    if (!args.config.empty()) {
      std::ifstream f(args.config);
      if (!f) throw IngestError("cannot open '" + args.config + "'");
      Json j;
      try {
        j = Json::parse(f);
      } catch (const Json::exception& e) {
        throw InvalidArgument("generator config '" + args.config + "': " + e.what());
      }
      config = generator_config_from_json(j);
    }
    if (args.seed) config.seed = *args.seed;
    if (args.days) config.days = *args.days;
    if (args.units_per_day) config.units_per_day = *args.units_per_day;
    auto log = generate_log(config);
    write_to(args.out, [&](std::ostream& os) { write_event_log(os, log); });
    return 0;
  }

  std::istream& in_;
  std::ostream& out_;
  std::ostream& err_;
};

inline int run(int argc, const char* const* argv, std::istream& in = std::cin, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  return Runner(in, out, err).run(argc, argv);
}

}  // namespace mesviz::cli
