#include <gtest/gtest.h>

#include <random>

#include "test_util.hpp"

namespace mesviz {
namespace {

using testing::ev;
using testing::make_log;

TEST(ParseEventLog, HeaderOnlyGivesEmptyLog) {
  auto r = parse_event_log("timestamp,unit_id,step,action\n");
  EXPECT_TRUE(r.log.empty());
  EXPECT_TRUE(r.report.empty());
}

TEST(ParseEventLog, SingleRow) {
  auto r = parse_event_log("timestamp,unit_id,step,action\n2020-03-04T10:00:00,U001,3,start\n");
  ASSERT_EQ(r.log.size(), 1u);
  EXPECT_TRUE(r.report.empty());
  const auto& e = r.log[0];
  EXPECT_EQ(e.action, Action::Start);
  EXPECT_EQ(e.step, 3);
  EXPECT_EQ(e.unit_id, "U001");
  EXPECT_EQ(format_timestamp(e.timestamp), "2020-03-04T10:00:00");
}

TEST(ParseEventLog, UnknownActionsAreRejectedAndReported) {
  auto r = read_event_log_file(testing::data_path("bad_actions10.csv"));
  EXPECT_EQ(r.log.size(), 8u);
  ASSERT_EQ(r.report.record_errors.size(), 2u);
  EXPECT_EQ(r.report.record_errors[0].line, 4u);
  EXPECT_EQ(r.report.record_errors[1].line, 8u);
  EXPECT_EQ(r.report.count(AnomalyKind::UnknownAction), 2u);
}

TEST(ParseEventLog, ActionsAreCaseInsensitive) {
  auto r = parse_event_log("timestamp,unit_id,step,action\n2020-03-04T10:00:00,U1,1,START\n"
                           "2020-03-04T10:01:00,U1,1,Complete\n2020-03-04T10:02:00,U1,2,sCrAp\n"
                           "2020-03-04T10:03:00,U1,2,delay\n");
  ASSERT_EQ(r.log.size(), 4u);
  EXPECT_EQ(r.log[2].action, Action::Scrap);
}

TEST(ParseEventLog, CrlfAndByteOrderMark) {
  auto r = parse_event_log("\xEF\xBB\xBFtimestamp,unit_id,step,action\r\n2020-03-04T10:00:00,U1,1,start\r\n");
  ASSERT_EQ(r.log.size(), 1u);
  EXPECT_EQ(r.log[0].action, Action::Start);
}

TEST(ParseEventLog, MissingOrWrongHeaderIsFormatError) {
  EXPECT_THROW(parse_event_log(""), FormatError);
  EXPECT_THROW(parse_event_log("2020-03-04T10:00:00,U1,1,start\n"), FormatError);
  EXPECT_THROW(parse_event_log("time,unit,step,action\n"), FormatError);
}

TEST(ParseEventLog, UnreadableSourceIsIngestError) {
  EXPECT_THROW(read_event_log_file("/nonexistent/dir/log.csv"), IngestError);
}

TEST(ParseEventLog, MalformedRowsAreSkipped) {
  auto r = parse_event_log(
      "timestamp,unit_id,step,action\n"
      "2020-03-04T10:00:00,U1,1,start\n"      // 2 ok
      "2020-03-04T10:00:00,U1,1\n"            // 3 too few fields
      "2020-03-04T10:00:00,U1,1,start,x\n"    // 4 too many fields
      "2020-13-04T10:00:00,U1,1,start\n"      // 5 bad month
      "2020-03-04T10:00:00,,1,start\n"        // 6 empty unit
      "2020-03-04T10:00:00,U1,x,start\n"      // 7 bad step
      "2020-03-04T10:00:00,U1,9,start\n"      // 8 unknown step
      "\n"                                    // 9 empty
      "2020-03-04 10:05:00Z,U1,1,complete\n"  // 10 ok
  );
  EXPECT_EQ(r.log.size(), 2u);
  ASSERT_EQ(r.report.record_errors.size(), 7u);
  std::vector<std::size_t> lines;
  for (const auto& e : r.report.record_errors) lines.push_back(e.line);
  EXPECT_EQ(lines, (std::vector<std::size_t>{3, 4, 5, 6, 7, 8, 9}));
  EXPECT_EQ(r.report.count(AnomalyKind::UnknownStep), 1u);
}

TEST(ParseEventLog, MaxStepIsConfigurable) {
  ParseOptions opts;
  opts.max_step = 9;
  auto r = parse_event_log("timestamp,unit_id,step,action\n2020-03-04T10:00:00,U1,9,start\n", opts);
  EXPECT_EQ(r.log.size(), 1u);
}

TEST(ParseEventLog, OffsetsNormalizeToUtc) {
  auto r = parse_event_log("timestamp,unit_id,step,action\n2020-03-04T11:30:00+01:30,U1,1,start\n"
                           "2020-03-04T10:00:00.750Z,U2,1,start\n");
  ASSERT_EQ(r.log.size(), 2u);
  EXPECT_EQ(r.log[0].timestamp, r.log[1].timestamp);
  EXPECT_EQ(r.log[0].unit_id, "U1");  // equal instants fall back to unit order
}

TEST(ParseEventLog, SiteTimezoneDrivesLocalTime) {
  ParseOptions opts;
  opts.timezone = SiteTimeZone("GMT0IST,M3.5.0/1,M10.5.0");
  // Tuesday 2020-07-07 23:30 UTC is Wednesday 00:30 in summer time.
  auto r = parse_event_log("timestamp,unit_id,step,action\n2020-07-07T23:30:00,U1,1,start\n"
                           "2020-01-07T23:30:00,U2,1,start\n",
                           opts);
  ASSERT_EQ(r.log.size(), 2u);
  const auto& winter = r.log[0];
  const auto& summer = r.log[1];
  EXPECT_EQ(format_date(date_of(summer.local)), "2020-07-08");
  EXPECT_EQ(minute_of_day(summer.local), 30);
  EXPECT_EQ(format_date(date_of(winter.local)), "2020-01-07");
  EXPECT_EQ(minute_of_day(winter.local), 23 * 60 + 30);
}

TEST(ParseEventLog, InvalidTimezoneIsRejected) { EXPECT_THROW(SiteTimeZone("not a zone!!"), InvalidArgument); }

TEST(EventLog, NormalizedOrderIsTimestampUnitThenInput) {
  auto log = make_log({ev("2020-03-04T10:00:00", "B", 1, Action::Complete), ev("2020-03-04T09:00:00", "B", 1, Action::Start),
                       ev("2020-03-04T10:00:00", "A", 2, Action::Start), ev("2020-03-04T10:00:00", "B", 2, Action::Start)});
  ASSERT_EQ(log.size(), 4u);
  EXPECT_EQ(log[0].timestamp, testing::ts("2020-03-04T09:00:00"));
  EXPECT_EQ(log[1].unit_id, "A");
  EXPECT_EQ(log[2].action, Action::Complete);
  EXPECT_EQ(log[3].step, 2);
}

// Random mix of well-formed and malformed rows.
std::string random_log_text(std::mt19937_64& rng, std::size_t rows, std::size_t* expected_good) {
  static const char* actions[] = {"start", "complete", "scrap", "delay", "Start", "begin", "DELAY"};
  std::uniform_int_distribution<int> pick(0, 9);
  std::uniform_int_distribution<int> minute(0, 59);
  std::uniform_int_distribution<int> step(0, 8);
  std::uniform_int_distribution<int> act(0, 6);
  std::ostringstream os;
  os << kLogHeader << '\n';
  *expected_good = 0;
  for (std::size_t i = 0; i < rows; ++i) {
    int kind = pick(rng);
    int s = step(rng);
    int a = act(rng);
    char buf[96];
    std::snprintf(buf, sizeof buf, "2020-03-%02dT%02d:%02d:00,U%d,%d,%s", 1 + pick(rng), pick(rng) + 10, minute(rng),
                  pick(rng), s, actions[a]);
    if (kind == 0) {
      os << "garbage line\n";
    } else if (kind == 1) {
      os << "2020-03-04T99:00:00,U1,1,start\n";
    } else {
      os << buf << '\n';
      if (s >= 1 && s <= 7 && a != 5) ++*expected_good;
    }
  }
  return os.str();
}

TEST(ParseEventLog, AcceptedPlusRejectedEqualsDataLines) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    std::size_t good = 0;
    std::size_t rows = 1 + trial * 3;
    auto text = random_log_text(rng, rows, &good);
    auto r = parse_event_log(text);
    EXPECT_EQ(r.log.size(), good);
    EXPECT_EQ(r.log.size() + r.report.record_errors.size(), rows);
  }
}

TEST(ParseEventLog, WriteThenReparseRoundTrips) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    std::size_t good = 0;
    auto first = parse_event_log(random_log_text(rng, 40, &good)).log;
    auto text = testing::serialize(first);
    auto second = parse_event_log(text).log;
    ASSERT_EQ(first.size(), second.size());
    EXPECT_TRUE(std::equal(first.begin(), first.end(), second.begin()));
    EXPECT_EQ(testing::serialize(second), text);
  }
}

TEST(ValidateLog, ExactDuplicateIsFlaggedOnce) {
  auto log = make_log({ev("2020-03-04T10:00:00", "U1", 1, Action::Start), ev("2020-03-04T10:00:00", "U1", 1, Action::Start),
                       ev("2020-03-04T10:05:00", "U1", 1, Action::Complete)});
  auto r = validate_log(log);
  EXPECT_EQ(r.count(AnomalyKind::DuplicateEvent), 1u);
  EXPECT_EQ(r.anomalies.size(), 1u);
  EXPECT_EQ(log.size(), 3u);  // duplicates stay in the log
}

TEST(ValidateLog, CompleteWithoutStartIsOrderingAnomaly) {
  auto log = make_log({ev("2020-03-04T10:00:00", "U1", 1, Action::Start), ev("2020-03-04T10:05:00", "U1", 1, Action::Complete),
                       ev("2020-03-04T10:20:00", "U1", 2, Action::Complete)});
  auto r = validate_log(log);
  ASSERT_EQ(r.anomalies.size(), 1u);
  EXPECT_EQ(r.anomalies[0].kind, AnomalyKind::OutOfOrder);
  EXPECT_EQ(r.anomalies[0].step, 2);
  EXPECT_EQ(r.anomalies[0].event_index, 2u);
}

TEST(ValidateLog, ConsistentFixtureIsClean) {
  auto log = testing::load_fixture("fixture20.csv");
  ASSERT_EQ(log.size(), 20u);
  EXPECT_TRUE(validate_log(log).anomalies.empty());
}

TEST(FilterLog, IdentityFilterKeepsEverything) {
  auto log = testing::load_fixture("fixture20.csv");
  auto out = filter_log(log, {});
  ASSERT_EQ(out.size(), log.size());
  EXPECT_TRUE(std::equal(log.begin(), log.end(), out.begin()));
}

TEST(FilterLog, StepFilter) {
  auto log = testing::load_fixture("fixture20.csv");
  LogFilter f;
  f.steps = std::set<int>{3};
  auto out = filter_log(log, f);
  EXPECT_EQ(out.size(), 2u);
  for (const auto& e : out) EXPECT_EQ(e.step, 3);
}

// Zeller's congruence, 0 = Saturday.
int zeller(int y, int m, int d) {
  if (m < 3) {
    m += 12;
    y -= 1;
  }
  int k = y % 100, j = y / 100;
  return (d + 13 * (m + 1) / 5 + k + k / 4 + j / 4 + 5 * j) % 7;
}

TEST(FilterLog, WeekdayFilterMatchesCalendarOracle) {
  std::vector<ProcessEvent> events;
  for (int day = 1; day <= 31; ++day) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "2020-03-%02dT12:00:00", day);
    events.push_back(ev(buf, "U" + std::to_string(day), 1, Action::Start));
  }
  auto log = make_log(events);
  LogFilter f;
  f.weekdays = weekdays_of({std::chrono::Wednesday});
  auto out = filter_log(log, f);
  std::size_t expected = 0;
  for (int day = 1; day <= 31; ++day) expected += zeller(2020, 3, day) == 4 ? 1 : 0;  // 4 = Wednesday
  EXPECT_EQ(out.size(), expected);
  EXPECT_EQ(expected, 4u);
  for (const auto& e : out) {
    std::chrono::year_month_day ymd{date_of(e.local)};
    EXPECT_EQ(zeller(2020, 3, static_cast<int>(static_cast<unsigned>(ymd.day()))), 4);
  }
}

TEST(FilterLog, CompositionEqualsIntersection) {
  auto log = generate_log(testing::small_config(14, 40, 3));
  std::mt19937_64 rng(5);
  auto random_filter = [&] {
    LogFilter f;
    std::uniform_int_distribution<int> coin(0, 1), day(0, 13), step(1, 7), wd(0, 127);
    Date base = Date{std::chrono::year{2020} / 1 / 6};
    if (coin(rng)) f.from = base + std::chrono::days{day(rng)};
    if (coin(rng)) f.to = base + std::chrono::days{day(rng)};
    if (coin(rng)) f.steps = std::set<int>{step(rng), step(rng), step(rng)};
    if (coin(rng)) f.weekdays = WeekdaySet(static_cast<unsigned long>(wd(rng)));
    return f;
  };
  for (int i = 0; i < 30; ++i) {
    auto a = random_filter();
    auto b = random_filter();
    auto twice = filter_log(filter_log(log, a), b);
    auto once = filter_log(log, a.intersect(b));
    ASSERT_EQ(twice.size(), once.size());
    EXPECT_TRUE(std::equal(twice.begin(), twice.end(), once.begin()));
  }
}

}  // namespace
}  // namespace mesviz
