#include <gtest/gtest.h>

#include <random>

#include "test_util.hpp"

namespace mesviz {
namespace {

using testing::ev;
using testing::make_log;

const Date kFixtureDay = parse_date("2020-03-04");

// Mean of the present values among positions i-half..i+half, written without
// reference to the implementation's loop structure.
Curve brute_force_ma(const Curve& in, int order) {
  Curve out(in.size());
  const long half = order / 2;
  for (long i = 0; i < static_cast<long>(in.size()); ++i) {
    std::vector<double> present;
    for (long k = -half; k <= half; ++k) {
      long j = i + k;
      if (j < 0 || j >= static_cast<long>(in.size())) continue;
      if (in[static_cast<std::size_t>(j)]) present.push_back(*in[static_cast<std::size_t>(j)]);
    }
    if (present.empty()) continue;
    double s = 0;
    for (double v : present) s += v;
    out[static_cast<std::size_t>(i)] = s / static_cast<double>(present.size());
  }
  return out;
}

TEST(BinSeries, NoEventsGivesZeroCounts) {
  auto log = testing::load_fixture("fixture20.csv");
  auto s = bin_series(log, parse_date("2020-03-05"), 1, Quantity::StartCount);
  ASSERT_EQ(s.bins.size(), 48u);
  for (const auto& b : s.bins) EXPECT_EQ(b, 0.0);
  auto m = bin_series(log, parse_date("2020-03-05"), 1, Quantity::MeanIdle);
  for (const auto& b : m.bins) EXPECT_FALSE(b.has_value());
}

TEST(BinSeries, DirectCounting) {
  auto log = make_log({ev("2020-03-04T00:05:00", "A", 1, Action::Start), ev("2020-03-04T00:10:00", "B", 1, Action::Start),
                       ev("2020-03-04T00:40:00", "C", 1, Action::Start)});
  auto s = bin_series(log, kFixtureDay, 1, Quantity::StartCount);
  EXPECT_EQ(s.bins[0], 2.0);
  EXPECT_EQ(s.bins[1], 1.0);
  for (std::size_t i = 2; i < 48; ++i) EXPECT_EQ(s.bins[i], 0.0);
}

// Hand-binned over fixture20.csv (30-minute bins, UTC site).
TEST(BinSeries, FixtureMeansMatchHandBinning) {
  auto log = testing::load_fixture("fixture20.csv");
  auto idle2 = bin_series(log, kFixtureDay, 2, Quantity::MeanIdle);
  for (std::size_t i = 0; i < 48; ++i) {
    if (i == 16) EXPECT_EQ(idle2.bins[i], 15.0);  // U001 starts step 2 at 08:25
    else if (i == 18) EXPECT_EQ(idle2.bins[i], 45.0);  // U002 starts step 2 at 09:15
    else EXPECT_FALSE(idle2.bins[i].has_value()) << i;
  }
  auto idle4 = bin_series(log, kFixtureDay, 4, Quantity::MeanIdle);
  EXPECT_EQ(idle4.bins[18], 0.0);   // U003 09:05
  EXPECT_EQ(idle4.bins[20], 20.0);  // U001 10:20 after completing step 3
  EXPECT_FALSE(idle4.bins[19].has_value());  // the 09:30 excursion Start ends no idle period
  auto dur1 = bin_series(log, kFixtureDay, 1, Quantity::MeanDuration);
  EXPECT_EQ(dur1.bins[16], 17.5);  // (10 + 25) / 2
  auto starts4 = bin_series(log, kFixtureDay, 4, Quantity::StartCount);
  EXPECT_EQ(starts4.bins[18], 1.0);
  EXPECT_EQ(starts4.bins[19], 1.0);
  EXPECT_EQ(starts4.bins[20], 1.0);
}

TEST(BinSeries, CountsAreConserved) {
  auto log = generate_log(testing::small_config(3, 300, 5));
  for (Date d : log.dates()) {
    for (int step = 1; step <= 7; ++step) {
      auto s = bin_series(log, d, step, Quantity::StartCount);
      double total = 0;
      for (const auto& b : s.bins) total += *b;
      auto expected = std::count_if(log.begin(), log.end(), [&](const ProcessEvent& e) {
        return e.step == step && e.action == Action::Start && date_of(e.local) == d;
      });
      EXPECT_EQ(total, static_cast<double>(expected));
    }
  }
}

TEST(BinSeries, BinWidthMustDivideDay) {
  EXPECT_THROW(bins_per_day(7), InvalidArgument);
  EXPECT_THROW(bins_per_day(0), InvalidArgument);
  EXPECT_EQ(bins_per_day(15), 96);
}

TEST(MovingAverage, ConstantIsPreserved) {
  Curve c(48, 5.0);
  EXPECT_EQ(moving_average(c), c);
}

TEST(MovingAverage, EdgeTruncation) {
  Curve c{1.0, 2.0, 3.0, 4.0};
  Curve expected{1.5, 2.0, 3.0, 3.5};
  EXPECT_EQ(moving_average(c), expected);
  EXPECT_EQ(brute_force_ma(c, 3), expected);
}

TEST(MovingAverage, LeadingValuesInFullDay) {
  Curve c(48);
  c[0] = 1.0;
  c[1] = 2.0;
  c[2] = 3.0;
  c[3] = 4.0;
  auto out = moving_average(c);
  EXPECT_EQ(out[0], 1.5);
  EXPECT_EQ(out[1], 2.0);
  EXPECT_EQ(out[2], 3.0);
  EXPECT_EQ(out[3], 3.5);  // window {3, 4, absent}
  EXPECT_EQ(out[4], 4.0);  // window {4, absent, absent}
  for (std::size_t i = 5; i < 48; ++i) EXPECT_FALSE(out[i].has_value());
}

TEST(MovingAverage, AllAbsent) {
  Curve c(48);
  for (const auto& v : moving_average(c)) EXPECT_FALSE(v.has_value());
}

TEST(MovingAverage, OrderMustBeOddAndPositive) {
  Curve c(48, 1.0);
  EXPECT_THROW(moving_average(c, 2), InvalidArgument);
  EXPECT_THROW(moving_average(c, 0), InvalidArgument);
  EXPECT_EQ(moving_average(c, 1), c);
}

TEST(MovingAverage, MatchesBruteForceForSeveralOrders) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> val(-10, 10);
  std::bernoulli_distribution present(0.7);
  for (int order : {1, 3, 5, 7}) {
    for (int trial = 0; trial < 50; ++trial) {
      Curve c(48);
      for (auto& v : c) {
        if (present(rng)) v = val(rng);
      }
      EXPECT_EQ(moving_average(c, order), brute_force_ma(c, order));
    }
  }
}

TEST(MovingAverage, LinearAndBounded) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> val(0, 100);
  for (int trial = 0; trial < 50; ++trial) {
    Curve x(48), y(48), z(48);
    double a = val(rng) / 10, b = val(rng) / 10;
    for (std::size_t i = 0; i < 48; ++i) {
      x[i] = val(rng);
      y[i] = val(rng);
      z[i] = a * *x[i] + b * *y[i];
    }
    auto mx = moving_average(x), my = moving_average(y), mz = moving_average(z);
    for (std::size_t i = 0; i < 48; ++i) {
      EXPECT_NEAR(*mz[i], a * *mx[i] + b * *my[i], 1e-9);
      std::size_t lo = i == 0 ? 0 : i - 1, hi = std::min<std::size_t>(47, i + 1);
      double mn = *x[lo], mxv = *x[lo];
      for (std::size_t j = lo; j <= hi; ++j) {
        mn = std::min(mn, *x[j]);
        mxv = std::max(mxv, *x[j]);
      }
      EXPECT_GE(*mx[i], mn);
      EXPECT_LE(*mx[i], mxv);
    }
  }
}

TEST(ShiftOf, DefaultSchedule) {
  ShiftSchedule s;
  EXPECT_EQ(shift_of(15, s), "Shift 1");
  EXPECT_EQ(shift_of(23 * 60 + 30, s), "Shift 1");
  EXPECT_EQ(shift_of(7 * 60 + 29, s), "Shift 1");
  EXPECT_EQ(shift_of(7 * 60 + 30, s), "Shift 2");
  EXPECT_EQ(shift_of(15 * 60 + 30, s), "Shift 3");
  EXPECT_EQ(shift_of(23 * 60 + 29, s), "Shift 3");
}

TEST(ShiftOf, SingleShiftCoversDay) {
  ShiftSchedule s({{"Day", 0, 0}});
  for (int m = 0; m < kMinutesPerDay; m += 17) EXPECT_EQ(shift_of(m, s), "Day");
}

TEST(ShiftSchedule, RejectsGapsOverlapsAndMisalignment) {
  EXPECT_THROW(ShiftSchedule({{"A", 0, 600}, {"B", 700, 0}}), InvalidArgument);
  EXPECT_THROW(ShiftSchedule({{"A", 0, 600}, {"B", 600, 0}, {"C", 0, 600}}), InvalidArgument);
  EXPECT_THROW(ShiftSchedule(std::vector<Shift>{}), InvalidArgument);
  ShiftSchedule odd({{"A", 10, 610}, {"B", 610, 10}});
  EXPECT_THROW(odd.require_aligned(30), InvalidArgument);
  EXPECT_NO_THROW(ShiftSchedule().require_aligned(30));
}

TEST(ShiftSchedule, TextFormRoundTrips) {
  auto s = parse_shift_schedule("Night=22:00-06:00; Day=06:00-14:00; Late=14:00-22:00");
  ASSERT_EQ(s.shifts().size(), 3u);
  EXPECT_EQ(s.shifts()[0].id, "Night");
  EXPECT_EQ(s.shifts()[0].start, 22 * 60);
  EXPECT_EQ(shift_schedule_from_json(to_json(s)), s);
}

TEST(TemplateDay, SingleDateEqualsItsOwnMovingAverage) {
  auto log = testing::load_fixture("fixture20.csv");
  auto metrics = unit_metrics(log);
  for (Quantity q : kAllQuantities) {
    for (int step = 1; step <= 5; ++step) {
      auto t = template_day(log, metrics, step, q, Comparison::all_days(), ShiftSchedule{});
      auto ma = moving_average(bin_series(log, metrics, kFixtureDay, step, q).bins);
      EXPECT_EQ(t.ma_mean, ma);
      ASSERT_EQ(t.dates.size(), 1u);
      for (std::size_t i = 0; i < 48; ++i) {
        if (!t.ma_mean[i]) continue;
        EXPECT_LE(*t.lower[i], *t.ma_mean[i]);
        EXPECT_GE(*t.upper[i], *t.ma_mean[i]);
      }
    }
  }
}

TEST(TemplateDay, IdenticalDatesGiveCollapsedBounds) {
  std::vector<ProcessEvent> events;
  for (const char* day : {"2020-03-04", "2020-03-05"}) {
    for (int k = 0; k < 3; ++k) {
      events.push_back(ev(std::string(day) + "T10:0" + std::to_string(k) + ":00", std::string(day) + std::to_string(k), 1,
                          Action::Start));
    }
  }
  auto t = template_day(make_log(events), 1, Quantity::StartCount, Comparison::all_days(), ShiftSchedule{});
  ASSERT_EQ(t.dates.size(), 2u);
  // Bin 20 holds 3 starts per day; its window pools {0, 3, 0} from both days.
  EXPECT_EQ(t.support[20], 6u);
  EXPECT_EQ(*t.ma_mean[20], 1.0);
  // Far from any activity every pooled value is 0.
  EXPECT_EQ(*t.lower[5], 0.0);
  EXPECT_EQ(*t.upper[5], 0.0);
  EXPECT_EQ(*t.ma_mean[5], 0.0);
}

TEST(TemplateDay, SupportEqualsPooledObservationCount) {
  auto log = generate_log(testing::small_config(5, 150, 21));
  auto metrics = unit_metrics(log);
  for (Quantity q : {Quantity::StartCount, Quantity::MeanIdle, Quantity::MeanDuration}) {
    auto curves = bin_all_dates(log, metrics, 3, q);
    auto t = template_day(log, metrics, 3, q, Comparison::all_days(), ShiftSchedule{});
    for (std::size_t i = 0; i < 48; ++i) {
      std::size_t n = 0;
      for (const auto& [d, c] : curves) {
        for (std::size_t j = i == 0 ? 0 : i - 1; j <= std::min<std::size_t>(47, i + 1); ++j) n += c[j].has_value();
      }
      EXPECT_EQ(t.support[i], n);
      EXPECT_EQ(t.ma_mean[i].has_value(), n > 0);
      if (t.lower[i]) { EXPECT_LE(*t.lower[i], *t.upper[i]); }
    }
  }
}

TEST(TemplateDay, SameWeekdayEqualsFilteredAllDays) {
  auto log = generate_log(testing::small_config(15, 120, 31));
  auto wed = std::chrono::Wednesday;
  LogFilter f;
  f.weekdays = weekdays_of({wed});
  auto filtered = filter_log(log, f);
  for (Quantity q : {Quantity::StartCount, Quantity::CompleteCount, Quantity::ScrapCount}) {
    auto a = template_day(log, 2, q, Comparison::same_weekday(wed), ShiftSchedule{});
    auto b = template_day(filtered, 2, q, Comparison::all_days(), ShiftSchedule{});
    EXPECT_EQ(a.dates, b.dates);
    EXPECT_EQ(a.ma_mean, b.ma_mean);
    EXPECT_EQ(a.lower, b.lower);
    EXPECT_EQ(a.upper, b.upper);
    EXPECT_EQ(a.support, b.support);
  }
}

TEST(TemplateDay, NoMatchingDatesIsError) {
  auto log = testing::load_fixture("fixture20.csv");  // a Wednesday only
  EXPECT_THROW(template_day(log, 1, Quantity::StartCount, Comparison::same_weekday(std::chrono::Monday), ShiftSchedule{}),
               PreconditionError);
  EXPECT_THROW(template_day(EventLog{}, 1, Quantity::StartCount, Comparison::all_days(), ShiftSchedule{}),
               PreconditionError);
}

TEST(TemplateDay, ExcludedDateIsNotPooled) {
  auto log = generate_log(testing::small_config(3, 50, 2));
  auto metrics = unit_metrics(log);
  auto dates = log.dates();
  auto t = template_day(log, metrics, 1, Quantity::StartCount, Comparison::all_days(), ShiftSchedule{}, {}, dates[1]);
  dates.erase(dates.begin() + 1);
  EXPECT_EQ(t.dates, dates);
}

TEST(TemplateDay, ShiftLabelsFollowSchedule) {
  auto log = testing::load_fixture("fixture20.csv");
  auto t = template_day(log, 1, Quantity::StartCount, Comparison::all_days(), ShiftSchedule{});
  EXPECT_EQ(t.shift[0], "Shift 1");
  EXPECT_EQ(t.shift[15], "Shift 2");
  EXPECT_EQ(t.shift[31], "Shift 3");
  EXPECT_EQ(t.shift[47], "Shift 1");
}

TEST(TemplateCsv, HeaderAndEmptyFields) {
  auto log = testing::load_fixture("fixture20.csv");
  auto t = template_day(log, 2, Quantity::MeanIdle, Comparison::all_days(), ShiftSchedule{});
  std::ostringstream os;
  write_template_csv(os, t);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line, "bin_start,ma_mean,lower,upper,support");
  std::getline(is, line);
  EXPECT_EQ(line, "00:00,,,,0");
  std::vector<std::string> lines;
  while (std::getline(is, line)) lines.push_back(line);
  ASSERT_EQ(lines.size(), 47u);
  EXPECT_EQ(lines[16 - 1], "08:00,15,15,15,1");  // window {bin 15, 16, 17} holds only 15
  EXPECT_EQ(lines[17 - 1], "08:30,30,15.75,44.25,2");
}

}  // namespace
}  // namespace mesviz
