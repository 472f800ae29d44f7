#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "mesviz/errors.hpp"
#include "mesviz/event_log.hpp"
#include "mesviz/timeseries.hpp"

namespace mesviz {

// Log-normal law parameterized by its median (minutes) and log-scale sigma.
struct LogNormalLaw {
  double median_minutes = 1;
  double sigma = 1;

  double mean_minutes() const { return median_minutes * std::exp(sigma * sigma / 2); }
};

struct StepParams {
  double scrap_prob = 0;
  double delay_prob = 0;
  LogNormalLaw idle{1, 1};         // gap before this step starts
  LogNormalLaw duration{5, 0.5};   // nominal visit length
  LogNormalLaw delay_extra{30, 1};  // added to the visit when delayed
};

struct GeneratorConfig {
  std::size_t units_per_day = 800;
  Date start_date = Date{std::chrono::year{2020} / 1 / 6};
  int days = 63;
  std::vector<StepParams> steps = std::vector<StepParams>(7);
  // Share of delays that also revisit the following step mid-visit.
  double excursion_prob = 0.5;
  // Idle draws above this are redrawn; the widest laws would otherwise emit gaps of months.
  double max_idle_minutes = 720;
  std::array<double, 7> weekday_volume{1, 1, 1, 1, 1, 1, 1};  // Sunday first
  std::vector<double> intensity = std::vector<double>(48, 1.0);  // release weights per time-of-day slot
  ShiftSchedule schedule;
  std::uint64_t seed = 1;

  void validate() const {
    if (days < 0) throw InvalidArgument("days must be >= 0");
    if (steps.empty()) throw InvalidArgument("at least one step is required");
    auto prob = [](double p) { return p >= 0 && p <= 1; };
    for (std::size_t i = 0; i < steps.size(); ++i) {
      const auto& s = steps[i];
      std::string where = "step " + std::to_string(i + 1);
      if (!prob(s.scrap_prob) || !prob(s.delay_prob)) throw InvalidArgument(where + ": probabilities must lie in [0,1]");
      for (const auto* law : {&s.idle, &s.duration, &s.delay_extra}) {
        if (!(law->median_minutes > 0) || !(law->sigma >= 0)) throw InvalidArgument(where + ": invalid log-normal law");
      }
    }
    if (!prob(excursion_prob)) throw InvalidArgument("excursion_prob must lie in [0,1]");
    if (!(max_idle_minutes >= 1)) throw InvalidArgument("max_idle_minutes must be >= 1");
    for (double w : weekday_volume) {
      if (!(w >= 0)) throw InvalidArgument("weekday volumes must be >= 0");
    }
    if (intensity.empty() || kMinutesPerDay % static_cast<int>(intensity.size()) != 0)
      throw InvalidArgument("intensity profile length must divide the day into equal slots");
    double total = 0;
    for (double w : intensity) {
      if (!(w >= 0)) throw InvalidArgument("intensity weights must be >= 0");
      total += w;
    }
    if (!(total > 0)) throw InvalidArgument("intensity weights are all zero");
  }
};

// Each unit walks steps 1..n: Start, optional Delay (sometimes with a revisit
// of the next step), then Complete or a terminating Scrap, separated by
// sampled idle gaps. Event times per unit strictly increase.
inline EventLog generate_log(const GeneratorConfig& config) {
  config.validate();
  std::mt19937_64 rng(config.seed);
  std::discrete_distribution<int> slot_dist(config.intensity.begin(), config.intensity.end());
  const int slot_seconds = kMinutesPerDay * 60 / static_cast<int>(config.intensity.size());
  std::uniform_int_distribution<int> within_slot(0, slot_seconds - 1);
  std::uniform_real_distribution<double> unit01(0.0, 1.0);
  const int nsteps = static_cast<int>(config.steps.size());

  auto draw = [&](const LogNormalLaw& law) {
    std::lognormal_distribution<double> d(std::log(law.median_minutes), law.sigma);
    return std::max<std::int64_t>(1, std::llround(d(rng) * 60.0));
  };
  const auto max_idle = static_cast<std::int64_t>(config.max_idle_minutes * 60);
  auto draw_idle = [&](const LogNormalLaw& law) {
    std::int64_t v = draw(law);
    while (v > max_idle) v = draw(law);
    return v;
  };
  auto bernoulli = [&](double p) { return p > 0 && unit01(rng) < p; };

  std::vector<ProcessEvent> events;
  std::size_t serial = 0;
  for (int day = 0; day < config.days; ++day) {
    Date date = config.start_date + std::chrono::days{day};
    double volume = config.weekday_volume[weekday_of(date).c_encoding()];
    auto units = static_cast<std::size_t>(std::llround(static_cast<double>(config.units_per_day) * volume));
    const std::int64_t day_start = std::chrono::duration_cast<std::chrono::seconds>(date.time_since_epoch()).count();
    for (std::size_t u = 0; u < units; ++u) {
      char id[24];
      std::snprintf(id, sizeof id, "U%07zu", ++serial);
      std::int64_t last = day_start + slot_dist(rng) * slot_seconds + within_slot(rng) - 1;
      auto emit = [&](std::int64_t at, int step, Action a) {
        at = std::max(at, last + 1);
        last = at;
        Timestamp ts{std::chrono::seconds{at}};
        events.push_back({ts, LocalTime{ts.time_since_epoch()}, id, step, a});
        return at;
      };
      for (int s = 1; s <= nsteps; ++s) {
        const auto& p = config.steps[static_cast<std::size_t>(s - 1)];
        std::int64_t start = last + 1;
        if (s > 1) start = last + draw_idle(p.idle);
        start = emit(start, s, Action::Start);
        std::int64_t visit = draw(p.duration);
        if (bernoulli(p.delay_prob)) {
          std::int64_t extra = draw(p.delay_extra);
          std::int64_t marker = emit(start + visit / 2, s, Action::Delay);
          if (s < nsteps && bernoulli(config.excursion_prob)) {
            std::int64_t rs = emit(marker + extra / 4, s + 1, Action::Start);
            emit(rs + extra / 2, s + 1, Action::Complete);
          }
          visit += extra;
        }
        bool scrapped = bernoulli(p.scrap_prob);
        emit(start + visit, s, scrapped ? Action::Scrap : Action::Complete);
        if (scrapped) break;
      }
    }
  }
  return EventLog(std::move(events), "synthetic:seed=" + std::to_string(config.seed));
}

// Per-step probabilities p_s such that the expected share of all events of
// one kind landing at step s equals share[s], given a total rate per unit.
// Terminating events (scraps) shrink the population reaching later steps;
// `survival` carries the probability of reaching each step.
inline std::vector<double> probabilities_for_shares(const std::vector<double>& share, double rate_per_unit,
                                                    const std::vector<double>& survival) {
  std::vector<double> p(share.size());
  for (std::size_t s = 0; s < share.size(); ++s) {
    p[s] = survival[s] > 0 ? std::min(1.0, rate_per_unit * share[s] / survival[s]) : 0.0;
  }
  return p;
}

// Shift-shaped release profile: a surge in the first hour after each shift
// starts (strongest at the start of the first shift), dips at break times.
inline std::vector<double> shift_intensity_profile(const ShiftSchedule& schedule, int slot_minutes = kDefaultBinMinutes) {
  const int nslots = bins_per_day(slot_minutes);
  std::vector<double> w(static_cast<std::size_t>(nslots), 1.0);
  for (int i = 0; i < nslots; ++i) {
    int minute = i * slot_minutes;
    const Shift& sh = schedule.shift_at(minute);
    int offset = ((minute - sh.start) % kMinutesPerDay + kMinutesPerDay) % kMinutesPerDay;
    double& x = w[static_cast<std::size_t>(i)];
    if (offset < 60) x = (&sh == &schedule.shifts().front()) ? 1.7 : 1.45;
    else if (offset >= 120 && offset < 150) x = 0.7;
    else if (offset >= 240 && offset < 300) x = 0.55;
    else if (offset >= 390 && offset < 420) x = 0.8;
  }
  return w;
}

// Shipped configuration reproducing the published qualitative shape: scraps
// concentrated at steps 2 and 4, delays at steps 6 and 7, heavy-tailed idle
// times (median far below the mean), and a shift-cyclic workload.
inline GeneratorConfig preset_paperlike() {
  GeneratorConfig c;
  c.units_per_day = 800;
  c.days = 63;
  c.seed = 20200304;
  c.weekday_volume = {0.5, 1, 1, 1, 1, 1, 0.7};
  c.intensity = shift_intensity_profile(c.schedule);
  c.excursion_prob = 0.5;

  const std::vector<double> scrap_share{0.03, 0.41, 0.04, 0.45, 0.03, 0.02, 0.02};
  const std::vector<double> delay_share{0.06, 0.05, 0.04, 0.04, 0.03, 0.36, 0.42};
  const double scrap_rate = 0.12;  // scraps per released unit
  const double delay_rate = 0.15;  // delays per released unit

  std::vector<double> survival(7);
  double alive = 1.0;
  for (std::size_t s = 0; s < 7; ++s) {
    survival[s] = alive;
    alive -= scrap_rate * scrap_share[s];
  }
  auto scrap_p = probabilities_for_shares(scrap_share, scrap_rate, survival);
  auto delay_p = probabilities_for_shares(delay_share, delay_rate, survival);

  // {median, sigma} in minutes. Step 1 has no preceding gap, so its idle law is unused.
  const LogNormalLaw idle[7] = {{1, 1}, {2, 2.6}, {1.5, 2.9}, {3, 2.0}, {6, 1.65}, {4, 1.9}, {8, 1.7}};
  const LogNormalLaw duration[7] = {{4, 1.0}, {45, 0.9}, {6, 0.6}, {15, 0.9}, {3, 0.5}, {3, 0.6}, {3, 0.6}};
  const LogNormalLaw delay_extra[7] = {{180, 1.0}, {60, 1.0}, {20, 1.0}, {30, 1.0}, {10, 1.0}, {10, 1.0}, {10, 1.0}};
  for (std::size_t s = 0; s < 7; ++s) {
    c.steps[s] = StepParams{scrap_p[s], delay_p[s], idle[s], duration[s], delay_extra[s]};
  }
  return c;
}

}  // namespace mesviz
