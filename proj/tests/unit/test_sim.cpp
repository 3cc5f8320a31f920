#include <doctest.h>

#include <cmath>
#include <numeric>
#include <sstream>

#include "imes/sim_harness.hpp"

using namespace imes;

namespace {

SimOptions perfect(double reserve = 0.0) {
  SimOptions o;
  o.forecast = ForecastBounds::perfect();
  o.planning_reserve = reserve;
  return o;
}

std::string clearing_csv(const SimRun& r) {
  std::ostringstream out;
  write_clearing_csv(r, out);
  return out.str();
}

}  // namespace

TEST_CASE("forecast errors are truncated with sigma a third of the bound") {
  for (double bound : {0.30, 0.08, 0.03}) {
    const int n = 20000;
    double sum = 0.0, sq = 0.0, worst = 0.0;
    for (int i = 0; i < n; ++i) {
      const double e = forecast_error(7, ForecastStage::DayAhead, 0, i % 24 + 1, i / 24, ForecastSeries::Res, bound);
      sum += e;
      sq += e * e;
      worst = std::max(worst, std::abs(e));
    }
    const double mean = sum / n;
    const double sd = std::sqrt(sq / n - mean * mean);
    CHECK(worst <= bound);
    CHECK(std::abs(mean) <= 0.05 * bound);
    CHECK(std::abs(sd - bound / 3.0) <= 0.1 * bound / 3.0);
  }
  CHECK(forecast_error(1, ForecastStage::IntraDay, 3, 5, 2, ForecastSeries::HeatLoad, 0.08) ==
        forecast_error(1, ForecastStage::IntraDay, 3, 5, 2, ForecastSeries::HeatLoad, 0.08));
  CHECK(forecast_error(1, ForecastStage::IntraDay, 3, 5, 2, ForecastSeries::HeatLoad, 0.08) !=
        forecast_error(1, ForecastStage::IntraDay, 4, 5, 2, ForecastSeries::HeatLoad, 0.08));
  CHECK(forecast_error(1, ForecastStage::RealTime, 3, 5, 2, ForecastSeries::Res, 0.0) == 0.0);
}

TEST_CASE("rolling forecast keeps the past and bounds each stage") {
  const auto truth = synth_profiles(LoadKind::Residential, 3, {1.0, 1.0, 0.4, 0.2});
  const ForecastBounds b;
  const int tc = 10;
  const auto f = rolling_forecast(truth, 5, tc, 1, b);
  for (int k = 0; k < 24; ++k) {
    const int t = k + 1;
    const double load_bound = t < tc ? 0.0 : (t == tc ? b.load[2] : b.load[1]);
    const double res_bound = t < tc ? 0.0 : (t == tc ? b.res[2] : b.res[1]);
    CHECK(std::abs(f.elec_load[k] - truth.elec_load[k]) <= load_bound * truth.elec_load[k] + 1e-12);
    CHECK(std::abs(f.heat_load[k] - truth.heat_load[k]) <= load_bound * truth.heat_load[k] + 1e-12);
    CHECK(std::abs(f.res_output[k] - truth.res_output[k]) <= res_bound * truth.res_output[k] + 1e-12);
  }
  const auto p = rolling_forecast(truth, 5, tc, 1, ForecastBounds::perfect());
  CHECK(p.elec_load == truth.elec_load);
  CHECK(p.res_output == truth.res_output);
}

TEST_CASE("perfect-foresight rolling NCA reproduces the day-ahead optimum") {
  const auto s = case_two();
  const auto run = run_day(s, Mode::NCA, Protocol::TwoStage, 1, perfect());
  const HorizonSpec h;
  double oracle = 0.0;
  for (const auto& m : s.mes) {
    const auto sol = solve_autonomous(m, initial_state(m), rtp_prices(s.grid, h), h);
    REQUIRE(sol.ok());
    oracle += sol.cost;
  }
  CHECK(run.total_cost == doctest::Approx(oracle).epsilon(1e-7));
}

TEST_CASE("committed schedules balance energy and carry storage state") {
  const auto s = case_two();
  const std::uint64_t seed = 3;
  const auto run = run_day(s, Mode::CA, Protocol::TwoStage, seed);
  REQUIRE(run.periods.size() == 24);
  for (std::size_t i = 0; i < s.mes.size(); ++i) {
    const auto& m = s.mes[i];
    const auto& d = run.schedules[i];
    for (int t = 1; t <= 24; ++t) {
      const int k = t - 1;
      const auto seen = rolling_forecast(m.profiles, seed, t, m.id);
      const double chp_e = m.chp ? d.gas_chp[k] * m.chp->eff_gas_to_elec : 0.0;
      const double chp_h = m.chp ? d.gas_chp[k] * m.chp->eff_gas_to_heat : 0.0;
      const double gf_h = m.furnace ? d.gas_furnace[k] * m.furnace->eff : 0.0;
      const double eb_h = m.boiler ? d.boiler_power[k] * m.boiler->eff : 0.0;
      const double elec = d.grid_exchange[k] + chp_e + seen.res_output[k] - d.res_curtail[k] + d.ees_discharge[k] -
                          d.ees_charge[k] - d.boiler_power[k] - d.shiftable_elec[k];
      const double heat = chp_h + gf_h + eb_h + d.tes_discharge[k] - d.tes_charge[k] - d.heat_curtail[k] -
                          d.shiftable_heat[k];
      CHECK(elec == doctest::Approx(seen.elec_load[k]).epsilon(1e-7));
      CHECK(heat == doctest::Approx(seen.heat_load[k]).epsilon(1e-7));
      CHECK(std::abs(d.grid_exchange[k]) <= m.line_import_max + 1e-9);
    }
    for (const auto* pr : {&m.ees, &m.tes}) {
      if (!*pr) continue;
      const bool ees = pr == &m.ees;
      const auto& p = **pr;
      const auto& ch = ees ? d.ees_charge : d.tes_charge;
      const auto& dch = ees ? d.ees_discharge : d.tes_discharge;
      const auto& e = ees ? d.ees_energy : d.tes_energy;
      double prev = p.initial_energy;
      for (int k = 0; k < 24; ++k) {
        prev = (1.0 - p.self_discharge_rate / 24.0) * prev + p.eff_charge * ch[k] - dch[k] / p.eff_discharge;
        CHECK(e[k] == doctest::Approx(prev).epsilon(1e-9));
        CHECK(e[k] >= p.energy_min - 1e-9);
        CHECK(e[k] <= p.energy_max + 1e-9);
      }
      CHECK(e[23] == doctest::Approx(p.target_energy).epsilon(1e-7));
      CHECK((ees ? run.final_states[i].ees_energy_now : run.final_states[i].tes_energy_now) == e[23]);
    }
    CHECK(run.final_states[i].shiftable_elec_served == doctest::Approx(m.shiftable_elec.total_energy));
    CHECK(run.final_states[i].shiftable_heat_served == doctest::Approx(m.shiftable_heat.total_energy));
  }
  for (const auto& p : run.periods) {
    double sum = std::accumulate(p.record.bids.begin(), p.record.bids.end(), 0.0);
    double committed = 0.0;
    for (const auto& d : run.schedules) committed += d.grid_exchange[p.record.period - 1];
    CHECK(sum == doctest::Approx(committed));
    const double res = rolling_forecast(Profiles{std::vector<double>(24, 0.0), std::vector<double>(24, 0.0),
                                                 s.grid.shared_res},
                                        seed, p.record.period, -1)
                           .res_output[p.record.period - 1];
    CHECK(p.transformer == doctest::Approx(committed - res));
  }
}

TEST_CASE("message accounting matches the log") {
  const auto s = case_two();
  SimOptions o;
  o.record_messages = true;
  for (Protocol proto : {Protocol::TwoStage, Protocol::SGRTC}) {
    const auto run = run_day(s, Mode::CA, proto, 2, o);
    const long n = static_cast<long>(s.mes.size());
    long bids = 0, broadcasts = 0, commits = 0, tr = 0;
    for (const auto& m : run.log) {
      switch (m.kind) {
        case MessageKind::Bid: ++bids; break;
        case MessageKind::PriceBroadcast:
        case MessageKind::PriceVectorBroadcast: ++broadcasts; break;
        case MessageKind::Commit: ++commits; break;
        case MessageKind::TransformerBid: ++tr; break;
      }
    }
    CHECK(bids == run.messages.bids);
    CHECK(broadcasts == run.messages.broadcasts);
    CHECK(commits == 24);
    CHECK(commits == run.messages.commits);
    CHECK(tr == run.messages.transformer_bids);
    long total = 0;
    for (const auto& p : run.periods) {
      CHECK(p.messages == p.record.iterations * (n + 1) + 1);
      total += p.messages;
    }
    CHECK(total == run.messages.total());
    if (proto == Protocol::TwoStage) {
      CHECK(run.day_ahead_messages.broadcasts == run.day_ahead_iterations + 1);
      CHECK(run.day_ahead_messages.bids == run.day_ahead_iterations * n);
      CHECK(run.day_ahead_prices.size() == 24);
    }
  }
}

TEST_CASE("runs are reproducible per seed") {
  const auto s = random_case(4, 8);
  const auto a = run_day(s, Mode::CA, Protocol::TwoStage, 11);
  const auto b = run_day(s, Mode::CA, Protocol::TwoStage, 11);
  const auto c = run_day(s, Mode::CA, Protocol::TwoStage, 12);
  CHECK(clearing_csv(a) == clearing_csv(b));
  CHECK(a.total_cost == b.total_cost);
  CHECK(a.total_cost != c.total_cost);
}

TEST_CASE("coordination removes the transformer violations of the autonomous run") {
  const auto s = case_two();
  const auto nca = run_day(s, Mode::NCA, Protocol::TwoStage, 1);
  CHECK(nca.violations >= 1);
  for (Mode m : {Mode::CA, Mode::CAFIL}) {
    const auto r = run_day(s, m, Protocol::TwoStage, 1);
    CHECK(r.violations == 0);
    for (const auto& p : r.periods) {
      CHECK(p.transformer <= s.grid.transformer_import_max + 1e-3);
      CHECK(p.transformer >= -s.grid.transformer_export_max - 1e-3);
      if (p.record.import_congested) CHECK(p.record.lambda_e >= p.record.mu_e);
      CHECK(p.record.iterations <= 12);
    }
    CHECK(r.accommodation() >= nca.accommodation() - 1e-12);
  }
}

TEST_CASE("iteration statistics count clearings with more than one evaluation") {
  SimRun run;
  for (int it : {1, 5, 9, 1, 4}) {
    PeriodResult p;
    p.record.iterations = it;
    run.periods.push_back(p);
  }
  const auto s = iteration_stats(run);
  CHECK(s.max == 9);
  CHECK(s.congested == 3);
  CHECK(s.avg == doctest::Approx(6.0));
}
