#include <doctest.h>

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "fixtures.hpp"
#include "imes/eec.hpp"

using namespace imes;

namespace {

PriceVector flat_prices(const HorizonSpec& h, const std::vector<double>& day) {
  PriceVector p;
  p.start_period = h.start_period;
  for (int t = h.start_period; t <= h.end_period; ++t) p.elec.push_back(day[t - 1]);
  return p;
}

MesConfig wind_rich(int periods, std::uint64_t seed) {
  auto cfg = fixtures::full_mes(periods, seed);
  std::mt19937_64 rng(seed * 31 + 7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < periods; ++t) cfg.profiles.res_output[t] = 2.5 + 2.0 * u(rng);
  cfg.line_export_max = 0.5;
  return cfg;
}

}  // namespace

TEST_CASE("EEC transform reference values") {
  const auto a = eec_transform(100.0, 50.0, 0.9, 0.9, 1.0);
  CHECK(a.charge == doctest::Approx((90.0 - 50.0 / 0.9) / 0.9));
  CHECK(a.charge == doctest::Approx(38.2716).epsilon(1e-5));
  CHECK(a.discharge == 0.0);
  const auto b = eec_transform(20.0, 90.0, 0.9, 0.9, 1.0);
  CHECK(b.charge == 0.0);
  CHECK(b.discharge == doctest::Approx(73.8));
  const auto c = eec_transform(0.0, 40.0, 0.9, 0.9, 1.0);
  CHECK(c.charge == 0.0);
  CHECK(c.discharge == 40.0);
  CHECK_THROWS_AS(eec_transform(-1.0, 0.0, 0.9, 0.9, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(eec_transform(1.0, 0.0, 1.2, 0.9, 1.0), std::invalid_argument);
}

TEST_CASE("net discharge delta agrees with the transformed pair") {
  const double d = net_discharge_delta(100.0, 50.0, 0.9, 0.9);
  CHECK(d == doctest::Approx((1.0 / 0.81 - 1.0) * 50.0));
  CHECK(d == doctest::Approx(11.7284).epsilon(1e-5));
  const auto a = eec_transform(100.0, 50.0, 0.9, 0.9, 1.0);
  CHECK(d == doctest::Approx((a.discharge - a.charge) - (50.0 - 100.0)));
  CHECK(net_discharge_delta(30.0, 0.0, 0.9, 0.9) == 0.0);
  CHECK(net_discharge_delta(100.0, 200.0, 0.9, 0.9) == doctest::Approx(19.0));
}

TEST_CASE("EEC preserves energy change and yields exclusive pairs on random inputs") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 5.0);
  std::uniform_real_distribution<double> eta(0.5, 0.99);
  for (int i = 0; i < 10000; ++i) {
    const double ch = u(rng), dch = u(rng), ec = eta(rng), ed = eta(rng), dt = 0.25 + u(rng) / 5.0;
    const auto p = eec_transform(ch, dch, ec, ed, dt);
    CHECK(p.charge * p.discharge == 0.0);
    const double before = dt * (ch * ec - dch / ed);
    const double after = dt * (p.charge * ec - p.discharge / ed);
    CHECK(std::abs(before - after) <= 1e-12 * (1.0 + std::abs(before)));
    CHECK(net_discharge_delta(ch, dch, ec, ed) > 0.0);
    CHECK(net_discharge_delta(ch, dch, ec, ed) ==
          doctest::Approx((p.discharge - p.charge) - (dch - ch)).epsilon(1e-9));
  }
}

TEST_CASE("condition on remaining RES is evaluated per period") {
  auto cfg = fixtures::bare_mes(3);
  cfg.ees = fixtures::storage(1000.0, 0.2, 0.0);
  cfg.profiles.res_output = {500.0, 50.0, 50.0};
  DispatchSchedule s(HorizonSpec{1.0, 1, 3, 3});
  s.ees_charge = {100.0, 10.0, 0.0};
  s.ees_discharge = {50.0, 5.0, 40.0};
  s.res_curtail = {100.0, 50.0, 50.0};
  const auto ok = check_theorem2_condition(s, cfg);
  CHECK(ok[0]);
  CHECK_FALSE(ok[1]);
  CHECK(ok[2]);
  CHECK((500.0 - 100.0) / (1.0 - 0.81) == doctest::Approx(2105.26).epsilon(1e-5));
}

TEST_CASE("apply_eec leaves exclusive schedules untouched") {
  const auto cfg = fixtures::full_mes(24, 5);
  const HorizonSpec h;
  const auto sol = solve_autonomous(cfg, initial_state(cfg), flat_prices(h, fixtures::price_curve(24, 1)), h);
  REQUIRE(sol.ok());
  auto sched = sol.schedule;
  for (int k = 0; k < sched.length(); ++k) {
    if (std::min(sched.ees_charge[k], sched.ees_discharge[k]) > 0.0) sched.ees_discharge[k] = 0.0;
    if (std::min(sched.tes_charge[k], sched.tes_discharge[k]) > 0.0) sched.tes_discharge[k] = 0.0;
  }
  const auto r = apply_eec(sched, cfg);
  for (auto name : {"ees_charge", "ees_discharge", "tes_charge", "tes_discharge", "res_curtail", "heat_curtail"})
    CHECK(r.schedule.field(name) == sched.field(name));
  CHECK_FALSE(r.report.complementarity_violated_pre);
  CHECK(r.report.complementarity_satisfied_post);
  CHECK_FALSE(r.report.curtailment_overflow);
}

TEST_CASE("simultaneous operation is moved into curtailment at equal cost") {
  const int periods = 24;
  const auto cfg = wind_rich(periods, 9);
  const HorizonSpec h;
  const auto p = flat_prices(h, fixtures::price_curve(periods, 2));
  const auto sol = solve_autonomous(cfg, initial_state(cfg), p, h);
  REQUIRE(sol.ok());
  // Build an alternative optimum with simultaneous operation in two
  // curtailing periods: extra charge a and discharge eta^2 a keep the
  // energy change, and curtailment absorbs the net (1 - eta^2) a.
  auto sched = sol.schedule;
  const double eta = cfg.ees->eff_charge * cfg.ees->eff_discharge;
  int injected = 0;
  for (int k = 0; k < sched.length() && injected < 2; ++k) {
    const double room_ch = cfg.ees->charge_power_max - sched.ees_charge[k];
    const double room_dch = cfg.ees->discharge_power_max - sched.ees_discharge[k];
    double a = std::min({room_ch, room_dch / eta, sched.res_curtail[k] / (1.0 - eta)}) * 0.5;
    if (a < 1e-3) continue;
    sched.ees_charge[k] += a;
    sched.ees_discharge[k] += eta * a;
    sched.res_curtail[k] -= (1.0 - eta) * a;
    ++injected;
  }
  REQUIRE(injected == 2);
  CHECK(max_residual(feasibility_residuals(cfg, sched)) <= 1e-6);
  const auto r = apply_eec(sched, cfg);
  CHECK(r.report.complementarity_violated_pre);
  CHECK(r.report.complementarity_satisfied_post);
  CHECK(r.report.theorem2_condition_held);
  CHECK_FALSE(r.report.curtailment_overflow);
  CHECK_FALSE(r.report.theorem1_precondition_held);
  for (int k = 0; k < sched.length(); ++k) {
    CHECK(r.schedule.ees_charge[k] * r.schedule.ees_discharge[k] == 0.0);
    CHECK(r.schedule.tes_charge[k] * r.schedule.tes_discharge[k] == 0.0);
    CHECK(std::abs(r.schedule.ees_energy[k] - sched.ees_energy[k]) <= 1e-12);
    CHECK(std::abs(r.schedule.tes_energy[k] - sched.tes_energy[k]) <= 1e-12);
    CHECK(r.schedule.grid_exchange[k] == sched.grid_exchange[k]);
    const double expected = sched.res_curtail[k] + (std::min(sched.ees_charge[k], sched.ees_discharge[k]) > 0.0
                                                        ? net_discharge_delta(sched.ees_charge[k], sched.ees_discharge[k],
                                                                              cfg.ees->eff_charge, cfg.ees->eff_discharge)
                                                        : 0.0);
    CHECK(r.schedule.res_curtail[k] == doctest::Approx(expected).epsilon(1e-9));
  }
  CHECK(schedule_cost(r.schedule, p) == doctest::Approx(schedule_cost(sched, p)).epsilon(1e-12));
  CHECK(max_residual(feasibility_residuals(cfg, r.schedule, nullptr, {true, true, true})) <= 1e-6);
}

TEST_CASE("violated remaining-RES condition is flagged, not clamped") {
  auto cfg = fixtures::bare_mes(2);
  cfg.ees = fixtures::storage(10.0, 0.5, 0.0);
  cfg.profiles.res_output = {0.05, 0.0};
  DispatchSchedule s(HorizonSpec{1.0, 1, 2, 2});
  s.ees_charge = {2.0, 0.0};
  s.ees_discharge = {1.62, 0.0};
  s.res_curtail = {0.0, 0.0};
  const auto r = apply_eec(s, cfg);
  CHECK_FALSE(r.report.theorem2_condition_held);
  CHECK(r.report.curtailment_overflow);
  CHECK(r.schedule.res_curtail[0] > cfg.profiles.res_output[0]);
  std::ostringstream csv;
  write_eec_csv(r.report, csv);
  CHECK(csv.str().find("period,storage") == 0);
}

TEST_CASE("mode enumeration matches the relaxation without curtailment") {
  int compared = 0;
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    const int periods = 4;
    auto cfg = fixtures::full_mes(periods, seed);
    const HorizonSpec h{1.0, 1, periods, periods};
    const auto p = flat_prices(h, fixtures::price_curve(periods, seed));
    const auto relaxed = solve_autonomous(cfg, initial_state(cfg), p, h);
    if (!relaxed.ok()) continue;
    bool curtails = false;
    for (double c : relaxed.schedule.res_curtail) curtails |= c > 1e-9;
    if (curtails) continue;
    const auto oracle = p1_oracle(cfg, initial_state(cfg), p, h);
    CHECK(oracle.branches == 256);
    CHECK(std::abs(oracle.cost - relaxed.cost) <= 1e-6 * std::max(1.0, std::abs(relaxed.cost)));
    ++compared;
  }
  CHECK(compared >= 3);
}

TEST_CASE("mode enumeration equals relaxation plus EEC on wind-rich horizons") {
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    const int periods = 4;
    const auto cfg = wind_rich(periods, seed);
    const HorizonSpec h{1.0, 1, periods, periods};
    const auto p = flat_prices(h, fixtures::price_curve(periods, seed + 40));
    const auto relaxed = solve_autonomous(cfg, initial_state(cfg), p, h);
    REQUIRE(relaxed.ok());
    const auto r = apply_eec(relaxed.schedule, cfg);
    REQUIRE(r.report.theorem2_condition_held);
    const auto oracle = p1_oracle(cfg, initial_state(cfg), p, h);
    CHECK(std::abs(oracle.cost - schedule_cost(r.schedule, p)) <= 1e-6 * std::max(1.0, std::abs(oracle.cost)));
  }
}

TEST_CASE("mode enumeration guards and degenerate cases") {
  auto cfg = fixtures::full_mes(12, 1);
  const HorizonSpec long_h{1.0, 1, 12, 12};
  CHECK_THROWS_AS(p1_oracle(cfg, initial_state(cfg), flat_prices(long_h, std::vector<double>(12, 0.5)), long_h),
                  MesError);
  auto plain = fixtures::bare_mes(3);
  plain.profiles.elec_load = {1.0, 0.5, 0.2};
  const HorizonSpec h{1.0, 1, 3, 3};
  const auto p = flat_prices(h, {0.3, 0.6, 0.4});
  const auto oracle = p1_oracle(plain, initial_state(plain), p, h);
  CHECK(oracle.branches == 1);
  CHECK(oracle.cost == doctest::Approx(solve_autonomous(plain, initial_state(plain), p, h).cost));
}
