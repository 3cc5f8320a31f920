#include <doctest.h>

#include <stdexcept>

#include "fixtures.hpp"
#include "imes/model.hpp"

using namespace imes;

namespace {

bool has_violation(const std::vector<Violation>& v, std::string_view message) {
  for (const auto& x : v)
    if (x.message.find(message) != std::string::npos) return true;
  return false;
}

}  // namespace

TEST_CASE("validate_config accepts a complete MES") {
  const auto grid = fixtures::flat_grid(24, 0.5);
  const auto cfg = fixtures::full_mes(24, 1);
  CHECK(validate_config(cfg, grid).empty());
}

TEST_CASE("validate_config flags lossless storage") {
  const auto grid = fixtures::flat_grid(24, 0.5);
  auto cfg = fixtures::full_mes(24, 1);
  cfg.ees->eff_charge = 1.0;
  cfg.ees->eff_discharge = 1.0;
  const auto v = validate_config(cfg, grid);
  REQUIRE(v.size() == 1);
  CHECK(v[0].field == "ees.eff_charge");
  CHECK(has_violation(v, "η_ch·η_dch < 1 required"));
}

TEST_CASE("validate_config flags shiftable energy beyond window capacity") {
  const auto grid = fixtures::flat_grid(24, 0.5);
  auto cfg = fixtures::bare_mes(24);
  cfg.shiftable_elec.total_energy = 10.0;
  cfg.shiftable_elec.per_period_max = 1.0;
  cfg.shiftable_elec.window = {3, 4, 5, 6, 7};
  const auto v = validate_config(cfg, grid);
  REQUIRE(v.size() == 1);
  CHECK(v[0].field == "shiftable_elec.total_energy");
  CHECK(has_violation(v, "total exceeds window capacity"));
}

TEST_CASE("validate_config catches assorted invariant breaches") {
  auto grid = fixtures::flat_grid(24, 0.5);
  auto cfg = fixtures::full_mes(24, 2);
  cfg.chp->capacity_min = cfg.chp->capacity_max + 1.0;
  cfg.tes->self_discharge_rate = 1.0;
  cfg.line_export_max = 0.0;
  grid.rtp_price[3] = 1.5;
  const auto v = validate_config(cfg, grid);
  CHECK(v.size() == 4);

  auto heatless = fixtures::bare_mes(24);
  heatless.profiles.heat_load[5] = 0.2;
  CHECK(has_violation(validate_config(heatless, fixtures::flat_grid(24, 0.5)), "no heat source"));
}

TEST_CASE("all-zero schedule on an empty MES has zero residuals") {
  const auto cfg = fixtures::bare_mes(24);
  const DispatchSchedule s(HorizonSpec{});
  const auto r = feasibility_residuals(cfg, s);
  CHECK(max_residual(r) == 0.0);
  CHECK(r.count("elec_balance") == 1);
}

TEST_CASE("over-limit charging shows up in the storage power family") {
  auto cfg = fixtures::bare_mes(4);
  cfg.ees = fixtures::storage(2.0, 0.25, 0.0);
  HorizonSpec h{1.0, 1, 4, 24};
  DispatchSchedule s(h);
  s.ees_charge[0] = cfg.ees->charge_power_max + 0.1;
  s.grid_exchange[0] = s.ees_charge[0];
  s.ees_energy = storage_trajectory(*cfg.ees, cfg.ees->initial_energy, s.ees_charge, s.ees_discharge, 1.0, false);
  ResidualOptions opts;
  opts.include_targets = false;
  const auto r = feasibility_residuals(cfg, s, nullptr, opts);
  CHECK(r.at("ees_power") == doctest::Approx(0.1));
  CHECK(r.at("elec_balance") == 0.0);
  CHECK(r.at("ees_trajectory") == 0.0);
}

TEST_CASE("length mismatch is rejected") {
  const auto cfg = fixtures::bare_mes(24);
  DispatchSchedule s(HorizonSpec{});
  s.gas_chp.pop_back();
  CHECK_THROWS_AS(feasibility_residuals(cfg, s), std::invalid_argument);
}

TEST_CASE("storage trajectory applies decay once or per period") {
  StorageParams p = fixtures::storage(2.0, 0.25, 0.24);
  const std::vector<double> ch{0.5, 0.0, 0.0};
  const std::vector<double> dch{0.0, 0.0, 0.9};
  const auto literal = storage_trajectory(p, 1.0, ch, dch, 1.0, false);
  CHECK(literal[0] == doctest::Approx(0.76 + 0.45));
  CHECK(literal[1] == doctest::Approx(0.76 + 0.45));
  CHECK(literal[2] == doctest::Approx(0.76 + 0.45 - 1.0));
  const auto per = storage_trajectory(p, 1.0, ch, dch, 1.0, true);
  const double s = 1.0 - 0.24 / 24.0;
  CHECK(per[0] == doctest::Approx(s * 1.0 + 0.45));
  CHECK(per[1] == doctest::Approx(s * (s * 1.0 + 0.45)));
}

TEST_CASE("schedule field lookup covers every field") {
  DispatchSchedule s(HorizonSpec{1.0, 5, 8, 24});
  CHECK(s.length() == 4);
  CHECK(s.index(6) == 1);
  for (auto name : DispatchSchedule::kFields) CHECK(s.field(name).size() == 4);
  CHECK_THROWS_AS(s.field("nope"), std::invalid_argument);
}
