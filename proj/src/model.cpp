#include "imes/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

namespace imes {

bool ShiftableLoadSpec::in_window(int period) const {
  return std::find(window.begin(), window.end(), period) != window.end();
}

MesState initial_state(const MesConfig& cfg) {
  MesState s;
  if (cfg.ees) s.ees_energy_now = cfg.ees->initial_energy;
  if (cfg.tes) s.tes_energy_now = cfg.tes->initial_energy;
  return s;
}

DispatchSchedule::DispatchSchedule(HorizonSpec h) : horizon(h) {
  const auto n = static_cast<std::size_t>(std::max(0, h.length()));
  for (auto name : kFields) field(name).assign(n, 0.0);
}

std::vector<double>& DispatchSchedule::field(std::string_view name) {
  return const_cast<std::vector<double>&>(std::as_const(*this).field(name));
}

const std::vector<double>& DispatchSchedule::field(std::string_view name) const {
  if (name == "grid_exchange") return grid_exchange;
  if (name == "gas_chp") return gas_chp;
  if (name == "gas_furnace") return gas_furnace;
  if (name == "boiler_power") return boiler_power;
  if (name == "ees_charge") return ees_charge;
  if (name == "ees_discharge") return ees_discharge;
  if (name == "tes_charge") return tes_charge;
  if (name == "tes_discharge") return tes_discharge;
  if (name == "res_curtail") return res_curtail;
  if (name == "heat_curtail") return heat_curtail;
  if (name == "shiftable_elec") return shiftable_elec;
  if (name == "shiftable_heat") return shiftable_heat;
  if (name == "ees_energy") return ees_energy;
  if (name == "tes_energy") return tes_energy;
  throw std::invalid_argument(fmt::format("unknown schedule field '{}'", name));
}

namespace {

struct Checker {
  std::vector<Violation>& out;
  void require(bool ok, std::string field, std::string message) {
    if (!ok) out.push_back({std::move(field), std::move(message)});
  }
};

bool finite_nonneg(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x) && x >= 0.0; });
}

void check_storage(Checker& c, const std::string& prefix, const StorageParams& s) {
  c.require(s.energy_min >= 0.0, prefix + ".energy_min", "must be >= 0");
  c.require(s.energy_min <= s.target_energy, prefix + ".target_energy", "must be >= energy_min");
  c.require(s.target_energy <= s.energy_max, prefix + ".target_energy", "must be <= energy_max");
  c.require(s.eff_charge > 0.0 && s.eff_charge <= 1.0, prefix + ".eff_charge", "must lie in (0, 1]");
  c.require(s.eff_discharge > 0.0 && s.eff_discharge <= 1.0, prefix + ".eff_discharge", "must lie in (0, 1]");
  c.require(s.eff_charge * s.eff_discharge < 1.0, prefix + ".eff_charge",
            "η_ch·η_dch < 1 required");
  c.require(s.self_discharge_rate >= 0.0 && s.self_discharge_rate < 1.0, prefix + ".self_discharge_rate",
            "must lie in [0, 1)");
  c.require(s.initial_energy >= s.energy_min && s.initial_energy <= s.energy_max, prefix + ".initial_energy",
            "must lie in [energy_min, energy_max]");
  c.require(s.charge_power_max >= 0.0, prefix + ".charge_power_max", "must be >= 0");
  c.require(s.discharge_power_max >= 0.0, prefix + ".discharge_power_max", "must be >= 0");
}

void check_shiftable(Checker& c, const std::string& prefix, const ShiftableLoadSpec& s, int periods,
                     double dt) {
  c.require(s.total_energy >= 0.0, prefix + ".total_energy", "must be >= 0");
  c.require(s.per_period_max >= 0.0, prefix + ".per_period_max", "must be >= 0");
  for (int t : s.window)
    c.require(t >= 1 && t <= periods, prefix + ".window", fmt::format("period {} outside 1..{}", t, periods));
  c.require(s.total_energy <= 0.0 || !s.window.empty(), prefix + ".window", "empty window with positive total");
  c.require(s.total_energy <= s.per_period_max * static_cast<double>(s.window.size()) * dt + 1e-12,
            prefix + ".total_energy", "total exceeds window capacity");
}

}  // namespace

std::vector<Violation> validate_config(const MesConfig& cfg, const GridParams& grid) {
  std::vector<Violation> out;
  Checker c{out};
  const int periods = static_cast<int>(grid.rtp_price.size());
  const double dt = periods > 0 ? 24.0 / periods : 1.0;

  if (cfg.chp) {
    const auto& p = *cfg.chp;
    c.require(p.capacity_min >= 0.0 && p.capacity_min <= p.capacity_max, "chp.capacity_min",
              "must satisfy 0 <= min <= max");
    c.require(p.eff_gas_to_elec > 0.0 && p.eff_gas_to_elec <= 1.0, "chp.eff_gas_to_elec", "must lie in (0, 1]");
    c.require(p.eff_gas_to_heat >= 0.0, "chp.eff_gas_to_heat", "must be >= 0");
    c.require(p.ramp_limit >= 0.0, "chp.ramp_limit", "must be >= 0");
  }
  if (cfg.furnace) {
    const auto& p = *cfg.furnace;
    c.require(p.capacity_min >= 0.0 && p.capacity_min <= p.capacity_max, "furnace.capacity_min",
              "must satisfy 0 <= min <= max");
    c.require(p.eff > 0.0 && p.eff <= 1.0, "furnace.eff", "must lie in (0, 1]");
  }
  if (cfg.boiler) {
    const auto& p = *cfg.boiler;
    c.require(p.capacity_min >= 0.0 && p.capacity_min <= p.capacity_max, "boiler.capacity_min",
              "must satisfy 0 <= min <= max");
    c.require(p.eff > 0.0 && p.eff <= 1.0, "boiler.eff", "must lie in (0, 1]");
    c.require(p.ramp_limit >= 0.0, "boiler.ramp_limit", "must be >= 0");
  }
  if (cfg.ees) check_storage(c, "ees", *cfg.ees);
  if (cfg.tes) check_storage(c, "tes", *cfg.tes);
  check_shiftable(c, "shiftable_elec", cfg.shiftable_elec, periods, dt);
  check_shiftable(c, "shiftable_heat", cfg.shiftable_heat, periods, dt);

  const auto& pr = cfg.profiles;
  c.require(pr.elec_load.size() == static_cast<std::size_t>(periods), "profiles.elec_load",
            fmt::format("length {} != {}", pr.elec_load.size(), periods));
  c.require(pr.heat_load.size() == static_cast<std::size_t>(periods), "profiles.heat_load",
            fmt::format("length {} != {}", pr.heat_load.size(), periods));
  c.require(pr.res_output.size() == static_cast<std::size_t>(periods), "profiles.res_output",
            fmt::format("length {} != {}", pr.res_output.size(), periods));
  c.require(finite_nonneg(pr.elec_load), "profiles.elec_load", "entries must be finite and >= 0");
  c.require(finite_nonneg(pr.heat_load), "profiles.heat_load", "entries must be finite and >= 0");
  c.require(finite_nonneg(pr.res_output), "profiles.res_output", "entries must be finite and >= 0");

  c.require(cfg.line_import_max > 0.0, "line_import_max", "must be > 0");
  c.require(cfg.line_export_max > 0.0, "line_export_max", "must be > 0");

  const bool needs_heat = std::any_of(pr.heat_load.begin(), pr.heat_load.end(), [](double v) { return v > 0.0; }) ||
                          cfg.shiftable_heat.total_energy > 0.0;
  c.require(!needs_heat || cfg.chp || cfg.furnace || cfg.boiler, "heat_sources",
            "heat load present but no heat source");

  c.require(grid.transformer_import_max >= 0.0, "grid.transformer_import_max", "must be >= 0");
  c.require(grid.transformer_export_max >= 0.0, "grid.transformer_export_max", "must be >= 0");
  c.require(grid.shared_res.size() == static_cast<std::size_t>(periods), "grid.shared_res",
            fmt::format("length {} != {}", grid.shared_res.size(), periods));
  c.require(finite_nonneg(grid.shared_res), "grid.shared_res", "entries must be finite and >= 0");
  c.require(grid.gas_price > 0.0 && grid.gas_heating_value > 0.0, "grid.gas_price", "must be > 0");
  c.require(grid.price_floor <= grid.price_ceiling, "grid.price_floor", "must be <= price_ceiling");
  if (!grid.rtp_price.empty()) {
    const auto [lo, hi] = std::minmax_element(grid.rtp_price.begin(), grid.rtp_price.end());
    c.require(grid.price_floor <= *lo, "grid.rtp_price", "below price_floor");
    c.require(*hi <= grid.price_ceiling, "grid.rtp_price", "above price_ceiling");
    c.require(grid.feed_in_price >= 0.0 && grid.feed_in_price <= *lo, "grid.feed_in_price",
              "must lie in [0, min rtp]");
  } else {
    c.require(false, "grid.rtp_price", "empty");
  }
  return out;
}

DecayModel decay_model(const StorageParams& p, double dt, bool per_period_decay) {
  if (per_period_decay) {
    const double s = 1.0 - p.self_discharge_rate * dt / 24.0;
    return {s, s};
  }
  return {1.0 - p.self_discharge_rate, 1.0};
}

std::vector<double> storage_trajectory(const StorageParams& p, double initial_energy,
                                       const std::vector<double>& charge,
                                       const std::vector<double>& discharge, double dt,
                                       bool per_period_decay) {
  const auto d = decay_model(p, dt, per_period_decay);
  std::vector<double> e(charge.size());
  double prev = initial_energy;
  for (std::size_t k = 0; k < charge.size(); ++k) {
    const double delta = dt * (charge[k] * p.eff_charge - discharge[k] / p.eff_discharge);
    prev = (k == 0 ? d.initial_factor : d.step_factor) * prev + delta;
    e[k] = prev;
  }
  return e;
}

namespace {

void bump(ResidualMap& r, const std::string& family, double violation) {
  auto& slot = r[family];
  slot = std::max(slot, std::max(0.0, violation));
}

double bound_violation(double v, double lo, double hi) { return std::max(lo - v, v - hi); }

void storage_residuals(ResidualMap& r, const std::string& prefix, const StorageParams& p, double e0,
                       const std::vector<double>& ch, const std::vector<double>& dch,
                       const std::vector<double>& stored, double dt, bool per_period, bool targets) {
  const auto traj = storage_trajectory(p, e0, ch, dch, dt, per_period);
  for (std::size_t k = 0; k < traj.size(); ++k) {
    bump(r, prefix + "_power", bound_violation(ch[k], 0.0, p.charge_power_max));
    bump(r, prefix + "_power", bound_violation(dch[k], 0.0, p.discharge_power_max));
    bump(r, prefix + "_energy", bound_violation(traj[k], p.energy_min, p.energy_max));
    bump(r, prefix + "_trajectory", std::abs(traj[k] - stored[k]));
  }
  if (targets && !traj.empty()) bump(r, prefix + "_target", std::abs(traj.back() - p.target_energy));
}

}  // namespace

ResidualMap feasibility_residuals(const MesConfig& cfg, const DispatchSchedule& s, const MesState* state,
                                  ResidualOptions opts) {
  const int n = s.horizon.length();
  for (auto name : DispatchSchedule::kFields)
    if (static_cast<int>(s.field(name).size()) != n)
      throw std::invalid_argument(fmt::format("schedule field {} has length {} != horizon {}", name,
                                              s.field(name).size(), n));
  const auto& pr = cfg.profiles;
  if (s.horizon.end_period > pr.size() || s.horizon.start_period < 1)
    throw std::invalid_argument("schedule horizon exceeds profile length");

  const MesState st = state ? *state : initial_state(cfg);
  const double dt = s.horizon.period_length_hours;
  ResidualMap r;
  for (const char* family :
       {"elec_balance", "heat_balance", "line_limit", "chp_capacity", "furnace_capacity", "boiler_capacity",
        "chp_ramp", "boiler_ramp", "res_curtail", "heat_curtail", "shiftable_elec", "shiftable_heat",
        "absent_device", "nonnegativity"})
    r[family] = 0.0;

  const double chp_ge = cfg.chp ? cfg.chp->eff_gas_to_elec : 0.0;
  const double chp_gth = cfg.chp ? cfg.chp->eff_gas_to_heat : 0.0;
  const double gf_eff = cfg.furnace ? cfg.furnace->eff : 0.0;
  const double eb_eff = cfg.boiler ? cfg.boiler->eff : 0.0;

  std::optional<double> prev_chp = st.prev_chp_power;
  std::optional<double> prev_eb = st.prev_boiler_power;
  double served_e = st.shiftable_elec_served;
  double served_h = st.shiftable_heat_served;

  for (int k = 0; k < n; ++k) {
    const int t = s.horizon.start_period + k;
    const int i = t - 1;
    const double elec_in = s.grid_exchange[k] + pr.res_output[i] + chp_ge * s.gas_chp[k] - s.boiler_power[k] +
                           s.ees_discharge[k] - s.ees_charge[k] - s.res_curtail[k];
    const double elec_out = s.shiftable_elec[k] + pr.elec_load[i];
    bump(r, "elec_balance", std::abs(elec_in - elec_out));
    const double heat_in = chp_gth * s.gas_chp[k] + gf_eff * s.gas_furnace[k] + eb_eff * s.boiler_power[k] +
                           s.tes_discharge[k] - s.tes_charge[k] - s.heat_curtail[k];
    const double heat_out = s.shiftable_heat[k] + pr.heat_load[i];
    bump(r, "heat_balance", std::abs(heat_in - heat_out));

    bump(r, "line_limit", bound_violation(s.grid_exchange[k], -cfg.line_export_max, cfg.line_import_max));

    for (auto name : DispatchSchedule::kFields) {
      if (name == "grid_exchange") continue;
      bump(r, "nonnegativity", -s.field(name)[k]);
    }

    const double p_chp = chp_ge * s.gas_chp[k];
    if (cfg.chp) {
      bump(r, "chp_capacity", bound_violation(p_chp, cfg.chp->capacity_min, cfg.chp->capacity_max));
      if (prev_chp) bump(r, "chp_ramp", std::abs(p_chp - *prev_chp) - cfg.chp->ramp_limit * dt);
      prev_chp = p_chp;
    } else {
      bump(r, "absent_device", std::abs(s.gas_chp[k]));
    }
    if (cfg.furnace) {
      bump(r, "furnace_capacity",
           bound_violation(gf_eff * s.gas_furnace[k], cfg.furnace->capacity_min, cfg.furnace->capacity_max));
    } else {
      bump(r, "absent_device", std::abs(s.gas_furnace[k]));
    }
    if (cfg.boiler) {
      bump(r, "boiler_capacity",
           bound_violation(s.boiler_power[k], cfg.boiler->capacity_min, cfg.boiler->capacity_max));
      if (prev_eb) bump(r, "boiler_ramp", std::abs(s.boiler_power[k] - *prev_eb) - cfg.boiler->ramp_limit * dt);
      prev_eb = s.boiler_power[k];
    } else {
      bump(r, "absent_device", std::abs(s.boiler_power[k]));
    }
    if (!cfg.ees) bump(r, "absent_device", std::max(s.ees_charge[k], s.ees_discharge[k]));
    if (!cfg.tes) bump(r, "absent_device", std::max(s.tes_charge[k], s.tes_discharge[k]));

    bump(r, "res_curtail", bound_violation(s.res_curtail[k], 0.0, pr.res_output[i]));
    bump(r, "heat_curtail", -s.heat_curtail[k]);

    const auto& se = cfg.shiftable_elec;
    const auto& sh = cfg.shiftable_heat;
    bump(r, "shiftable_elec", se.in_window(t) ? bound_violation(s.shiftable_elec[k], 0.0, se.per_period_max)
                                              : std::abs(s.shiftable_elec[k]));
    bump(r, "shiftable_heat", sh.in_window(t) ? bound_violation(s.shiftable_heat[k], 0.0, sh.per_period_max)
                                              : std::abs(s.shiftable_heat[k]));
    served_e += s.shiftable_elec[k] * dt;
    served_h += s.shiftable_heat[k] * dt;

    if (opts.include_complementarity) {
      bump(r, "ees_complementarity", s.ees_charge[k] * s.ees_discharge[k]);
      bump(r, "tes_complementarity", s.tes_charge[k] * s.tes_discharge[k]);
    }
  }
  if (opts.include_shiftable_totals) {
    bump(r, "shiftable_elec_total", std::abs(served_e - cfg.shiftable_elec.total_energy));
    bump(r, "shiftable_heat_total", std::abs(served_h - cfg.shiftable_heat.total_energy));
  }
  if (cfg.ees)
    storage_residuals(r, "ees", *cfg.ees, st.ees_energy_now, s.ees_charge, s.ees_discharge, s.ees_energy, dt,
                      cfg.per_period_self_discharge, opts.include_targets);
  if (cfg.tes)
    storage_residuals(r, "tes", *cfg.tes, st.tes_energy_now, s.tes_charge, s.tes_discharge, s.tes_energy, dt,
                      cfg.per_period_self_discharge, opts.include_targets);
  return r;
}

double max_residual(const ResidualMap& r) {
  double m = 0.0;
  for (const auto& [k, v] : r) m = std::max(m, v);
  return m;
}

}  // namespace imes
