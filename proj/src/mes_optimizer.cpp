#include "imes/mes_optimizer.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace imes {

using lp::kInf;
using lp::RowSense;

PriceVector rtp_prices(const GridParams& grid, const HorizonSpec& horizon) {
  PriceVector p;
  p.start_period = horizon.start_period;
  p.gas_per_kwh = grid.gas_price_per_kwh();
  for (int t = horizon.start_period; t <= horizon.end_period; ++t) p.elec.push_back(grid.rtp_price.at(t - 1));
  return p;
}

int P2Layout::field_index(std::string_view name) {
  for (int i = 0; i < kNumFields; ++i)
    if (DispatchSchedule::kFields[i] == name) return i;
  throw std::invalid_argument(fmt::format("unknown schedule field '{}'", name));
}

namespace {

enum Field : int {
  kGrid, kGasChp, kGasGf, kBoiler, kEesCh, kEesDch, kTesCh, kTesDch, kCurt, kHeatCurt, kSlE, kSlH, kEesE, kTesE
};

int mode_at(const std::vector<int>& modes, int k) {
  return k < static_cast<int>(modes.size()) ? modes[k] : 0;
}

void add_storage(lp::LinearProgram& lp, P2Layout& layout, const StorageParams& p, double e0, int owner,
                 const HorizonSpec& h, Field ch_f, Field dch_f, Field e_f, const char* prefix, bool per_period,
                 const std::vector<int>& modes) {
  const int n = h.length();
  const double dt = h.period_length_hours;
  const auto decay = decay_model(p, dt, per_period);
  const std::string pre(prefix);
  for (int k = 0; k < n; ++k) {
    const int t = h.start_period + k;
    const int mode = mode_at(modes, k);
    const double ch_hi = mode == 2 ? 0.0 : p.charge_power_max;
    const double dch_hi = mode == 1 ? 0.0 : p.discharge_power_max;
    const int ch = lp.add_column(0.0, 0.0, ch_hi, {owner, pre + "_charge", t});
    const int dch = lp.add_column(0.0, 0.0, dch_hi, {owner, pre + "_discharge", t});
    double lo = p.energy_min;
    double hi = p.energy_max;
    if (k == n - 1) lo = hi = p.target_energy;
    const int e = lp.add_column(0.0, lo, hi, {owner, pre + "_energy", t});
    layout.column[ch_f][k] = ch;
    layout.column[dch_f][k] = dch;
    layout.column[e_f][k] = e;
    const int r = lp.add_row(RowSense::Equal, k == 0 ? decay.initial_factor * e0 : 0.0,
                             fmt::format("m{}_{}_dyn_{}", owner, pre, t));
    lp.add_entry(r, e, 1.0);
    if (k > 0) lp.add_entry(r, layout.column[e_f][k - 1], -decay.step_factor);
    lp.add_entry(r, ch, -dt * p.eff_charge);
    lp.add_entry(r, dch, dt / p.eff_discharge);
  }
}

void add_ramp(lp::LinearProgram& lp, const std::vector<int>& cols, double coef, double limit,
              std::optional<double> prev, int owner, const HorizonSpec& h, const char* name, double reserve) {
  const int n = h.length();
  for (int k = 0; k < n; ++k) {
    const int t = h.start_period + k;
    const std::string row = fmt::format("m{}_{}_ramp_{}", owner, name, t);
    if (k == 0) {
      if (!prev) continue;
      const int r = lp.add_row(RowSense::Range, *prev - limit, row, 2.0 * limit);
      lp.add_entry(r, cols[0], coef);
    } else {
      const double l = (1.0 - reserve) * limit;
      const int r = lp.add_row(RowSense::Range, -l, row, 2.0 * l);
      lp.add_entry(r, cols[k], coef);
      lp.add_entry(r, cols[k - 1], -coef);
    }
  }
}

// Shrinks capacity bounds at offsets >= 1; the current period keeps full limits.
void hold_back(P2Instance& inst, double reserve) {
  auto& lp = inst.lp;
  const double f = 1.0 - reserve;
  for (Field fld : {kGrid, kGasChp, kGasGf, kBoiler, kEesCh, kEesDch, kTesCh, kTesDch}) {
    const auto& cols = inst.layout.column[fld];
    for (std::size_t k = 1; k < cols.size(); ++k) {
      const int c = cols[k];
      if (c < 0) continue;
      lp.upper[c] = std::max(lp.lower[c], f * lp.upper[c]);
      if (fld == kGrid) lp.lower[c] *= f;
    }
  }
}

void add_shiftable(lp::LinearProgram& lp, P2Layout& layout, const ShiftableLoadSpec& spec, double served,
                   int owner, const HorizonSpec& h, Field f, const char* name) {
  if (spec.total_energy <= 0.0) return;
  const double remaining = std::max(0.0, spec.total_energy - served);
  const double dt = h.period_length_hours;
  std::vector<int> cols;
  for (int k = 0; k < h.length(); ++k) {
    const int t = h.start_period + k;
    if (!spec.in_window(t)) continue;
    const int c = lp.add_column(0.0, 0.0, spec.per_period_max, {owner, name, t});
    layout.column[f][k] = c;
    cols.push_back(c);
  }
  if (cols.empty()) {
    if (remaining > 1e-9)
      throw MesError(fmt::format("MES {}: {} window has passed with {:.6f} MWh unserved", owner, name, remaining),
                     owner, h.start_period);
    return;
  }
  const int r = lp.add_row(RowSense::Equal, remaining, fmt::format("m{}_{}_total", owner, name));
  for (int c : cols) lp.add_entry(r, c, dt);
}

}  // namespace

P2Instance build_p2(const MesConfig& cfg, const MesState& state, const PriceVector& prices,
                    const HorizonSpec& horizon, const P2Options& options) {
  const int n = horizon.length();
  if (n <= 0) throw MesError("empty horizon", cfg.id);
  if (horizon.start_period < 1 || horizon.end_period > cfg.profiles.size())
    throw MesError(fmt::format("MES {}: horizon {}..{} outside profiles", cfg.id, horizon.start_period,
                               horizon.end_period),
                   cfg.id);
  if (prices.start_period != horizon.start_period || static_cast<int>(prices.elec.size()) != n)
    throw MesError(fmt::format("MES {}: price vector does not cover the horizon", cfg.id), cfg.id);

  P2Instance inst;
  inst.horizon = horizon;
  for (auto& col : inst.layout.column) col.assign(n, -1);
  auto& lp = inst.lp;
  auto& L = inst.layout;
  const int id = cfg.id;
  const double dt = horizon.period_length_hours;
  const auto& pr = cfg.profiles;

  for (int k = 0; k < n; ++k) {
    const int t = horizon.start_period + k;
    const int i = t - 1;
    L.column[kGrid][k] = lp.add_column(prices.elec[k] * dt, -cfg.line_export_max, cfg.line_import_max,
                                       {id, "grid_exchange", t});
    if (cfg.chp) {
      const auto& c = *cfg.chp;
      L.column[kGasChp][k] = lp.add_column(prices.gas_per_kwh * dt, c.capacity_min / c.eff_gas_to_elec,
                                           c.capacity_max / c.eff_gas_to_elec, {id, "gas_chp", t});
    }
    if (cfg.furnace) {
      const auto& f = *cfg.furnace;
      L.column[kGasGf][k] =
          lp.add_column(prices.gas_per_kwh * dt, f.capacity_min / f.eff, f.capacity_max / f.eff, {id, "gas_furnace", t});
    }
    if (cfg.boiler)
      L.column[kBoiler][k] =
          lp.add_column(0.0, cfg.boiler->capacity_min, cfg.boiler->capacity_max, {id, "boiler_power", t});
    L.column[kCurt][k] = lp.add_column(0.0, 0.0, pr.res_output[i], {id, "res_curtail", t});
    L.column[kHeatCurt][k] = lp.add_column(0.0, 0.0, kInf, {id, "heat_curtail", t});
  }
  add_shiftable(lp, L, cfg.shiftable_elec, state.shiftable_elec_served, id, horizon, kSlE, "shiftable_elec");
  add_shiftable(lp, L, cfg.shiftable_heat, state.shiftable_heat_served, id, horizon, kSlH, "shiftable_heat");
  if (cfg.ees)
    add_storage(lp, L, *cfg.ees, state.ees_energy_now, id, horizon, kEesCh, kEesDch, kEesE, "ees",
                cfg.per_period_self_discharge, options.ees_mode);
  if (cfg.tes)
    add_storage(lp, L, *cfg.tes, state.tes_energy_now, id, horizon, kTesCh, kTesDch, kTesE, "tes",
                cfg.per_period_self_discharge, options.tes_mode);

  for (int k = 0; k < n; ++k) {
    const int t = horizon.start_period + k;
    const int i = t - 1;
    auto add = [&](int row, Field f, double coef) {
      const int c = L.column[f][k];
      if (c >= 0) lp.add_entry(row, c, coef);
    };
    const int re = lp.add_row(RowSense::Equal, pr.elec_load[i] - pr.res_output[i], fmt::format("m{}_elec_{}", id, t));
    add(re, kGrid, 1.0);
    if (cfg.chp) add(re, kGasChp, cfg.chp->eff_gas_to_elec);
    add(re, kBoiler, -1.0);
    add(re, kEesDch, 1.0);
    add(re, kEesCh, -1.0);
    add(re, kCurt, -1.0);
    add(re, kSlE, -1.0);

    const int rh = lp.add_row(RowSense::Equal, pr.heat_load[i], fmt::format("m{}_heat_{}", id, t));
    if (cfg.chp) add(rh, kGasChp, cfg.chp->eff_gas_to_heat);
    if (cfg.furnace) add(rh, kGasGf, cfg.furnace->eff);
    if (cfg.boiler) add(rh, kBoiler, cfg.boiler->eff);
    add(rh, kTesDch, 1.0);
    add(rh, kTesCh, -1.0);
    add(rh, kHeatCurt, -1.0);
    add(rh, kSlH, -1.0);
  }
  if (cfg.chp)
    add_ramp(lp, L.column[kGasChp], cfg.chp->eff_gas_to_elec, cfg.chp->ramp_limit * dt, state.prev_chp_power, id,
             horizon, "chp", options.planning_reserve);
  if (cfg.boiler)
    add_ramp(lp, L.column[kBoiler], 1.0, cfg.boiler->ramp_limit * dt, state.prev_boiler_power, id, horizon,
             "boiler", options.planning_reserve);
  if (options.planning_reserve > 0.0) hold_back(inst, options.planning_reserve);
  return inst;
}

DispatchSchedule extract_schedule(const P2Instance& inst, const MesConfig& cfg, const MesState& state,
                                  const std::vector<double>& x) {
  DispatchSchedule s(inst.horizon);
  const int n = inst.horizon.length();
  for (int f = 0; f < P2Layout::kNumFields; ++f) {
    auto& out = s.field(DispatchSchedule::kFields[f]);
    for (int k = 0; k < n; ++k) {
      const int c = inst.layout.column[f][k];
      out[k] = c >= 0 ? x[c] : 0.0;
    }
  }
  // Clean sign noise on nonnegative fields.
  for (int f = 1; f < P2Layout::kNumFields; ++f)
    for (auto& v : s.field(DispatchSchedule::kFields[f]))
      if (v < 0.0 && v > -1e-9) v = 0.0;
  if (cfg.ees)
    s.ees_energy = storage_trajectory(*cfg.ees, state.ees_energy_now, s.ees_charge, s.ees_discharge,
                                      inst.horizon.period_length_hours, cfg.per_period_self_discharge);
  if (cfg.tes)
    s.tes_energy = storage_trajectory(*cfg.tes, state.tes_energy_now, s.tes_charge, s.tes_discharge,
                                      inst.horizon.period_length_hours, cfg.per_period_self_discharge);
  return s;
}

double schedule_cost(const DispatchSchedule& sched, const PriceVector& prices) {
  const double dt = sched.horizon.period_length_hours;
  double cost = 0.0;
  for (int k = 0; k < sched.length(); ++k) {
    const int t = sched.horizon.start_period + k;
    cost += 1000.0 * dt * (prices.at(t) * sched.grid_exchange[k] +
                           prices.gas_per_kwh * (sched.gas_chp[k] + sched.gas_furnace[k]));
  }
  return cost;
}

namespace {

MesSolution finish(const P2Instance& inst, const MesConfig& cfg, const MesState& state, const PriceVector& prices,
                   const lp::LpSolution& sol) {
  MesSolution out;
  out.status = sol.status;
  out.iterations = sol.iterations;
  out.phase1_infeasibility = sol.phase1_infeasibility;
  out.schedule = DispatchSchedule(inst.horizon);
  if (sol.optimal()) {
    out.schedule = extract_schedule(inst, cfg, state, sol.x);
    out.cost = schedule_cost(out.schedule, prices);
  }
  return out;
}

}  // namespace

MesSolution solve_autonomous(const MesConfig& cfg, const MesState& state, const PriceVector& prices,
                             const HorizonSpec& horizon, const lp::ToleranceSet& tol, const P2Options& options) {
  const auto inst = build_p2(cfg, state, prices, horizon, options);
  return finish(inst, cfg, state, prices, lp::solve_simplex(inst.lp, tol));
}

std::vector<double> bid(const MesConfig& cfg, const MesState& state, const PriceVector& prices,
                        const HorizonSpec& horizon) {
  const auto sol = solve_autonomous(cfg, state, prices, horizon);
  if (!sol.ok())
    throw MesError(fmt::format("MES {} subproblem {} at period {}", cfg.id, lp::to_string(sol.status),
                               horizon.start_period),
                   cfg.id, horizon.start_period, sol.phase1_infeasibility);
  return sol.schedule.grid_exchange;
}

MesAgent::MesAgent(const MesConfig& cfg, const MesState& state, const PriceVector& prices,
                   const HorizonSpec& horizon, const lp::ToleranceSet& tol, const P2Options& options)
    : cfg_(cfg),
      state_(state),
      prices_(prices),
      inst_(build_p2(cfg, state, prices, horizon, options)),
      solver_(inst_.lp, tol) {}

void MesAgent::update_objective() {
  const double dt = inst_.horizon.period_length_hours;
  const auto& cols = inst_.layout.column[kGrid];
  for (std::size_t k = 0; k < cols.size(); ++k) {
    const double c = prices_.elec[k] * dt;
    inst_.lp.objective[cols[k]] = c;
    solver_.set_objective_coefficient(cols[k], c);
  }
}

const MesSolution& MesAgent::run() {
  auto sol = solver_.solve();
  if (sol.status == lp::LpStatus::IterationLimit) {
    solver_ = lp::SimplexSolver(inst_.lp);
    sol = solver_.solve();
  }
  last_ = finish(inst_, cfg_, state_, prices_, sol);
  return last_;
}

const MesSolution& MesAgent::solve(const std::vector<double>& elec_prices) {
  if (elec_prices.size() != prices_.elec.size()) throw MesError("price vector length mismatch", cfg_.id);
  prices_.elec = elec_prices;
  update_objective();
  return run();
}

const MesSolution& MesAgent::solve_with_price(int period, double price) {
  prices_.at(period) = price;
  update_objective();
  return run();
}

}  // namespace imes
