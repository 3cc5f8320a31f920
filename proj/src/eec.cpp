#include "imes/eec.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include <fmt/format.h>

namespace imes {

StoragePair eec_transform(double p_ch, double p_dch, double eta_ch, double eta_dch, double dt) {
  if (p_ch < 0.0 || p_dch < 0.0) throw std::invalid_argument("eec_transform: negative power");
  if (!(eta_ch > 0.0 && eta_ch <= 1.0 && eta_dch > 0.0 && eta_dch <= 1.0))
    throw std::invalid_argument("eec_transform: efficiency outside (0, 1]");
  if (!(dt > 0.0)) throw std::invalid_argument("eec_transform: non-positive period length");
  if (p_ch == 0.0 || p_dch == 0.0) return {p_ch, p_dch};
  const double delta_e = dt * (p_ch * eta_ch - p_dch / eta_dch);
  if (delta_e >= 0.0) return {delta_e / (eta_ch * dt), 0.0};
  return {0.0, -delta_e * eta_dch / dt};
}

double net_discharge_delta(double p_ch, double p_dch, double eta_ch, double eta_dch) {
  const double delta_e = p_ch * eta_ch - p_dch / eta_dch;
  if (delta_e >= 0.0) return (1.0 / (eta_ch * eta_dch) - 1.0) * p_dch;
  return (1.0 - eta_ch * eta_dch) * p_ch;
}

std::vector<bool> check_theorem2_condition(const DispatchSchedule& sched, const MesConfig& cfg) {
  std::vector<bool> ok(sched.length(), true);
  if (!cfg.ees) return ok;
  const double eta = cfg.ees->eff_charge * cfg.ees->eff_discharge;
  for (int k = 0; k < sched.length(); ++k) {
    const int t = sched.horizon.start_period + k;
    const double res = cfg.profiles.res_output.at(t - 1);
    const double lhs = (res - sched.res_curtail[k]) / (1.0 - eta);
    const double rhs = std::min(sched.ees_charge[k], sched.ees_discharge[k] / eta);
    ok[k] = lhs >= rhs;
  }
  return ok;
}

EecResult apply_eec(const DispatchSchedule& sched, const MesConfig& cfg, const MesState* state) {
  EecResult out{sched, {}};
  auto& s = out.schedule;
  auto& rep = out.report;
  const double dt = sched.horizon.period_length_hours;
  const auto t2 = check_theorem2_condition(sched, cfg);
  const MesState st = state ? *state : initial_state(cfg);

  for (int k = 0; k < sched.length(); ++k) {
    if (sched.res_curtail[k] > kSimultaneityThreshold) rep.theorem1_precondition_held = false;
    if (!t2[k]) rep.theorem2_condition_held = false;
  }

  auto process = [&](const StorageParams& p, const char* name, std::vector<double>& ch, std::vector<double>& dch,
                     std::vector<double>& curt, bool electric) {
    for (int k = 0; k < sched.length(); ++k) {
      const int t = sched.horizon.start_period + k;
      EecPeriodRecord rec;
      rec.period = t;
      rec.storage = name;
      rec.pre_charge = ch[k];
      rec.pre_discharge = dch[k];
      rec.delta_energy = dt * (ch[k] * p.eff_charge - dch[k] / p.eff_discharge);
      rec.curtail_pre = curt[k];
      rec.simultaneous_pre = std::min(ch[k], dch[k]) > kSimultaneityThreshold;
      rec.theorem2_condition = electric ? static_cast<bool>(t2[k]) : true;
      if (rec.simultaneous_pre) rep.complementarity_violated_pre = true;
      const auto pair = eec_transform(std::max(0.0, ch[k]), std::max(0.0, dch[k]), p.eff_charge, p.eff_discharge, dt);
      rec.delta_discharge = (pair.discharge - pair.charge) - (dch[k] - ch[k]);
      ch[k] = pair.charge;
      dch[k] = pair.discharge;
      curt[k] += rec.delta_discharge;
      rec.post_charge = ch[k];
      rec.post_discharge = dch[k];
      rec.curtail_post = curt[k];
      if (electric && curt[k] > cfg.profiles.res_output.at(t - 1) + kSimultaneityThreshold) {
        rec.curtail_exceeds_available = true;
        rep.curtailment_overflow = true;
      }
      if (ch[k] * dch[k] != 0.0) rep.complementarity_satisfied_post = false;
      rep.rows.push_back(rec);
    }
  };
  if (cfg.ees) {
    process(*cfg.ees, "ees", s.ees_charge, s.ees_discharge, s.res_curtail, true);
    s.ees_energy = storage_trajectory(*cfg.ees, st.ees_energy_now, s.ees_charge, s.ees_discharge, dt,
                                      cfg.per_period_self_discharge);
  }
  if (cfg.tes) {
    process(*cfg.tes, "tes", s.tes_charge, s.tes_discharge, s.heat_curtail, false);
    s.tes_energy = storage_trajectory(*cfg.tes, st.tes_energy_now, s.tes_charge, s.tes_discharge, dt,
                                      cfg.per_period_self_discharge);
  }
  return out;
}

void write_eec_csv(const EecReport& report, std::ostream& out) {
  out << "period,storage,pre_charge_MW,pre_discharge_MW,post_charge_MW,post_discharge_MW,delta_energy_MWh,"
         "delta_discharge_MW,curtail_pre_MW,curtail_post_MW,simultaneous_pre,theorem2_condition,"
         "curtail_exceeds_available\n";
  for (const auto& r : report.rows) {
    out << fmt::format("{},{},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},{},{},{}\n", r.period,
                       r.storage, r.pre_charge, r.pre_discharge, r.post_charge, r.post_discharge, r.delta_energy,
                       r.delta_discharge, r.curtail_pre, r.curtail_post, int(r.simultaneous_pre),
                       int(r.theorem2_condition), int(r.curtail_exceeds_available));
  }
}

P1Result p1_oracle(const MesConfig& cfg, const MesState& state, const PriceVector& prices,
                   const HorizonSpec& horizon) {
  const int n = horizon.length();
  if (n > kP1OracleMaxPeriods)
    throw MesError(fmt::format("p1_oracle: horizon of {} periods exceeds guard {}", n, kP1OracleMaxPeriods), cfg.id);
  const int ees_bits = cfg.ees ? n : 0;
  const int tes_bits = cfg.tes ? n : 0;
  const long total = 1L << (ees_bits + tes_bits);

  P1Result best;
  bool found = false;
  P2Options opt;
  for (long code = 0; code < total; ++code) {
    opt.ees_mode.assign(n, 0);
    opt.tes_mode.assign(n, 0);
    for (int k = 0; k < ees_bits; ++k) opt.ees_mode[k] = (code >> k) & 1 ? 2 : 1;
    for (int k = 0; k < tes_bits; ++k) opt.tes_mode[k] = (code >> (ees_bits + k)) & 1 ? 2 : 1;
    const auto inst = build_p2(cfg, state, prices, horizon, opt);
    const auto sol = lp::solve_simplex(inst.lp);
    ++best.branches;
    if (!sol.optimal()) continue;
    ++best.feasible_branches;
    auto sched = extract_schedule(inst, cfg, state, sol.x);
    const double cost = schedule_cost(sched, prices);
    if (!found || cost < best.cost) {
      best.cost = cost;
      best.schedule = std::move(sched);
      found = true;
    }
  }
  if (!found) throw MesError("p1_oracle: every mode assignment is infeasible", cfg.id, horizon.start_period);
  return best;
}

}  // namespace imes
