#include "imes/sim_harness.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <random>

#include <fmt/format.h>
#include <json.hpp>

#include "imes/parallel.hpp"

namespace imes {

namespace {

std::uint64_t mix(std::uint64_t h, std::uint64_t v) {
  h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  h += 0x9e3779b97f4a7c15ULL;
  h = (h ^ (h >> 30)) * 0xbf58476d1ce4e5b9ULL;
  h = (h ^ (h >> 27)) * 0x94d049bb133111ebULL;
  return h ^ (h >> 31);
}

constexpr int kSharedOwner = -1;

}  // namespace

double forecast_error(std::uint64_t seed, ForecastStage stage, int period, int t, int owner, ForecastSeries series,
                      double bound) {
  if (!(bound > 0.0)) return 0.0;
  std::uint64_t key = mix(0x696d6573ULL, seed);
  key = mix(key, static_cast<std::uint64_t>(stage));
  key = mix(key, static_cast<std::uint64_t>(period));
  key = mix(key, static_cast<std::uint64_t>(t));
  key = mix(key, static_cast<std::uint64_t>(static_cast<std::int64_t>(owner)));
  key = mix(key, static_cast<std::uint64_t>(series));
  std::mt19937_64 rng(key);
  std::normal_distribution<double> normal(0.0, bound / 3.0);
  for (;;) {
    const double e = normal(rng);
    if (std::abs(e) <= bound) return e;
  }
}

Profiles refresh_forecasts(const Profiles& truth, ForecastStage stage, std::uint64_t seed, int period, int owner,
                           const ForecastBounds& bounds) {
  const int s = static_cast<int>(stage);
  Profiles f = truth;
  for (int k = 0; k < truth.size(); ++k) {
    const int t = k + 1;
    f.elec_load[k] *= 1.0 + forecast_error(seed, stage, period, t, owner, ForecastSeries::ElecLoad, bounds.load[s]);
    f.heat_load[k] *= 1.0 + forecast_error(seed, stage, period, t, owner, ForecastSeries::HeatLoad, bounds.load[s]);
    f.res_output[k] *= 1.0 + forecast_error(seed, stage, period, t, owner, ForecastSeries::Res, bounds.res[s]);
  }
  return f;
}

Profiles rolling_forecast(const Profiles& truth, std::uint64_t seed, int t_c, int owner, const ForecastBounds& bounds) {
  const auto rt = refresh_forecasts(truth, ForecastStage::RealTime, seed, t_c, owner, bounds);
  const auto id = refresh_forecasts(truth, ForecastStage::IntraDay, seed, t_c, owner, bounds);
  Profiles f = truth;
  for (int k = t_c - 1; k < truth.size(); ++k) {
    const auto& src = k == t_c - 1 ? rt : id;
    f.elec_load[k] = src.elec_load[k];
    f.heat_load[k] = src.heat_load[k];
    f.res_output[k] = src.res_output[k];
  }
  return f;
}

std::string_view to_string(MessageKind k) {
  switch (k) {
    case MessageKind::PriceBroadcast: return "PriceBroadcast";
    case MessageKind::PriceVectorBroadcast: return "PriceVectorBroadcast";
    case MessageKind::Bid: return "Bid";
    case MessageKind::TransformerBid: return "TransformerBid";
    case MessageKind::Commit: return "Commit";
  }
  return "?";
}

std::vector<int> SimRun::congested_iterations() const {
  std::vector<int> out;
  for (const auto& p : periods)
    if (p.record.iterations > 1) out.push_back(p.record.iterations);
  return out;
}

IterationStats iteration_stats(const SimRun& run) {
  IterationStats s;
  const auto it = run.congested_iterations();
  for (int v : it) {
    s.max = std::max(s.max, v);
    s.avg += v;
  }
  s.congested = static_cast<int>(it.size());
  if (!it.empty()) s.avg /= static_cast<double>(it.size());
  return s;
}

namespace {

void commit_slice(DispatchSchedule& day, const DispatchSchedule& sol, int t) {
  for (auto name : DispatchSchedule::kFields) day.field(name)[t - 1] = sol.field(name).at(0);
}

void advance_state(MesState& st, const MesConfig& cfg, const DispatchSchedule& sol, double dt) {
  if (cfg.ees) st.ees_energy_now = sol.ees_energy[0];
  if (cfg.tes) st.tes_energy_now = sol.tes_energy[0];
  if (cfg.chp) st.prev_chp_power = sol.gas_chp[0] * cfg.chp->eff_gas_to_elec;
  if (cfg.boiler) st.prev_boiler_power = sol.boiler_power[0];
  st.shiftable_elec_served += sol.shiftable_elec[0] * dt;
  st.shiftable_heat_served += sol.shiftable_heat[0] * dt;
}

void log_clearing(SimRun& run, const ClearingRecord& rec, const std::vector<ClearingIteration>& vector_trace, int n_mes,
                  const std::vector<int>& ids, bool vector_broadcast) {
  const int t = rec.period;
  for (int r = 1; r <= rec.iterations; ++r) {
    SimMessage b;
    b.period = t;
    b.round = r;
    if (vector_broadcast) {
      b.kind = MessageKind::PriceVectorBroadcast;
      for (const auto& it : vector_trace)
        if (it.iteration == r) b.payload.push_back(it.lambda_e);
    } else {
      b.kind = MessageKind::PriceBroadcast;
      for (const auto& it : rec.trace)
        if (it.iteration == r) b.payload.push_back(it.lambda_e);
    }
    run.log.push_back(std::move(b));
    for (int i = 0; i < n_mes; ++i) {
      SimMessage m{MessageKind::Bid, ids[i], kCoordinatorId, t, {}, r};
      if (r == rec.iterations) m.payload.push_back(rec.bids[i]);
      run.log.push_back(std::move(m));
    }
    SimMessage tr{MessageKind::TransformerBid, kTransformerId, kCoordinatorId, t, {}, r};
    for (const auto& it : rec.trace)
      if (it.iteration == r) tr.payload.push_back(it.transformer);
    run.log.push_back(std::move(tr));
  }
  run.log.push_back({MessageKind::Commit, kCoordinatorId, kBroadcastId, t, rec.bids, rec.iterations + 1});
}

}  // namespace

SimRun run_day(const Scenario& scenario, Mode mode, Protocol protocol, std::uint64_t seed, const SimOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  const int n = static_cast<int>(scenario.mes.size());
  const int days = kPeriodsPerDay;
  const GridParams& grid = scenario.grid;
  const double dt = 24.0 / static_cast<double>(grid.rtp_price.size());
  const double mu_g = grid.gas_price_per_kwh();
  CoordinatorConfig cfg = options.coordinator;
  if (options.coordinator_from_grid) {
    cfg.price_floor = grid.price_floor;
    cfg.price_ceiling = grid.price_ceiling;
  }
  const TransformerLimits lim{grid.transformer_import_max, grid.transformer_export_max};

  SimRun run;
  run.scenario_id = scenario.id;
  run.mode = mode;
  run.protocol = protocol;
  run.seed = seed;
  run.cost_rtp.assign(n, 0.0);
  run.cost_local.assign(n, 0.0);
  std::vector<int> ids;
  for (const auto& m : scenario.mes) {
    ids.push_back(m.id);
    run.schedules.emplace_back(HorizonSpec{dt, 1, days, days});
    run.final_states.push_back(initial_state(m));
  }
  auto& states = run.final_states;

  Profiles shared_truth;
  shared_truth.res_output = grid.shared_res;
  shared_truth.elec_load.assign(grid.shared_res.size(), 0.0);
  shared_truth.heat_load.assign(grid.shared_res.size(), 0.0);

  PriceVector day_ahead;
  P2Options p2opt;
  p2opt.planning_reserve = options.planning_reserve;
  const bool two_stage = protocol == Protocol::TwoStage && mode != Mode::NCA;
  if (two_stage) {
    std::vector<MesConfig> cfgs = scenario.mes;
    for (auto& c : cfgs) c.profiles = refresh_forecasts(c.profiles, ForecastStage::DayAhead, seed, 0, c.id, options.forecast);
    GridParams g = grid;
    g.shared_res =
        refresh_forecasts(shared_truth, ForecastStage::DayAhead, seed, 0, kSharedOwner, options.forecast).res_output;
    const HorizonSpec h{dt, 1, days, days};
    std::vector<MesAgent> agents;
    agents.reserve(n);
    for (int i = 0; i < n; ++i) agents.emplace_back(cfgs[i], states[i], rtp_prices(g, h), h);
    const auto da = subgradient_clear(agents, g, h, mode, cfg);
    day_ahead = da.prices;
    run.day_ahead_prices = da.prices.elec;
    run.day_ahead_iterations = da.iterations;
    run.day_ahead_converged = da.converged;
    run.day_ahead_messages.broadcasts = da.iterations + 1;
    run.day_ahead_messages.bids = static_cast<long>(da.iterations) * n;
  }

  for (int t = 1; t <= days; ++t) {
    const HorizonSpec h{dt, t, days, days};
    std::vector<MesConfig> cfgs = scenario.mes;
    for (auto& c : cfgs) c.profiles = rolling_forecast(c.profiles, seed, t, c.id, options.forecast);
    GridParams g = grid;
    g.shared_res = rolling_forecast(shared_truth, seed, t, kSharedOwner, options.forecast).res_output;
    const double mu = grid.rtp_price[t - 1];
    const double res = g.shared_res[t - 1];

    PeriodResult pr;
    std::vector<MesSolution> sols;
    if (mode == Mode::NCA) {
      sols.resize(n);
      parallel_for(n, [&](int i) { sols[i] = solve_autonomous(cfgs[i], states[i], rtp_prices(g, h), h, lp::ToleranceSet{}, p2opt); });
      for (int i = 0; i < n; ++i)
        if (!sols[i].ok())
          throw MesError(fmt::format("MES {} infeasible at period {} ({})", ids[i], t, lp::to_string(sols[i].status)),
                         ids[i], t, sols[i].phase1_infeasibility);
      auto& r = pr.record;
      r.period = t;
      r.lambda_e = r.mu_e = mu;
      r.shared_res = res;
      r.converged = true;
      for (const auto& s : sols) r.bids.push_back(s.schedule.grid_exchange[0]);
    } else {
      std::vector<MesAgent> agents;
      agents.reserve(n);
      for (int i = 0; i < n; ++i) agents.emplace_back(cfgs[i], states[i], rtp_prices(g, h), h, lp::ToleranceSet{}, p2opt);
      if (protocol == Protocol::SGRTC) {
        auto sg = subgradient_clear(agents, g, h, mode, cfg);
        pr.record = std::move(sg.records.front());
        sols = std::move(sg.solutions);
        if (options.record_messages) log_clearing(run, pr.record, sg.trace, n, ids, true);
      } else {
        auto bis = hourly_bisection_clear(agents, g, h, day_ahead, mode, cfg);
        pr.record = std::move(bis.record);
        sols = std::move(bis.solutions);
        if (options.record_messages) log_clearing(run, pr.record, {}, n, ids, false);
      }
      const long it = pr.record.iterations;
      pr.messages = it * (n + 1) + 1;
      run.messages.broadcasts += it;
      run.messages.bids += it * n;
      run.messages.commits += 1;
      run.messages.transformer_bids += it;
    }

    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
      const auto& s = sols[i].schedule;
      commit_slice(run.schedules[i], s, t);
      advance_state(states[i], cfgs[i], s, dt);
      const double gas = mu_g * (s.gas_chp[0] + s.gas_furnace[0]);
      run.cost_rtp[i] += 1000.0 * dt * (mu * s.grid_exchange[0] + gas);
      run.cost_local[i] += 1000.0 * dt * (pr.record.lambda_e * s.grid_exchange[0] + gas);
      run.res_available += dt * cfgs[i].profiles.res_output[t - 1];
      run.res_curtailed += dt * s.res_curtail[0];
      sum += s.grid_exchange[0];
    }
    run.res_available += dt * res;
    pr.transformer = sum - res;
    pr.violation = !within_limits(pr.transformer, lim, cfg.balance_threshold);
    if (pr.violation) ++run.violations;
    run.periods.push_back(std::move(pr));
  }
  for (double c : run.cost_rtp) run.total_cost += c;
  run.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return run;
}

ProtocolComparison compare_protocols(const Scenario& scenario, std::uint64_t seed, Mode mode,
                                     const SimOptions& options) {
  ProtocolComparison c;
  c.sg_rtc = run_day(scenario, mode, Protocol::SGRTC, seed, options);
  c.two_stage = run_day(scenario, mode, Protocol::TwoStage, seed, options);
  const double base = c.sg_rtc.total_cost;
  c.gap = base != 0.0 ? std::abs(c.two_stage.total_cost - base) / std::abs(base)
                      : std::abs(c.two_stage.total_cost);
  c.sg_stats = iteration_stats(c.sg_rtc);
  c.ts_stats = iteration_stats(c.two_stage);
  return c;
}

// ---------------------------------------------------------------------------
// Output

void write_clearing_csv(const SimRun& run, std::ostream& out) {
  out << "period,iteration,lambda_e_yuan_per_kWh,sum_bids_MW,transformer_MW,residual_MW,converged\n";
  for (const auto& p : run.periods) {
    const auto& r = p.record;
    if (r.trace.empty()) {
      double s = 0.0;
      for (double b : r.bids) s += b;
      out << fmt::format("{},0,{:.6f},{:.6f},{:.6f},{:.6f},{}\n", r.period, r.lambda_e, s, p.transformer, 0.0,
                         int(r.converged));
      continue;
    }
    for (const auto& it : r.trace)
      out << fmt::format("{},{},{:.6f},{:.6f},{:.6f},{:.6f},{}\n", it.period, it.iteration, it.lambda_e, it.sum_bids,
                         it.transformer, it.residual, int(it.converged));
  }
}

void write_schedule_csv(const DispatchSchedule& sched, std::ostream& out) {
  out << "period";
  for (auto name : DispatchSchedule::kFields)
    out << ',' << name << (name.ends_with("energy") ? "_MWh" : "_MW");
  out << '\n';
  for (int k = 0; k < sched.length(); ++k) {
    out << sched.horizon.start_period + k;
    for (auto name : DispatchSchedule::kFields) out << fmt::format(",{:.6f}", sched.field(name)[k]);
    out << '\n';
  }
}

void write_simrun_json(const SimRun& run, std::ostream& out) {
  nlohmann::ordered_json j;
  j["scenario_id"] = run.scenario_id;
  j["mode"] = to_string(run.mode);
  j["protocol"] = to_string(run.protocol);
  j["seed"] = run.seed;
  j["total_cost_yuan"] = run.total_cost;
  j["cost_rtp_yuan"] = run.cost_rtp;
  j["cost_local_yuan"] = run.cost_local;
  j["res_available_MWh"] = run.res_available;
  j["res_curtailed_MWh"] = run.res_curtailed;
  j["res_accommodation"] = run.accommodation();
  j["transformer_violations"] = run.violations;
  j["messages"] = {{"broadcasts", run.messages.broadcasts},
                   {"bids", run.messages.bids},
                   {"commits", run.messages.commits},
                   {"total", run.messages.total()},
                   {"transformer_bids", run.messages.transformer_bids}};
  j["day_ahead"] = {{"iterations", run.day_ahead_iterations},
                    {"converged", run.day_ahead_converged},
                    {"messages", run.day_ahead_messages.total()},
                    {"prices_yuan_per_kWh", run.day_ahead_prices}};
  const auto st = iteration_stats(run);
  j["iterations"] = {{"max_congested", st.max}, {"avg_congested", st.avg}, {"congested_clearings", st.congested}};
  auto& periods = j["periods"] = nlohmann::ordered_json::array();
  for (const auto& p : run.periods) {
    const auto& r = p.record;
    periods.push_back({{"period", r.period},
                       {"lambda_e", r.lambda_e},
                       {"mu_e", r.mu_e},
                       {"iterations", r.iterations},
                       {"transformer_MW", p.transformer},
                       {"shared_res_MW", r.shared_res},
                       {"residual_MW", r.residual},
                       {"converged", r.converged},
                       {"import_congested", r.import_congested},
                       {"export_congested", r.export_congested},
                       {"price_clamped", r.price_clamped},
                       {"anomaly", r.anomaly},
                       {"violation", p.violation},
                       {"messages", p.messages}});
  }
  j["wall_clock_seconds"] = run.wall_clock_seconds;
  out << j.dump(2) << '\n';
}

void write_compare_csv(const ProtocolComparison& cmp, std::ostream& out) {
  out << "item,sg_rtc,two_stage\n";
  for (std::size_t i = 0; i < cmp.sg_rtc.cost_rtp.size(); ++i)
    out << fmt::format("mes_{}_cost_yuan,{:.6f},{:.6f}\n", i + 1, cmp.sg_rtc.cost_rtp[i], cmp.two_stage.cost_rtp[i]);
  out << fmt::format("total_cost_yuan,{:.6f},{:.6f}\n", cmp.sg_rtc.total_cost, cmp.two_stage.total_cost);
  out << fmt::format("relative_gap,{:.6f},{:.6f}\n", 0.0, cmp.gap);
  out << fmt::format("max_iterations,{},{}\n", cmp.sg_stats.max, cmp.ts_stats.max);
  out << fmt::format("avg_iterations,{:.6f},{:.6f}\n", cmp.sg_stats.avg, cmp.ts_stats.avg);
  out << fmt::format("congested_clearings,{},{}\n", cmp.sg_stats.congested, cmp.ts_stats.congested);
  out << fmt::format("messages,{},{}\n", cmp.sg_rtc.messages.total(), cmp.two_stage.messages.total());
  out << fmt::format("transformer_violations,{},{}\n", cmp.sg_rtc.violations, cmp.two_stage.violations);
}

void write_run(const SimRun& run, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "simrun.json");
    write_simrun_json(run, out);
  }
  {
    std::ofstream out(dir / "clearing.csv");
    write_clearing_csv(run, out);
  }
  for (std::size_t i = 0; i < run.schedules.size(); ++i) {
    std::ofstream out(dir / fmt::format("schedule_{}.csv", i + 1));
    write_schedule_csv(run.schedules[i], out);
  }
}

}  // namespace imes
