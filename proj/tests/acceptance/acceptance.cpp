// Acceptance checks. One PASS/FAIL line per criterion; exit status is the
// number of failed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "imes/eec.hpp"
#include "imes/lp.hpp"
#include "imes/sim_harness.hpp"

using namespace imes;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string name;
  double limit_seconds;
  std::function<Outcome()> run;
};

std::string csv_of(const SimRun& r) {
  std::ostringstream out;
  write_clearing_csv(r, out);
  for (const auto& s : r.schedules) write_schedule_csv(s, out);
  return out.str();
}

// Collapses a 24-period MES onto `block`-hour periods.
MesConfig aggregate(const MesConfig& cfg, int block) {
  MesConfig m = cfg;
  const int n = kPeriodsPerDay / block;
  for (auto [src, dst] : {std::pair{&cfg.profiles.elec_load, &m.profiles.elec_load},
                          std::pair{&cfg.profiles.heat_load, &m.profiles.heat_load},
                          std::pair{&cfg.profiles.res_output, &m.profiles.res_output}}) {
    dst->assign(n, 0.0);
    for (int k = 0; k < kPeriodsPerDay; ++k) (*dst)[k / block] += (*src)[k] / block;
  }
  for (auto* sh : {&m.shiftable_elec, &m.shiftable_heat}) {
    std::vector<int> w;
    for (int t : sh->window) {
      const int b = (t - 1) / block + 1;
      if (w.empty() || w.back() != b) w.push_back(b);
    }
    sh->window = w;
    sh->total_energy = std::min(sh->total_energy, 0.9 * sh->per_period_max * block * static_cast<double>(w.size()));
  }
  return m;
}

std::vector<double> aggregate_series(const std::vector<double>& v, int block) {
  std::vector<double> out(v.size() / block, 0.0);
  for (std::size_t k = 0; k < v.size(); ++k) out[k / block] += v[k] / block;
  return out;
}

PriceVector slice_prices(const GridParams& g, const HorizonSpec& h) { return rtp_prices(g, h); }

// ---------------------------------------------------------------------------

// TES round-trip losses dispose of heat at zero cost, exactly like heat
// curtailment, so TES exclusivity is only checked where no heat is curtailed.
Outcome relaxation_exactness() {
  int problems = 0, periods = 0, ees_checked = 0, tes_checked = 0, tes_out_of_scope = 0;
  double worst_ees = 0.0, worst_tes = 0.0;
  std::string first_bad;
  const HorizonSpec h;
  auto note = [&](double c, double& worst, const char* what, std::uint64_t seed, int id, int k) {
    worst = std::max(worst, c);
    if (c > 1e-10 && first_bad.empty()) first_bad = fmt::format(", first {} at seed {} MES {} period {}", what, seed, id, k + 1);
  };
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const auto s = random_case(3, seed);
    for (auto m : s.mes) {
      m.line_import_max = m.line_export_max = 1e3;
      const auto sol = solve_autonomous(m, initial_state(m), slice_prices(s.grid, h), h);
      if (!sol.ok()) return {false, fmt::format("seed {} MES {}: P2 {}", seed, m.id, lp::to_string(sol.status))};
      ++problems;
      const auto& d = sol.schedule;
      for (int k = 0; k < d.length(); ++k)
        if (d.res_curtail[k] > 1e-9)
          return {false, fmt::format("seed {} MES {}: curtailment {:.3g} at period {} with unlimited line", seed,
                                     m.id, d.res_curtail[k], k + 1)};
      const bool heat_dumped =
          std::any_of(d.heat_curtail.begin(), d.heat_curtail.end(), [](double x) { return x > 1e-9; });
      ees_checked += m.ees ? 1 : 0;
      if (m.tes) heat_dumped ? ++tes_out_of_scope : ++tes_checked;
      for (int k = 0; k < d.length(); ++k) {
        ++periods;
        note(std::min(d.ees_charge[k], d.ees_discharge[k]), worst_ees, "EES", seed, m.id, k);
        if (!heat_dumped) note(std::min(d.tes_charge[k], d.tes_discharge[k]), worst_tes, "TES", seed, m.id, k);
      }
    }
  }
  return {std::max(worst_ees, worst_tes) <= 1e-10,
          fmt::format("{} P2 optima, {} periods, no RES curtailment; EES in {} optima max min(P_ch, P_dch) = {:.3g}; "
                      "TES in {} optima without heat curtailment max {:.3g} ({} TES optima curtail heat){}",
                      problems, periods, ees_checked, worst_ees, tes_checked, worst_tes, tes_out_of_scope, first_bad)};
}

Outcome eec_equivalence() {
  int cases = 0;
  double worst = 0.0;
  int simultaneous = 0;
  const int block = 4;
  const int n = kPeriodsPerDay / block;
  const HorizonSpec h{static_cast<double>(block), 1, n, n};
  for (std::uint64_t seed = 1; cases < 20 && seed < 500; ++seed) {
    const auto s = random_case(2, 1000 + seed);
    const auto it = std::find_if(s.mes.begin(), s.mes.end(), [](const MesConfig& m) { return m.ees.has_value(); });
    if (it == s.mes.end()) continue;
    auto m = aggregate(*it, block);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int k = 0; k < n; ++k) m.profiles.res_output[k] = m.profiles.elec_load[k] + 1.0 + 2.0 * u(rng);
    m.line_export_max = 0.3;
    m.line_import_max = std::max(m.line_import_max, 3.0);
    GridParams g = s.grid;
    g.rtp_price = aggregate_series(s.grid.rtp_price, block);
    g.shared_res = aggregate_series(s.grid.shared_res, block);
    const auto p = slice_prices(g, h);
    const auto relaxed = solve_autonomous(m, initial_state(m), p, h);
    if (!relaxed.ok()) return {false, fmt::format("seed {}: P2 {}", seed, lp::to_string(relaxed.status))};
    const auto r = apply_eec(relaxed.schedule, m);
    if (!r.report.theorem2_condition_held)
      return {false, fmt::format("seed {}: remaining-RES condition fails in some period", seed)};
    if (r.report.complementarity_violated_pre) ++simultaneous;
    if (!r.report.complementarity_satisfied_post) return {false, fmt::format("seed {}: EEC output not exclusive", seed)};
    const auto oracle = p1_oracle(m, initial_state(m), p, h);
    const double eec_cost = schedule_cost(r.schedule, p);
    const double rel = std::abs(eec_cost - oracle.cost) / std::max(1.0, std::abs(oracle.cost));
    worst = std::max(worst, rel);
    ++cases;
  }
  return {cases == 20 && worst <= 1e-6,
          fmt::format("{} wind-rich {}-period cases ({} simultaneous before EEC), condition certified every period, "
                      "max relative cost gap {:.3g}",
                      cases, n, simultaneous, worst)};
}

struct SignCheck {
  int import_periods = 0;
  int export_periods = 0;
  int import_bad = 0;
  int export_bad = 0;
  double worst_export = -1e300;  ///< max (lambda_e - sell reference) over export-congested periods

  void add(const SimRun& r, const GridParams& g) {
    for (const auto& p : r.periods) {
      const auto& c = p.record;
      if (c.import_congested) {
        ++import_periods;
        if (c.lambda_e < c.mu_e) ++import_bad;
      }
      if (c.export_congested && r.mode == Mode::CAFIL) {
        ++export_periods;
        const double ref = sell_reference(r.mode, c.mu_e, g.feed_in_price);
        worst_export = std::max(worst_export, c.lambda_e - ref);
        if (c.lambda_e > ref) ++export_bad;
      }
    }
  }
};

SignCheck g_signs;
std::string g_c3_csv, g_c5_csv;

Outcome protocol_gap() {
  const auto s = random_case(15, 7);
  const auto c = compare_protocols(s, 7);
  g_signs.add(c.sg_rtc, s.grid);
  g_signs.add(c.two_stage, s.grid);
  std::ostringstream out;
  write_compare_csv(c, out);
  g_c3_csv = out.str() + csv_of(c.sg_rtc) + csv_of(c.two_stage);
  return {c.gap <= 0.005,
          fmt::format("15 MES: SG-RTC {:.2f} yuan, 2S-TC {:.2f} yuan, gap {:.4f}% ({} congested 2S-TC clearings)",
                      c.sg_rtc.total_cost, c.two_stage.total_cost, 100.0 * c.gap, c.ts_stats.congested)};
}

Outcome scalability() {
  const int cap = bisection_iteration_cap(CoordinatorConfig{});
  std::vector<int> maxima;
  std::string detail;
  bool ok = cap == 12;
  for (int n : {20, 50, 100}) {
    const auto s = random_case(n, 7);
    const auto c = compare_protocols(s, 7);
    g_signs.add(c.sg_rtc, s.grid);
    g_signs.add(c.two_stage, s.grid);
    maxima.push_back(c.ts_stats.max);
    const bool ratio = c.ts_stats.congested > 0 && c.sg_stats.avg >= 5.0 * c.ts_stats.avg;
    ok = ok && c.ts_stats.max <= cap && ratio;
    detail += fmt::format("N={}: 2S-TC max {} avg {:.2f} ({} congested), SG-RTC avg {:.1f}; ", n, c.ts_stats.max,
                          c.ts_stats.avg, c.ts_stats.congested, c.sg_stats.avg);
  }
  const int spread = *std::max_element(maxima.begin(), maxima.end()) - *std::min_element(maxima.begin(), maxima.end());
  ok = ok && spread <= 2;
  return {ok, detail + fmt::format("cap {}, spread of 2S-TC max {}", cap, spread)};
}

Outcome congestion_protection() {
  const auto s = case_two();
  const std::uint64_t seed = 1;
  const auto nca = run_day(s, Mode::NCA, Protocol::TwoStage, seed);
  const auto ca = run_day(s, Mode::CA, Protocol::TwoStage, seed);
  const auto fil = run_day(s, Mode::CAFIL, Protocol::TwoStage, seed);
  g_signs.add(ca, s.grid);
  g_signs.add(fil, s.grid);
  g_c5_csv = csv_of(nca) + csv_of(ca) + csv_of(fil);
  const bool ok = nca.violations >= 1 && ca.violations == 0 && fil.violations == 0 &&
                  std::abs(fil.accommodation() - 1.0) <= 1e-12 && nca.accommodation() <= fil.accommodation();
  return {ok, fmt::format("violations NCA {} CA {} CA-FIL {}; RES accommodation NCA {:.4f}% CA {:.4f}% CA-FIL {:.4f}%",
                          nca.violations, ca.violations, fil.violations, 100.0 * nca.accommodation(),
                          100.0 * ca.accommodation(), 100.0 * fil.accommodation())};
}

Outcome price_direction() {
  const auto& g = g_signs;
  const bool ok = g.import_bad == 0 && g.export_bad == 0;
  std::string detail = fmt::format("import-congested {} (λ_e < μ_e in {}), CA-FIL export-congested {} (λ_e above the "
                                   "feed-in reference in {}",
                                   g.import_periods, g.import_bad, g.export_periods, g.export_bad);
  if (g.export_periods > 0) detail += fmt::format(", worst excess {:.4f} yuan/kWh", g.worst_export);
  return {ok, detail + ")"};
}

lp::LinearProgram random_lp(std::mt19937_64& rng) {
  using namespace lp;
  std::uniform_int_distribution<int> coef(-5, 5);
  std::uniform_int_distribution<int> nvar(1, 4);
  std::uniform_int_distribution<int> nrow(1, 4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  LinearProgram p;
  const int n = nvar(rng);
  std::vector<double> anchor(n);
  int std_cols = 0;
  for (int j = 0; j < n; ++j) {
    const double kind = u(rng);
    double lo = 0.0, hi = kInf;
    if (kind < 0.5) {
      std_cols += 1;
    } else if (kind < 0.75) {
      lo = coef(rng) % 3;
      hi = lo + 1 + std::abs(coef(rng));
      std_cols += 2;
    } else {
      lo = -kInf;
      std_cols += 2;
    }
    anchor[j] = std::isfinite(lo) ? lo + (std::isfinite(hi) ? std::floor(u(rng) * (hi - lo)) : std::abs(coef(rng)))
                                  : coef(rng);
    p.add_column(coef(rng), lo, hi, {0, "x", j});
  }
  const int m = nrow(rng);
  for (int i = 0; i < m; ++i) {
    std::vector<int> a(n);
    double act = 0.0;
    for (int j = 0; j < n; ++j) {
      a[j] = u(rng) < 0.75 ? coef(rng) : 0;
      act += a[j] * anchor[j];
    }
    const double kind = u(rng);
    RowSense sense = kind < 0.4 ? RowSense::LessEqual : kind < 0.75 ? RowSense::GreaterEqual : RowSense::Equal;
    if (sense != RowSense::Equal && std_cols >= 12) sense = RowSense::Equal;
    if (sense != RowSense::Equal) ++std_cols;
    const bool feasible = u(rng) < 0.85;
    const double slack = std::abs(coef(rng)) % 3;
    double rhs = feasible ? act : coef(rng);
    if (feasible && sense == RowSense::LessEqual) rhs += slack;
    if (feasible && sense == RowSense::GreaterEqual) rhs -= slack;
    const int r = p.add_row(sense, rhs, "r" + std::to_string(i));
    for (int j = 0; j < n; ++j) p.add_entry(r, j, a[j]);
  }
  return p;
}

Outcome lp_kernel() {
  using namespace lp;
  std::mt19937_64 rng(20240501);
  int counts[4] = {0, 0, 0, 0};
  int mismatches = 0;
  double worst = 0.0;
  for (int i = 0; i < 500; ++i) {
    const auto p = random_lp(rng);
    const auto s = solve_simplex(p);
    const auto o = vertex_oracle(p);
    ++counts[static_cast<int>(o.status)];
    if (s.status != o.status) {
      ++mismatches;
      continue;
    }
    if (o.status == LpStatus::Optimal) worst = std::max(worst, std::abs(s.objective - o.objective));
  }
  // Beale's cycling example.
  LinearProgram b;
  b.add_column(-0.75, 0.0, kInf, {0, "x4", -1});
  b.add_column(150.0, 0.0, kInf, {0, "x5", -1});
  b.add_column(-0.02, 0.0, kInf, {0, "x6", -1});
  b.add_column(6.0, 0.0, kInf, {0, "x7", -1});
  const int r0 = b.add_row(RowSense::LessEqual, 0.0, "a");
  for (auto [c, v] : {std::pair{0, 0.25}, {1, -60.0}, {2, -0.04}, {3, 9.0}}) b.add_entry(r0, c, v);
  const int r1 = b.add_row(RowSense::LessEqual, 0.0, "b");
  for (auto [c, v] : {std::pair{0, 0.5}, {1, -90.0}, {2, -0.02}, {3, 3.0}}) b.add_entry(r1, c, v);
  const int r2 = b.add_row(RowSense::LessEqual, 1.0, "c");
  b.add_entry(r2, 2, 1.0);
  ToleranceSet stall;
  stall.degenerate_stall = 1;
  const auto beale = solve_simplex(b, stall);
  const bool beale_ok = beale.status == LpStatus::Optimal && std::abs(beale.objective + 0.05) <= 1e-9;
  return {mismatches == 0 && worst <= 1e-8 && beale_ok,
          fmt::format("500 LPs ({} optimal, {} infeasible, {} unbounded): status mismatches {}, max objective error "
                      "{:.3g}; Beale example {} at {:.6f}",
                      counts[0], counts[1], counts[2], mismatches, worst, lp::to_string(beale.status),
                      beale.objective)};
}

Outcome strong_duality() {
  const int block = 4;
  const int n = kPeriodsPerDay / block;
  const HorizonSpec h{static_cast<double>(block), 1, n, n};
  const auto base = case_two();
  std::vector<MesConfig> mes;
  std::vector<MesState> states;
  for (const auto& m : base.mes) {
    mes.push_back(aggregate(m, block));
    states.push_back(initial_state(mes.back()));
  }
  GridParams g = base.grid;
  g.rtp_price = aggregate_series(base.grid.rtp_price, block);
  g.shared_res = aggregate_series(base.grid.shared_res, block);
  std::vector<double> net(n, 0.0);
  for (std::size_t i = 0; i < mes.size(); ++i) {
    const auto s = solve_autonomous(mes[i], states[i], rtp_prices(g, h), h);
    if (!s.ok()) return {false, fmt::format("MES {} P2 {}", mes[i].id, lp::to_string(s.status))};
    for (int k = 0; k < n; ++k) net[k] += s.schedule.grid_exchange[k];
  }
  double peak = 0.0;
  for (int k = 0; k < n; ++k) peak = std::max(peak, net[k] - g.shared_res[k]);
  g.transformer_import_max = g.transformer_export_max = 0.85 * peak;

  const auto c = solve_centralized(mes, states, g, h);
  if (c.status != lp::LpStatus::Optimal) return {false, fmt::format("centralized {}", lp::to_string(c.status))};
  CoordinatorConfig cfg;
  cfg.max_iterations = 400;
  std::vector<MesAgent> agents;
  for (std::size_t i = 0; i < mes.size(); ++i) agents.emplace_back(mes[i], states[i], rtp_prices(g, h), h);
  const auto sg = subgradient_clear(agents, g, h, Mode::CA, cfg);
  const double rel = std::abs(sg.best_dual_value - c.cost) / std::abs(c.cost);
  int binding = 0;
  for (double d : c.balance_duals) binding += std::abs(d) > 1e-9 ? 1 : 0;
  return {rel <= 0.005, fmt::format("centralized {:.2f} yuan, decomposed {:.2f} yuan after {} iterations, gap {:.4f}% "
                                    "({} periods with a binding transformer)",
                                    c.cost, sg.best_dual_value, sg.iterations, 100.0 * rel, binding)};
}

Outcome determinism() {
  const auto s3 = random_case(15, 7);
  const auto c = compare_protocols(s3, 7);
  std::ostringstream out;
  write_compare_csv(c, out);
  const std::string again3 = out.str() + csv_of(c.sg_rtc) + csv_of(c.two_stage);
  const auto s5 = case_two();
  const std::string again5 = csv_of(run_day(s5, Mode::NCA, Protocol::TwoStage, 1)) +
                             csv_of(run_day(s5, Mode::CA, Protocol::TwoStage, 1)) +
                             csv_of(run_day(s5, Mode::CAFIL, Protocol::TwoStage, 1));
  const bool ok = !g_c3_csv.empty() && !g_c5_csv.empty() && again3 == g_c3_csv && again5 == g_c5_csv;
  return {ok, fmt::format("criterion 3 outputs {} bytes {}, criterion 5 outputs {} bytes {}", again3.size(),
                          again3 == g_c3_csv ? "identical" : "DIFFER", again5.size(),
                          again5 == g_c5_csv ? "identical" : "DIFFER")};
}

}  // namespace

int main() {
  // Criterion 6 aggregates over the runs of 3 to 5, so it is evaluated after them.
  const std::vector<Criterion> criteria = {
      {1, "relaxation exactness", 120.0, relaxation_exactness},
      {2, "EEC equivalence", 300.0, eec_equivalence},
      {3, "protocol cost gap", 600.0, protocol_gap},
      {4, "scalability", 1800.0, scalability},
      {5, "congestion protection", 120.0, congestion_protection},
      {6, "price-signal direction", 1e9, price_direction},
      {7, "LP kernel", 60.0, lp_kernel},
      {8, "strong duality", 60.0, strong_duality},
      {9, "determinism", 1e9, determinism},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, fmt::format("exception: {}", e.what())};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs <= c.limit_seconds;
    const bool pass = o.pass && in_time;
    if (!pass) ++failed;
    const std::string limit = c.limit_seconds < 1e8 ? fmt::format(", limit {:.0f} s", c.limit_seconds) : "";
    fmt::print("[{}] criterion {} {}: {} ({:.1f} s{}){}\n", pass ? "PASS" : "FAIL", c.id, c.name, o.detail, secs, limit,
               in_time ? "" : " over time limit");
    std::fflush(stdout);
  }
  fmt::print("{} of {} criteria passed\n", criteria.size() - failed, criteria.size());
  return failed;
}
