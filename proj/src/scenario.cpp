#include "imes/scenario.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ranges.h>
#include <json.hpp>

#include "imes/mes_optimizer.hpp"
#include "imes/parallel.hpp"

namespace imes {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

double quantize(double v) {
  const double q = std::round(v * 1e6) / 1e6;
  return q == 0.0 ? 0.0 : q;
}

namespace {

constexpr int kDay = kPeriodsPerDay;

using Shape = std::array<double, kDay>;

constexpr Shape kResidentialElec = {0.45, 0.40, 0.38, 0.37, 0.38, 0.45, 0.60, 0.70, 0.60, 0.55, 0.55, 0.60,
                                    0.55, 0.50, 0.50, 0.55, 0.70, 0.85, 0.95, 1.00, 0.95, 0.80, 0.65, 0.50};
constexpr Shape kCommercialElec = {0.30, 0.30, 0.30, 0.30, 0.30, 0.32, 0.45, 0.70, 0.85, 0.95, 1.00, 0.95,
                                   0.98, 1.00, 0.95, 0.90, 0.80, 0.60, 0.50, 0.45, 0.40, 0.35, 0.30, 0.30};
constexpr Shape kResidentialHeat = {0.90, 0.95, 1.00, 1.00, 0.95, 0.90, 0.85, 0.80, 0.65, 0.60, 0.58, 0.56,
                                    0.55, 0.55, 0.56, 0.60, 0.65, 0.75, 0.80, 0.80, 0.80, 0.82, 0.85, 0.88};
constexpr Shape kCommercialHeat = {0.55, 0.55, 0.55, 0.55, 0.58, 0.65, 0.75, 0.90, 0.98, 1.00, 1.00, 0.95,
                                   0.92, 0.92, 0.95, 0.95, 0.90, 0.80, 0.70, 0.62, 0.58, 0.56, 0.55, 0.55};
constexpr Shape kRtpBase = {0.32, 0.30, 0.28, 0.27, 0.28, 0.32, 0.42, 0.55, 0.65, 0.70, 0.68, 0.62,
                            0.55, 0.52, 0.50, 0.52, 0.60, 0.72, 0.80, 0.82, 0.75, 0.62, 0.48, 0.38};

std::vector<double> jittered(const Shape& base, std::mt19937_64& rng, double amp) {
  std::uniform_real_distribution<double> u(1.0 - amp, 1.0 + amp);
  std::vector<double> out(base.begin(), base.end());
  for (auto& v : out) v *= u(rng);
  const double peak = *std::max_element(out.begin(), out.end());
  for (auto& v : out) v /= peak;
  return out;
}

double uniform(std::mt19937_64& rng, const double (&r)[2]) {
  return std::uniform_real_distribution<double>(r[0], r[1])(rng);
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

std::vector<int> window(int first, int last) {
  std::vector<int> w;
  for (int t = first; t <= last; ++t) w.push_back(t);
  return w;
}

StorageParams make_storage(double cap, double rate, double target_frac, const double (&bounds)[2], double eff,
                           double alpha) {
  StorageParams s;
  s.energy_min = quantize(bounds[0] * cap);
  s.energy_max = quantize(bounds[1] * cap);
  s.charge_power_max = s.discharge_power_max = quantize(rate * cap);
  s.eff_charge = s.eff_discharge = eff;
  s.self_discharge_rate = alpha;
  s.target_energy = quantize(std::clamp(target_frac * cap, s.energy_min, s.energy_max));
  s.initial_energy = s.target_energy;
  return s;
}

void quantize_profiles(Profiles& p) {
  for (auto* v : {&p.elec_load, &p.heat_load, &p.res_output})
    for (auto& x : *v) x = quantize(std::max(0.0, x));
}

Profiles scaled(const Profiles& p, double load, double res) {
  Profiles q = p;
  for (auto& x : q.elec_load) x *= load;
  for (auto& x : q.heat_load) x *= load;
  for (auto& x : q.res_output) x *= res;
  return q;
}

bool feasible_day(const MesConfig& cfg, const GridParams& grid) {
  const HorizonSpec h;
  const auto sol = solve_autonomous(cfg, initial_state(cfg), rtp_prices(grid, h), h);
  return sol.ok();
}

// Forecast stress used to floor line limits: the largest load and RES
// errors of the day-ahead stage in both directions.
bool feasible_under_stress(const MesConfig& cfg, const GridParams& grid) {
  for (auto [load, res] : {std::pair{1.2, 0.7}, std::pair{0.8, 1.3}, std::pair{1.0, 1.0}}) {
    MesConfig c = cfg;
    c.profiles = scaled(cfg.profiles, load, res);
    if (!feasible_day(c, grid)) return false;
  }
  return true;
}

MesConfig draw_mes(int id, std::mt19937_64& rng, const RandomCaseRanges& r, std::uint64_t profile_seed) {
  MesConfig m;
  m.id = id;
  m.per_period_self_discharge = true;
  const LoadKind kind = uniform(rng, 0.0, 1.0) < 0.6 ? LoadKind::Residential : LoadKind::Commercial;
  m.name = fmt::format("MES{}{}", id, kind == LoadKind::Residential ? "-res" : "-com");

  const double chp_cap = uniform(rng, r.chp_capacity);
  const double ratio = uniform(rng, r.chp_heat_to_elec);
  const double eta_ge = uniform(rng, r.chp_eff_elec);
  const double chp_min = uniform(rng, r.chp_min_frac);
  const double chp_ramp = uniform(rng, r.chp_ramp_frac);
  if (chp_cap >= r.absent_fraction * r.chp_capacity[1])
    m.chp = ChpParams{quantize(chp_cap), quantize(chp_min * chp_cap), quantize(eta_ge), quantize(ratio * eta_ge),
                      quantize(chp_ramp * chp_cap)};

  const double gf_cap = uniform(rng, r.furnace_capacity);
  const double gf_eff = uniform(rng, r.furnace_eff);
  if (gf_cap >= r.absent_fraction * r.furnace_capacity[1]) m.furnace = FurnaceParams{quantize(gf_cap), 0.0, quantize(gf_eff)};

  const double eb_cap = uniform(rng, r.boiler_capacity);
  if (eb_cap >= r.absent_fraction * r.boiler_capacity[1])
    m.boiler = BoilerParams{quantize(eb_cap), 0.0, r.boiler_eff, quantize(r.boiler_ramp_frac * eb_cap)};

  const double ees_cap = uniform(rng, r.ees_capacity);
  const double ees_rate = uniform(rng, r.ees_c_rate);
  const double ees_target = uniform(rng, r.ees_target_frac);
  if (ees_cap >= r.absent_fraction * r.ees_capacity[1])
    m.ees = make_storage(ees_cap, ees_rate, ees_target, r.ees_bounds, r.storage_eff, 0.0);

  double heat_capability = 0.0;
  if (m.chp) heat_capability += m.chp->capacity_max / m.chp->eff_gas_to_elec * m.chp->eff_gas_to_heat;
  if (m.furnace) heat_capability += m.furnace->capacity_max;
  if (m.boiler) heat_capability += m.boiler->capacity_max * m.boiler->eff;

  // TES charging is capped at half the heat capability by shrinking the tank.
  const double tes_rate = uniform(rng, r.tes_c_rate);
  const double tes_target = uniform(rng, r.tes_target_frac);
  const double tes_cap = std::min(uniform(rng, r.tes_capacity), 0.5 * heat_capability / tes_rate);
  if (tes_cap >= r.absent_fraction * r.tes_capacity[1])
    m.tes = make_storage(tes_cap, tes_rate, tes_target, r.tes_bounds, r.storage_eff, r.tes_self_discharge);

  const double heat_room = heat_capability - (m.tes ? m.tes->charge_power_max : 0.0);
  ProfileScale scale;
  scale.elec_peak = uniform(rng, 0.6, 2.0);
  scale.heat_peak = std::min(uniform(rng, 0.4, 1.5), 0.7 * heat_room);
  scale.wind_capacity = uniform(rng, 0.0, 0.5) * scale.elec_peak;
  scale.solar_capacity = uniform(rng, 0.0, kind == LoadKind::Commercial ? 0.6 : 0.3) * scale.elec_peak;
  m.profiles = synth_profiles(kind, profile_seed, scale);

  const double sl_max = uniform(rng, 0.15, 0.30) * scale.elec_peak;
  const auto sl_window = kind == LoadKind::Residential ? window(17, 24) : window(8, 18);
  m.shiftable_elec.per_period_max = quantize(sl_max);
  m.shiftable_elec.total_energy =
      quantize(std::min(uniform(rng, 0.2, 1.0) * scale.elec_peak, 0.7 * sl_max * static_cast<double>(sl_window.size())));
  m.shiftable_elec.window = sl_window;

  const double slh_max = uniform(rng, 0.05, 0.15) * scale.heat_peak;
  m.shiftable_heat.per_period_max = quantize(slh_max);
  m.shiftable_heat.total_energy = quantize(uniform(rng, 0.0, 0.5) * slh_max * 17.0);
  m.shiftable_heat.window = window(6, 22);
  return m;
}

}  // namespace

std::vector<double> solar_shape() {
  std::vector<double> s(kDay, 0.0);
  for (int t = 7; t <= 19; ++t) s[t - 1] = std::sin(std::numbers::pi * (t - 6.5) / 13.0);
  const double peak = *std::max_element(s.begin(), s.end());
  for (auto& v : s) v /= peak;
  return s;
}

std::vector<double> wind_shape(std::uint64_t seed) {
  std::mt19937_64 rng(seed ^ 0x77696e64ULL);
  std::uniform_real_distribution<double> u(0.85, 1.15);
  std::vector<double> w(kDay);
  for (int t = 1; t <= kDay; ++t)
    w[t - 1] = std::clamp((0.55 + 0.35 * std::cos(2.0 * std::numbers::pi * (t - 3) / 24.0)) * u(rng), 0.0, 1.0);
  const double peak = *std::max_element(w.begin(), w.end());
  for (auto& v : w) v /= peak;
  return w;
}

Profiles synth_profiles(LoadKind kind, std::uint64_t seed, const ProfileScale& scale) {
  std::mt19937_64 rng(seed);
  const bool res = kind == LoadKind::Residential;
  const auto elec = jittered(res ? kResidentialElec : kCommercialElec, rng, 0.05);
  const auto heat = jittered(res ? kResidentialHeat : kCommercialHeat, rng, 0.05);
  const auto wind = wind_shape(seed);
  const auto solar = solar_shape();
  Profiles p;
  p.elec_load.resize(kDay);
  p.heat_load.resize(kDay);
  p.res_output.resize(kDay);
  for (int k = 0; k < kDay; ++k) {
    p.elec_load[k] = scale.elec_peak * elec[k];
    p.heat_load[k] = scale.heat_peak * heat[k];
    p.res_output[k] = scale.wind_capacity * wind[k] + scale.solar_capacity * solar[k];
  }
  quantize_profiles(p);
  return p;
}

std::vector<double> synth_rtp(std::uint64_t seed) {
  std::mt19937_64 rng(seed ^ 0x727470ULL);
  std::uniform_real_distribution<double> u(-0.04, 0.04);
  std::vector<double> p(kDay);
  for (int k = 0; k < kDay; ++k) p[k] = quantize(std::clamp(kRtpBase[k] + u(rng), 0.25, 0.85));
  return p;
}

Scenario random_case(int n_mes, std::uint64_t seed, const RandomCaseOptions& opt) {
  if (n_mes < 1) throw ScenarioError("random_case: n_mes must be at least 1");
  std::mt19937_64 rng(seed);
  Scenario s;
  s.id = fmt::format("random-n{}-s{}", n_mes, seed);
  s.grid.rtp_price = synth_rtp(seed);
  s.grid.shared_res.assign(kDay, 0.0);
  if (opt.shared_res) {
    const double wind = uniform(rng, 0.02, 0.05) * n_mes;
    const double solar = uniform(rng, 0.02, 0.04) * n_mes;
    const auto ws = wind_shape(seed + 1);
    const auto ss = solar_shape();
    for (int k = 0; k < kDay; ++k) s.grid.shared_res[k] = quantize(wind * ws[k] + solar * ss[k]);
  }
  // Provisional limits so validate_config and the autonomous solves run.
  s.grid.transformer_import_max = s.grid.transformer_export_max = 1e6;

  const HorizonSpec h;
  for (int i = 1; i <= n_mes; ++i) {
    MesConfig m;
    bool ok = false;
    for (int attempt = 0; attempt < 20 && !ok; ++attempt) {
      m = draw_mes(i, rng, opt.ranges, seed * 1000003ULL + static_cast<std::uint64_t>(i) * 7919ULL + attempt);
      double base = 0.0;
      for (int k = 0; k < kDay; ++k)
        base = std::max(base, m.profiles.elec_load[k] - m.profiles.res_output[k] + m.shiftable_elec.per_period_max);
      base = std::max(base, 0.3 * *std::max_element(m.profiles.elec_load.begin(), m.profiles.elec_load.end()));
      double line = uniform(rng, opt.line_factor) * base;
      for (int bump = 0; bump < 40; ++bump) {
        m.line_import_max = m.line_export_max = quantize(line);
        if (validate_config(m, s.grid).empty() && feasible_under_stress(m, s.grid)) {
          ok = true;
          break;
        }
        line *= 1.1;
      }
    }
    if (!ok) throw ScenarioError(fmt::format("random_case: could not draw a feasible MES {} for seed {}", i, seed));
    s.mes.push_back(std::move(m));
  }

  // Congestion target: a share of the coincident peak of autonomous imports.
  const int n = static_cast<int>(s.mes.size());
  std::vector<std::vector<double>> base(n);
  parallel_for(n, [&](int i) {
    base[i] = solve_autonomous(s.mes[i], initial_state(s.mes[i]), rtp_prices(s.grid, h), h).schedule.grid_exchange;
  });
  std::vector<double> aggregate(kDay, 0.0);
  for (const auto& b : base)
    for (int k = 0; k < kDay; ++k) aggregate[k] += b[k];
  const double peak = std::max(0.0, *std::max_element(aggregate.begin(), aggregate.end()));

  // Floors: the limit must admit the aggregate response when one period's
  // price sits at the ceiling (imports) or the floor (exports).
  std::vector<std::array<double, 2>> edge(static_cast<std::size_t>(n) * kDay);
  parallel_for(n * kDay, [&](int j) {
    const int i = j / kDay;
    const int k = j % kDay;
    const auto& m = s.mes[i];
    auto p = rtp_prices(s.grid, h);
    p.elec[k] = s.grid.price_ceiling;
    edge[j][0] = solve_autonomous(m, initial_state(m), p, h).schedule.grid_exchange[k];
    p.elec[k] = s.grid.price_floor;
    edge[j][1] = solve_autonomous(m, initial_state(m), p, h).schedule.grid_exchange[k];
  });
  double import_floor = 0.0;
  double export_floor = 0.0;
  for (int k = 0; k < kDay; ++k) {
    double hi = -s.grid.shared_res[k];
    double lo = -s.grid.shared_res[k];
    for (int i = 0; i < n; ++i) {
      hi += edge[i * kDay + k][0];
      lo += edge[i * kDay + k][1];
    }
    import_floor = std::max(import_floor, hi);
    export_floor = std::max(export_floor, -lo);
  }
  const double limit = std::max(opt.transformer_factor * peak, 1.1 * std::max(import_floor, export_floor));
  s.grid.transformer_import_max = s.grid.transformer_export_max = quantize(std::max(limit, 0.1));
  validate_scenario(s);
  return s;
}

Scenario case_two() {
  Scenario s;
  s.id = "case-two";
  const auto rtp = synth_rtp(2);
  s.grid.rtp_price = rtp;
  s.grid.transformer_import_max = 2.25;
  s.grid.transformer_export_max = 2.25;
  const auto wind = wind_shape(20);
  const auto solar = solar_shape();
  s.grid.shared_res.resize(kDay);
  for (int k = 0; k < kDay; ++k) s.grid.shared_res[k] = quantize(0.4 * wind[k] + 0.3 * solar[k]);

  const double ees_bounds[2] = {0.10, 0.85};
  const double tes_bounds[2] = {0.10, 0.90};

  MesConfig m1;
  m1.id = 1;
  m1.name = "MES1-res";
  m1.chp = ChpParams{1.5, 0.45, 0.30, 0.42, 0.6};
  m1.ees = make_storage(1.6, 0.3, 0.2, ees_bounds, 0.9, 0.0);
  m1.tes = make_storage(1.2, 0.25, 0.6, tes_bounds, 0.9, 0.1);
  m1.profiles = synth_profiles(LoadKind::Residential, 11, {1.2, 1.1, 0.9, 0.0});
  m1.shiftable_elec = {1.2, 0.4, window(18, 24)};
  m1.shiftable_heat = {0.4, 0.1, window(6, 22)};
  m1.line_import_max = m1.line_export_max = 1.1;

  MesConfig m2;
  m2.id = 2;
  m2.name = "MES2-res";
  m2.furnace = FurnaceParams{1.6, 0.0, 0.9};
  m2.boiler = BoilerParams{1.0, 0.0, 0.98, 0.5};
  m2.ees = make_storage(1.5, 0.25, 0.2, ees_bounds, 0.9, 0.0);
  m2.tes = make_storage(1.2, 0.25, 0.6, tes_bounds, 0.9, 0.1);
  m2.profiles = synth_profiles(LoadKind::Residential, 12, {1.8, 1.4, 0.0, 0.2});
  m2.shiftable_elec = {1.2, 0.4, window(18, 24)};
  m2.shiftable_heat = {0.4, 0.1, window(6, 22)};
  m2.line_import_max = m2.line_export_max = 2.25;

  MesConfig m3;
  m3.id = 3;
  m3.name = "MES3-com";
  m3.chp = ChpParams{4.0, 1.2, 0.28, 0.56, 1.6};
  m3.ees = make_storage(1.4, 0.3, 0.2, ees_bounds, 0.9, 0.0);
  m3.tes = make_storage(1.4, 0.25, 0.5, tes_bounds, 0.9, 0.1);
  m3.profiles = synth_profiles(LoadKind::Commercial, 13, {3.0, 3.0, 0.0, 0.6});
  m3.shiftable_elec = {1.0, 0.3, window(8, 18)};
  m3.shiftable_heat = {0.6, 0.15, window(6, 22)};
  m3.line_import_max = m3.line_export_max = 1.2;

  s.mes = {m1, m2, m3};
  for (auto& m : s.mes) m.per_period_self_discharge = true;
  validate_scenario(s);
  return s;
}

void validate_scenario(const Scenario& s) {
  std::string msg;
  if (static_cast<int>(s.grid.rtp_price.size()) != kDay) msg += fmt::format("grid: rtp has {} entries; ", s.grid.rtp_price.size());
  if (static_cast<int>(s.grid.shared_res.size()) != kDay)
    msg += fmt::format("grid: shared RES has {} entries; ", s.grid.shared_res.size());
  for (const auto& m : s.mes)
    for (const auto& v : validate_config(m, s.grid)) msg += fmt::format("MES {} {}: {}; ", m.id, v.field, v.message);
  if (!msg.empty()) throw ScenarioError("invalid scenario: " + msg);
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
    out.push_back(cell);
  }
  return out;
}

double parse_number(const std::string& cell, int line) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(cell, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != cell.size() || !std::isfinite(v))
    throw ScenarioError(fmt::format("row {}: '{}' is not a number", line, cell));
  return v;
}

// Returns data rows (header checked) with their 1-based file line numbers.
std::vector<std::pair<int, std::vector<double>>> read_table(std::istream& in, const std::vector<std::string>& header) {
  std::string line;
  int lineno = 0;
  if (!std::getline(in, line)) throw ScenarioError("empty CSV: header row required");
  ++lineno;
  if (split(line) != header)
    throw ScenarioError(fmt::format("bad CSV header '{}', expected '{}'", line, fmt::join(header, ",")));
  std::vector<std::pair<int, std::vector<double>>> rows;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto cells = split(line);
    if (cells.size() != header.size())
      throw ScenarioError(fmt::format("row {}: expected {} columns, got {}", lineno, header.size(), cells.size()));
    std::vector<double> v;
    for (const auto& c : cells) v.push_back(parse_number(c, lineno));
    rows.emplace_back(lineno, std::move(v));
  }
  return rows;
}

void check_periods(const std::vector<std::pair<int, std::vector<double>>>& rows) {
  if (static_cast<int>(rows.size()) != kDay)
    throw ScenarioError(fmt::format("expected {} data rows, got {}", kDay, rows.size()));
  for (std::size_t k = 0; k < rows.size(); ++k)
    if (rows[k].second[0] != static_cast<double>(k + 1))
      throw ScenarioError(fmt::format("row {}: period {} out of sequence", rows[k].first, rows[k].second[0]));
}

const std::vector<std::string> kProfileHeader = {"period", "elec_load_MW", "heat_load_MW", "res_MW"};
const std::vector<std::string> kRtpHeader = {"period", "price_yuan_per_kWh"};

void write_profiles(const Profiles& p, const fs::path& file) {
  std::ofstream out(file);
  out << "period,elec_load_MW,heat_load_MW,res_MW\n";
  for (int k = 0; k < p.size(); ++k)
    out << fmt::format("{},{:.6f},{:.6f},{:.6f}\n", k + 1, p.elec_load[k], p.heat_load[k], p.res_output[k]);
}

}  // namespace

std::vector<double> ingest_rtp(std::istream& in, double floor, double ceiling) {
  const auto rows = read_table(in, kRtpHeader);
  check_periods(rows);
  std::vector<double> out;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto& [line, v] = rows[k];
    if (v[1] < floor || v[1] > ceiling)
      throw ScenarioError(fmt::format("row {} (line {}): price {} outside the market band [{}, {}]", k + 1, line, v[1],
                                      floor, ceiling));
    out.push_back(v[1]);
  }
  return out;
}

Profiles ingest_profiles(std::istream& in) {
  const auto rows = read_table(in, kProfileHeader);
  check_periods(rows);
  Profiles p;
  for (const auto& [line, v] : rows) {
    for (int c = 1; c <= 3; ++c)
      if (v[c] < 0.0) throw ScenarioError(fmt::format("row {}: negative value {}", line, v[c]));
    p.elec_load.push_back(v[1]);
    p.heat_load.push_back(v[2]);
    p.res_output.push_back(v[3]);
  }
  return p;
}

// ---------------------------------------------------------------------------
// JSON

namespace {

json storage_json(const std::optional<StorageParams>& s) {
  if (!s) return nullptr;
  return {{"energy_min_MWh", s->energy_min},
          {"energy_max_MWh", s->energy_max},
          {"charge_power_max_MW", s->charge_power_max},
          {"discharge_power_max_MW", s->discharge_power_max},
          {"eff_charge", s->eff_charge},
          {"eff_discharge", s->eff_discharge},
          {"self_discharge_per_day", s->self_discharge_rate},
          {"target_energy_MWh", s->target_energy},
          {"initial_energy_MWh", s->initial_energy}};
}

json shiftable_json(const ShiftableLoadSpec& s) {
  return {{"total_energy_MWh", s.total_energy}, {"per_period_max_MW", s.per_period_max}, {"window", s.window}};
}

json mes_json(const MesConfig& m) {
  json j;
  j["id"] = m.id;
  j["name"] = m.name;
  j["line_import_max_MW"] = m.line_import_max;
  j["line_export_max_MW"] = m.line_export_max;
  j["per_period_self_discharge"] = m.per_period_self_discharge;
  j["chp"] = m.chp ? json{{"capacity_max_MW", m.chp->capacity_max},
                          {"capacity_min_MW", m.chp->capacity_min},
                          {"eff_gas_to_elec", m.chp->eff_gas_to_elec},
                          {"eff_gas_to_heat", m.chp->eff_gas_to_heat},
                          {"ramp_limit_MW_per_h", m.chp->ramp_limit}}
                   : json(nullptr);
  j["furnace"] = m.furnace ? json{{"capacity_max_MW", m.furnace->capacity_max},
                                  {"capacity_min_MW", m.furnace->capacity_min},
                                  {"eff", m.furnace->eff}}
                           : json(nullptr);
  j["boiler"] = m.boiler ? json{{"capacity_max_MW", m.boiler->capacity_max},
                                {"capacity_min_MW", m.boiler->capacity_min},
                                {"eff", m.boiler->eff},
                                {"ramp_limit_MW_per_h", m.boiler->ramp_limit}}
                         : json(nullptr);
  j["ees"] = storage_json(m.ees);
  j["tes"] = storage_json(m.tes);
  j["shiftable_elec"] = shiftable_json(m.shiftable_elec);
  j["shiftable_heat"] = shiftable_json(m.shiftable_heat);
  return j;
}

double num(const json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_number()) throw ScenarioError(fmt::format("missing numeric field '{}'", key));
  return j.at(key).get<double>();
}

std::optional<StorageParams> storage_from(const json& j) {
  if (j.is_null()) return std::nullopt;
  StorageParams s;
  s.energy_min = num(j, "energy_min_MWh");
  s.energy_max = num(j, "energy_max_MWh");
  s.charge_power_max = num(j, "charge_power_max_MW");
  s.discharge_power_max = num(j, "discharge_power_max_MW");
  s.eff_charge = num(j, "eff_charge");
  s.eff_discharge = num(j, "eff_discharge");
  s.self_discharge_rate = num(j, "self_discharge_per_day");
  s.target_energy = num(j, "target_energy_MWh");
  s.initial_energy = num(j, "initial_energy_MWh");
  return s;
}

ShiftableLoadSpec shiftable_from(const json& j) {
  ShiftableLoadSpec s;
  s.total_energy = num(j, "total_energy_MWh");
  s.per_period_max = num(j, "per_period_max_MW");
  s.window = j.at("window").get<std::vector<int>>();
  return s;
}

MesConfig mes_from(const json& j) {
  MesConfig m;
  m.id = j.at("id").get<int>();
  m.name = j.value("name", "");
  m.line_import_max = num(j, "line_import_max_MW");
  m.line_export_max = num(j, "line_export_max_MW");
  m.per_period_self_discharge = j.value("per_period_self_discharge", false);
  if (const auto& c = j.at("chp"); !c.is_null())
    m.chp = ChpParams{num(c, "capacity_max_MW"), num(c, "capacity_min_MW"), num(c, "eff_gas_to_elec"),
                      num(c, "eff_gas_to_heat"), num(c, "ramp_limit_MW_per_h")};
  if (const auto& f = j.at("furnace"); !f.is_null())
    m.furnace = FurnaceParams{num(f, "capacity_max_MW"), num(f, "capacity_min_MW"), num(f, "eff")};
  if (const auto& b = j.at("boiler"); !b.is_null())
    m.boiler = BoilerParams{num(b, "capacity_max_MW"), num(b, "capacity_min_MW"), num(b, "eff"),
                            num(b, "ramp_limit_MW_per_h")};
  m.ees = storage_from(j.at("ees"));
  m.tes = storage_from(j.at("tes"));
  m.shiftable_elec = shiftable_from(j.at("shiftable_elec"));
  m.shiftable_heat = shiftable_from(j.at("shiftable_heat"));
  return m;
}

std::ifstream open_in(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw ScenarioError(fmt::format("cannot open {}", p.string()));
  return in;
}

}  // namespace

void write_scenario(const Scenario& s, const fs::path& dir) {
  fs::create_directories(dir);
  json g;
  g["id"] = s.id;
  g["mes_count"] = s.mes.size();
  g["transformer_import_max_MW"] = s.grid.transformer_import_max;
  g["transformer_export_max_MW"] = s.grid.transformer_export_max;
  g["gas_price_yuan_per_m3"] = s.grid.gas_price;
  g["gas_heating_value_kWh_per_m3"] = s.grid.gas_heating_value;
  g["feed_in_price_yuan_per_kWh"] = s.grid.feed_in_price;
  g["price_floor_yuan_per_kWh"] = s.grid.price_floor;
  g["price_ceiling_yuan_per_kWh"] = s.grid.price_ceiling;
  std::ofstream(dir / "grid.json") << g.dump(2) << '\n';

  for (std::size_t i = 0; i < s.mes.size(); ++i) {
    const auto n = i + 1;
    std::ofstream(dir / fmt::format("mes_{}.json", n)) << mes_json(s.mes[i]).dump(2) << '\n';
    write_profiles(s.mes[i].profiles, dir / fmt::format("profiles_{}.csv", n));
  }
  Profiles shared;
  shared.res_output = s.grid.shared_res;
  shared.elec_load.assign(shared.res_output.size(), 0.0);
  shared.heat_load.assign(shared.res_output.size(), 0.0);
  write_profiles(shared, dir / "shared.csv");

  std::ofstream rtp(dir / "rtp.csv");
  rtp << "period,price_yuan_per_kWh\n";
  for (std::size_t k = 0; k < s.grid.rtp_price.size(); ++k) rtp << fmt::format("{},{:.6f}\n", k + 1, s.grid.rtp_price[k]);
}

Scenario read_scenario(const fs::path& dir) {
  Scenario s;
  json g;
  try {
    auto in = open_in(dir / "grid.json");
    g = json::parse(in);
  } catch (const json::exception& e) {
    throw ScenarioError(fmt::format("grid.json: {}", e.what()));
  }
  try {
    s.id = g.value("id", dir.filename().string());
    s.grid.transformer_import_max = num(g, "transformer_import_max_MW");
    s.grid.transformer_export_max = num(g, "transformer_export_max_MW");
    s.grid.gas_price = num(g, "gas_price_yuan_per_m3");
    s.grid.gas_heating_value = num(g, "gas_heating_value_kWh_per_m3");
    s.grid.feed_in_price = num(g, "feed_in_price_yuan_per_kWh");
    s.grid.price_floor = num(g, "price_floor_yuan_per_kWh");
    s.grid.price_ceiling = num(g, "price_ceiling_yuan_per_kWh");
    const int count = g.at("mes_count").get<int>();
    for (int n = 1; n <= count; ++n) {
      auto in = open_in(dir / fmt::format("mes_{}.json", n));
      auto m = mes_from(json::parse(in));
      auto pin = open_in(dir / fmt::format("profiles_{}.csv", n));
      try {
        m.profiles = ingest_profiles(pin);
      } catch (const ScenarioError& e) {
        throw ScenarioError(fmt::format("profiles_{}.csv: {}", n, e.what()));
      }
      s.mes.push_back(std::move(m));
    }
  } catch (const json::exception& e) {
    throw ScenarioError(fmt::format("scenario JSON: {}", e.what()));
  }
  {
    auto in = open_in(dir / "shared.csv");
    try {
      s.grid.shared_res = ingest_profiles(in).res_output;
    } catch (const ScenarioError& e) {
      throw ScenarioError(fmt::format("shared.csv: {}", e.what()));
    }
  }
  {
    auto in = open_in(dir / "rtp.csv");
    try {
      s.grid.rtp_price = ingest_rtp(in, s.grid.price_floor, s.grid.price_ceiling);
    } catch (const ScenarioError& e) {
      throw ScenarioError(fmt::format("rtp.csv: {}", e.what()));
    }
  }
  validate_scenario(s);
  return s;
}

}  // namespace imes
