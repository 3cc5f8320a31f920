#pragma once

#include <random>

#include "imes/model.hpp"

namespace fixtures {

inline imes::Profiles flat_profiles(int periods, double elec, double heat, double res) {
  return {std::vector<double>(periods, elec), std::vector<double>(periods, heat), std::vector<double>(periods, res)};
}

inline imes::GridParams flat_grid(int periods, double price) {
  imes::GridParams g;
  g.transformer_import_max = 100.0;
  g.transformer_export_max = 100.0;
  g.shared_res.assign(periods, 0.0);
  g.rtp_price.assign(periods, price);
  return g;
}

inline imes::MesConfig bare_mes(int periods, int id = 0) {
  imes::MesConfig m;
  m.id = id;
  m.profiles = flat_profiles(periods, 0.0, 0.0, 0.0);
  m.line_import_max = 2.0;
  m.line_export_max = 2.0;
  return m;
}

inline imes::StorageParams storage(double cap, double rate, double alpha) {
  imes::StorageParams s;
  s.energy_min = 0.1 * cap;
  s.energy_max = 0.9 * cap;
  s.charge_power_max = rate * cap;
  s.discharge_power_max = rate * cap;
  s.eff_charge = 0.9;
  s.eff_discharge = 0.9;
  s.self_discharge_rate = alpha;
  s.target_energy = 0.5 * cap;
  s.initial_energy = 0.5 * cap;
  return s;
}

/// MES with every device present and mildly varying profiles.
inline imes::MesConfig full_mes(int periods, std::uint64_t seed, int id = 0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  imes::MesConfig m = bare_mes(periods, id);
  m.chp = imes::ChpParams{1.0 + u(rng), 0.3, 0.3 + 0.1 * u(rng), 0.45, 0.5};
  m.furnace = imes::FurnaceParams{0.5 + 0.5 * u(rng), 0.0, 0.85};
  m.boiler = imes::BoilerParams{0.5 + u(rng), 0.0, 0.98, 0.5};
  m.ees = storage(1.0 + 2.0 * u(rng), 0.2 + 0.1 * u(rng), 0.0);
  m.tes = storage(1.0 + 2.0 * u(rng), 0.2 + 0.1 * u(rng), 0.1);
  for (int t = 0; t < periods; ++t) {
    m.profiles.elec_load[t] = 0.8 + 0.6 * u(rng);
    m.profiles.heat_load[t] = 0.6 + 0.6 * u(rng);
    m.profiles.res_output[t] = 0.8 * u(rng);
  }
  m.shiftable_elec.total_energy = 0.5;
  m.shiftable_elec.per_period_max = 0.3;
  m.shiftable_heat.total_energy = 0.3;
  m.shiftable_heat.per_period_max = 0.2;
  for (int t = 1; t <= periods; ++t) {
    if (t > periods / 3) m.shiftable_elec.window.push_back(t);
    if (t <= 2 * periods / 3 + 1) m.shiftable_heat.window.push_back(t);
  }
  m.line_import_max = 3.0;
  m.line_export_max = 3.0;
  return m;
}

inline std::vector<double> price_curve(int periods, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.25, 0.85);
  std::vector<double> p(periods);
  for (auto& v : p) v = u(rng);
  return p;
}

}  // namespace fixtures
