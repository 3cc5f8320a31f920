#pragma once

// Domain types for one multi-energy system (MES) and the shared grid.
// Periods are 1-based (1..periods_per_day); profile vectors are indexed by
// period - 1. Power in MW, energy in MWh, prices in yuan/kWh.

#include <array>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace imes {

inline constexpr int kPeriodsPerDay = 24;

struct HorizonSpec {
  double period_length_hours = 1.0;
  int start_period = 1;
  int end_period = kPeriodsPerDay;
  int periods_per_day = kPeriodsPerDay;

  int length() const { return end_period - start_period + 1; }
  bool contains(int t) const { return t >= start_period && t <= end_period; }
};

struct ChpParams {
  double capacity_max = 0.0;     ///< electric MW
  double capacity_min = 0.0;     ///< electric MW
  double eff_gas_to_elec = 0.3;
  double eff_gas_to_heat = 0.4;
  double ramp_limit = 0.0;       ///< electric MW per hour
};

struct FurnaceParams {
  double capacity_max = 0.0;  ///< heat MW
  double capacity_min = 0.0;
  double eff = 0.85;
};

struct BoilerParams {
  double capacity_max = 0.0;  ///< electric MW consumed
  double capacity_min = 0.0;
  double eff = 0.98;
  double ramp_limit = 0.0;
};

struct StorageParams {
  double energy_min = 0.0;
  double energy_max = 0.0;
  double charge_power_max = 0.0;
  double discharge_power_max = 0.0;
  double eff_charge = 0.9;
  double eff_discharge = 0.9;
  double self_discharge_rate = 0.0;  ///< fraction per day
  double target_energy = 0.0;
  double initial_energy = 0.0;
};

struct ShiftableLoadSpec {
  double total_energy = 0.0;    ///< MWh per day
  double per_period_max = 0.0;  ///< MW
  std::vector<int> window;      ///< allowed periods (1-based, same day)

  bool in_window(int period) const;
};

struct Profiles {
  std::vector<double> elec_load;
  std::vector<double> heat_load;
  std::vector<double> res_output;

  int size() const { return static_cast<int>(elec_load.size()); }
};

struct MesConfig {
  int id = 0;
  std::string name;
  std::optional<ChpParams> chp;
  std::optional<FurnaceParams> furnace;
  std::optional<BoilerParams> boiler;
  std::optional<StorageParams> ees;
  std::optional<StorageParams> tes;
  ShiftableLoadSpec shiftable_elec;
  ShiftableLoadSpec shiftable_heat;
  Profiles profiles;
  double line_import_max = 0.0;
  double line_export_max = 0.0;
  /// Apply self-discharge every period (alpha * dT / 24) instead of once to
  /// the carried-in energy.
  bool per_period_self_discharge = false;
};

struct GridParams {
  double transformer_import_max = 0.0;
  double transformer_export_max = 0.0;
  std::vector<double> shared_res;  ///< MW per period
  std::vector<double> rtp_price;   ///< yuan/kWh per period
  double gas_price = 3.3;          ///< yuan per m3
  double gas_heating_value = 10.0; ///< kWh per m3
  double feed_in_price = 0.0;
  double price_floor = 0.2;
  double price_ceiling = 1.0;

  /// Gas price per kWh of energy-equivalent gas.
  double gas_price_per_kwh() const { return gas_price / gas_heating_value; }
};

/// Rolling state carried from one period to the next.
struct MesState {
  double ees_energy_now = 0.0;
  double tes_energy_now = 0.0;
  std::optional<double> prev_chp_power;     ///< electric MW in the previous period
  std::optional<double> prev_boiler_power;
  double shiftable_elec_served = 0.0;       ///< MWh served today so far
  double shiftable_heat_served = 0.0;
};

MesState initial_state(const MesConfig& cfg);

struct DispatchSchedule {
  HorizonSpec horizon;
  std::vector<double> grid_exchange;
  std::vector<double> gas_chp;
  std::vector<double> gas_furnace;
  std::vector<double> boiler_power;
  std::vector<double> ees_charge;
  std::vector<double> ees_discharge;
  std::vector<double> tes_charge;
  std::vector<double> tes_discharge;
  std::vector<double> res_curtail;
  std::vector<double> heat_curtail;
  std::vector<double> shiftable_elec;
  std::vector<double> shiftable_heat;
  std::vector<double> ees_energy;  ///< energy at the end of each period
  std::vector<double> tes_energy;

  static constexpr std::array<std::string_view, 14> kFields = {
      "grid_exchange", "gas_chp",       "gas_furnace",   "boiler_power",   "ees_charge",
      "ees_discharge", "tes_charge",    "tes_discharge", "res_curtail",    "heat_curtail",
      "shiftable_elec", "shiftable_heat", "ees_energy",  "tes_energy"};

  explicit DispatchSchedule(HorizonSpec h = {});
  int length() const { return static_cast<int>(grid_exchange.size()); }
  int index(int period) const { return period - horizon.start_period; }

  std::vector<double>& field(std::string_view name);
  const std::vector<double>& field(std::string_view name) const;
};

struct Violation {
  std::string field;
  std::string message;
};

std::vector<Violation> validate_config(const MesConfig& cfg, const GridParams& grid);

/// Energy at the end of each period given charge/discharge series. Literal
/// form: (1 - alpha) * E0 + cumulative sum of energy changes.
std::vector<double> storage_trajectory(const StorageParams& p, double initial_energy,
                                       const std::vector<double>& charge,
                                       const std::vector<double>& discharge, double dt,
                                       bool per_period_decay);

/// Multiplier applied to the carried-in energy in period k of the horizon
/// (k = 0 first) and the per-period decay factor, for either decay form.
struct DecayModel {
  double initial_factor = 1.0;
  double step_factor = 1.0;
};
DecayModel decay_model(const StorageParams& p, double dt, bool per_period_decay);

struct ResidualOptions {
  bool include_complementarity = false;
  bool include_targets = true;
  bool include_shiftable_totals = true;
};

using ResidualMap = std::map<std::string, double>;

/// Maximum violation per constraint family; 0 when satisfied. Throws
/// std::invalid_argument on length mismatch.
ResidualMap feasibility_residuals(const MesConfig& cfg, const DispatchSchedule& sched,
                                  const MesState* state = nullptr, ResidualOptions opts = {});

double max_residual(const ResidualMap& r);

}  // namespace imes
