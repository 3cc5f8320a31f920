#pragma once

// Scenario construction and the on-disk directory layout:
//   grid.json, mes_<n>.json, profiles_<n>.csv, shared.csv, rtp.csv

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "imes/model.hpp"

namespace imes {

class ScenarioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Scenario {
  std::string id;
  GridParams grid;
  std::vector<MesConfig> mes;
};

enum class LoadKind : std::uint8_t { Residential, Commercial };

struct ProfileScale {
  double elec_peak = 1.0;   ///< MW
  double heat_peak = 1.0;   ///< MW
  double wind_capacity = 0.0;
  double solar_capacity = 0.0;
};

/// 24-point profiles from base shapes with seeded jitter. Residential
/// electric load peaks in the evening, commercial around midday; heat is a
/// winter shape; wind is higher at night; solar is a daylight bell.
Profiles synth_profiles(LoadKind kind, std::uint64_t seed, const ProfileScale& scale = {});

/// Unit-peak daylight bell (zero for periods <= 6 and >= 20).
std::vector<double> solar_shape();
/// Unit-peak wind shape with seeded jitter.
std::vector<double> wind_shape(std::uint64_t seed);

/// Synthetic RTP curve in [0.25, 0.85] yuan/kWh with morning and evening peaks.
std::vector<double> synth_rtp(std::uint64_t seed);

/// Parameter ranges used by random_case.
struct RandomCaseRanges {
  double chp_capacity[2] = {0.0, 3.0};
  double chp_heat_to_elec[2] = {1.0, 1.5};
  double chp_eff_elec[2] = {0.25, 0.40};
  double chp_min_frac[2] = {0.25, 0.35};
  double chp_ramp_frac[2] = {0.30, 0.50};
  double furnace_capacity[2] = {0.0, 1.0};
  double furnace_eff[2] = {0.80, 0.90};
  double boiler_capacity[2] = {0.3, 2.0};
  double boiler_eff = 0.98;
  double boiler_ramp_frac = 0.50;
  double ees_capacity[2] = {0.0, 3.0};
  double ees_c_rate[2] = {0.1, 0.3};
  double ees_target_frac[2] = {0.15, 0.50};
  double ees_bounds[2] = {0.10, 0.85};
  double tes_capacity[2] = {0.0, 3.0};
  double tes_c_rate[2] = {0.1, 0.3};
  double tes_target_frac[2] = {0.50, 0.90};
  double tes_bounds[2] = {0.10, 0.90};
  double storage_eff = 0.90;
  double tes_self_discharge = 0.10;
  double absent_fraction = 0.05;  ///< capacities below this share of the range upper bound are dropped
};

struct RandomCaseOptions {
  RandomCaseRanges ranges;
  double line_factor[2] = {0.8, 1.5};  ///< times the MES's peak synthetic net load
  double transformer_factor = 0.7;     ///< times the coincident peak of autonomous imports
  bool shared_res = true;
};

Scenario random_case(int n_mes, std::uint64_t seed, const RandomCaseOptions& opt = {});

/// Three-MES system with the component data of the reference study's second
/// case (two residential MESs, one commercial) and synthetic winter profiles.
Scenario case_two();

/// Reads `period,price_yuan_per_kWh`; requires 24 rows and every price in
/// [floor, ceiling]. Errors name the offending row.
std::vector<double> ingest_rtp(std::istream& in, double floor = 0.2, double ceiling = 1.0);

/// Reads `period,elec_load_MW,heat_load_MW,res_MW`.
Profiles ingest_profiles(std::istream& in);

void write_scenario(const Scenario& s, const std::filesystem::path& dir);
Scenario read_scenario(const std::filesystem::path& dir);

/// Validates every MES against the grid; throws ScenarioError listing problems.
void validate_scenario(const Scenario& s);

/// Rounds to 6 decimals so written files reproduce the in-memory values.
double quantize(double v);

}  // namespace imes
