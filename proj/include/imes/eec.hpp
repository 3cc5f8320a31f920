#pragma once

// Equivalent-energy-change transform: maps a simultaneous charge/discharge
// pair onto an exclusive pair with the same energy change, moving the
// difference into curtailment. Also the brute-force mode-enumeration solver
// for the problem with complementarity enforced.

#include <iosfwd>
#include <string>
#include <vector>

#include "imes/mes_optimizer.hpp"
#include "imes/model.hpp"

namespace imes {

inline constexpr double kSimultaneityThreshold = 1e-9;

struct StoragePair {
  double charge = 0.0;
  double discharge = 0.0;
};

/// Throws std::invalid_argument on negative powers, efficiencies outside
/// (0, 1] or a non-positive period length.
StoragePair eec_transform(double p_ch, double p_dch, double eta_ch, double eta_dch, double dt);

/// Increase of net discharge power produced by the transform.
double net_discharge_delta(double p_ch, double p_dch, double eta_ch, double eta_dch);

struct EecPeriodRecord {
  int period = 0;
  std::string storage;  ///< "ees" or "tes"
  double pre_charge = 0.0;
  double pre_discharge = 0.0;
  double post_charge = 0.0;
  double post_discharge = 0.0;
  double delta_energy = 0.0;
  double delta_discharge = 0.0;
  double curtail_pre = 0.0;
  double curtail_post = 0.0;
  bool simultaneous_pre = false;
  bool theorem2_condition = true;
  bool curtail_exceeds_available = false;
};

struct EecReport {
  std::vector<EecPeriodRecord> rows;
  bool theorem1_precondition_held = true;   ///< no RES curtailment before the transform
  bool theorem2_condition_held = true;      ///< condition holds in every period
  bool complementarity_violated_pre = false;
  bool complementarity_satisfied_post = true;
  bool curtailment_overflow = false;        ///< some post curtailment exceeds available RES
};

/// Per-period evaluation of
///   (P_res - P_curt) / (1 - eta_ch eta_dch) >= min(P_ch, P_dch / (eta_ch eta_dch))
/// for the electric storage. True everywhere when there is no EES.
std::vector<bool> check_theorem2_condition(const DispatchSchedule& sched, const MesConfig& cfg);

struct EecResult {
  DispatchSchedule schedule;
  EecReport report;
};

EecResult apply_eec(const DispatchSchedule& sched, const MesConfig& cfg, const MesState* state = nullptr);

void write_eec_csv(const EecReport& report, std::ostream& out);

inline constexpr int kP1OracleMaxPeriods = 8;

struct P1Result {
  DispatchSchedule schedule;
  double cost = 0.0;
  long branches = 0;
  long feasible_branches = 0;
};

/// Enumerates charge-only / discharge-only modes for every period and
/// storage, solving the restricted LP per assignment. Throws MesError when
/// the horizon exceeds kP1OracleMaxPeriods or every branch is infeasible.
P1Result p1_oracle(const MesConfig& cfg, const MesState& state, const PriceVector& prices,
                   const HorizonSpec& horizon);

}  // namespace imes
