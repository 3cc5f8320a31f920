#pragma once

// Autonomous MES scheduling LP (complementarity relaxed) over the remaining
// horizon, its solution, and a warm-started agent for repeated clearing.

#include <array>
#include <stdexcept>
#include <vector>

#include "imes/lp.hpp"
#include "imes/model.hpp"

namespace imes {

struct PriceVector {
  int start_period = 1;
  std::vector<double> elec;    ///< yuan/kWh for periods start_period..
  double gas_per_kwh = 0.33;   ///< yuan per kWh of energy-equivalent gas

  double at(int period) const { return elec.at(static_cast<std::size_t>(period - start_period)); }
  double& at(int period) { return elec.at(static_cast<std::size_t>(period - start_period)); }
};

/// Price vector equal to the RTP series restricted to the horizon.
PriceVector rtp_prices(const GridParams& grid, const HorizonSpec& horizon);

class MesError : public std::runtime_error {
 public:
  MesError(const std::string& what, int mes_id = -1, int period = -1, double certificate = 0.0)
      : std::runtime_error(what), mes_id(mes_id), period(period), certificate(certificate) {}
  int mes_id;
  int period;
  double certificate;  ///< phase-1 sum of infeasibilities
};

/// Column index per schedule field and horizon offset; -1 where the field
/// has no column (absent device, outside a shiftable window).
struct P2Layout {
  static constexpr int kNumFields = static_cast<int>(DispatchSchedule::kFields.size());
  std::array<std::vector<int>, kNumFields> column;

  static int field_index(std::string_view name);
  int at(std::string_view name, int offset) const { return column[field_index(name)][offset]; }
};

struct P2Instance {
  lp::LinearProgram lp;
  P2Layout layout;
  HorizonSpec horizon;
};

struct P2Options {
  /// Per horizon offset: 0 leaves both columns free, 1 fixes discharge to
  /// zero (charge-only), 2 fixes charge to zero. Empty means all free.
  std::vector<int> ees_mode;
  std::vector<int> tes_mode;
  /// Share of line, device, ramp and storage-power limits held back at
  /// offsets >= 1 so the next re-solve can absorb forecast updates.
  double planning_reserve = 0.0;
};

P2Instance build_p2(const MesConfig& cfg, const MesState& state, const PriceVector& prices,
                    const HorizonSpec& horizon, const P2Options& options = {});

struct MesSolution {
  lp::LpStatus status = lp::LpStatus::IterationLimit;
  DispatchSchedule schedule;
  double cost = 0.0;  ///< yuan at the supplied prices
  double phase1_infeasibility = 0.0;
  long iterations = 0;

  bool ok() const { return status == lp::LpStatus::Optimal; }
};

DispatchSchedule extract_schedule(const P2Instance& inst, const MesConfig& cfg, const MesState& state,
                                  const std::vector<double>& x);

/// Sum over the schedule of lambda * P + mu_g * (G_chp + G_gf), in yuan.
double schedule_cost(const DispatchSchedule& sched, const PriceVector& prices);

/// Solves the relaxed problem; never throws on infeasibility, check status.
MesSolution solve_autonomous(const MesConfig& cfg, const MesState& state, const PriceVector& prices,
                             const HorizonSpec& horizon, const lp::ToleranceSet& tol = {},
                             const P2Options& options = {});

/// Grid-exchange vector of the optimal schedule. Throws MesError when the
/// problem is infeasible.
std::vector<double> bid(const MesConfig& cfg, const MesState& state, const PriceVector& prices,
                        const HorizonSpec& horizon);

/// Keeps one factorized LP per MES and rolling step; only the grid-exchange
/// cost coefficients change between clearing iterations.
class MesAgent {
 public:
  MesAgent(const MesConfig& cfg, const MesState& state, const PriceVector& prices, const HorizonSpec& horizon,
           const lp::ToleranceSet& tol = {}, const P2Options& options = {});

  /// Re-solves with new electricity prices (gas price unchanged).
  const MesSolution& solve(const std::vector<double>& elec_prices);
  const MesSolution& solve_with_price(int period, double price);
  const MesSolution& last() const { return last_; }

  const PriceVector& prices() const { return prices_; }
  const P2Instance& instance() const { return inst_; }
  int id() const { return cfg_.id; }

 private:
  void update_objective();
  const MesSolution& run();

  MesConfig cfg_;
  MesState state_;
  PriceVector prices_;
  P2Instance inst_;
  lp::SimplexSolver solver_;
  MesSolution last_;
};

}  // namespace imes
