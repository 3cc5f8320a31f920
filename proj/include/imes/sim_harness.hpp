#pragma once

// Rolling-horizon day simulation: forecast refresh, per-period clearing under
// NCA / CA / CA-FIL with SG-RTC or 2S-TC, state handoff and message
// accounting.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "imes/coordinator.hpp"
#include "imes/scenario.hpp"

namespace imes {

enum class ForecastStage : std::uint8_t { DayAhead = 0, IntraDay = 1, RealTime = 2 };

/// Truncation bounds (fractions) per stage.
struct ForecastBounds {
  double res[3] = {0.30, 0.10, 0.05};
  double load[3] = {0.20, 0.08, 0.03};

  static ForecastBounds perfect() { return {{0.0, 0.0, 0.0}, {0.0, 0.0, 0.0}}; }
};

enum class ForecastSeries : std::uint8_t { ElecLoad = 0, HeatLoad = 1, Res = 2 };

/// Relative error drawn from N(0, (bound/3)^2) truncated at +-bound;
/// deterministic per (seed, stage, period, t, owner, series).
double forecast_error(std::uint64_t seed, ForecastStage stage, int period, int t, int owner, ForecastSeries series,
                      double bound);

/// Forecast of every period of `truth` for one stage issued at `period`.
Profiles refresh_forecasts(const Profiles& truth, ForecastStage stage, std::uint64_t seed, int period, int owner = 0,
                           const ForecastBounds& bounds = {});

/// Profiles seen when scheduling at t_c: real-time forecast for t_c,
/// intra-day forecast for later periods, truth before t_c.
Profiles rolling_forecast(const Profiles& truth, std::uint64_t seed, int t_c, int owner,
                          const ForecastBounds& bounds = {});

enum class MessageKind : std::uint8_t { PriceBroadcast, PriceVectorBroadcast, Bid, TransformerBid, Commit };
std::string_view to_string(MessageKind k);

inline constexpr int kCoordinatorId = -1;
inline constexpr int kBroadcastId = -2;
inline constexpr int kTransformerId = -3;

struct SimMessage {
  MessageKind kind = MessageKind::PriceBroadcast;
  int sender = kCoordinatorId;
  int receiver = kBroadcastId;
  int period = 0;
  std::vector<double> payload;
  int round = 0;
};

struct MessageCounts {
  long broadcasts = 0;
  long bids = 0;
  long commits = 0;
  long transformer_bids = 0;  ///< logged, not part of the clearing total

  long total() const { return broadcasts + bids + commits; }
};

struct SimOptions {
  CoordinatorConfig coordinator;
  bool coordinator_from_grid = true;  ///< take floor/ceiling from the scenario grid
  ForecastBounds forecast;
  bool record_messages = false;
  /// Capacity share each MES keeps free in its plan for future periods.
  double planning_reserve = 0.1;
};

struct PeriodResult {
  ClearingRecord record;
  double transformer = 0.0;  ///< realized net import through the transformer, MW
  bool violation = false;
  long messages = 0;         ///< broadcasts + bids + commit for this clearing
};

struct SimRun {
  std::string scenario_id;
  Mode mode = Mode::CA;
  Protocol protocol = Protocol::TwoStage;
  std::uint64_t seed = 0;
  std::vector<PeriodResult> periods;
  std::vector<DispatchSchedule> schedules;  ///< committed slices, periods 1..24, one per MES
  std::vector<MesState> final_states;
  std::vector<double> cost_rtp;             ///< per MES, yuan, electricity at RTP plus gas
  std::vector<double> cost_local;           ///< per MES, yuan, electricity at the cleared price plus gas
  double total_cost = 0.0;                  ///< sum of cost_rtp
  double res_available = 0.0;               ///< MWh, MES and shared
  double res_curtailed = 0.0;               ///< MWh
  int violations = 0;
  MessageCounts messages;                   ///< hourly clearings
  MessageCounts day_ahead_messages;         ///< S0 stage (2S-TC only)
  int day_ahead_iterations = 0;
  bool day_ahead_converged = true;
  std::vector<double> day_ahead_prices;
  std::vector<SimMessage> log;
  double wall_clock_seconds = 0.0;

  double accommodation() const { return res_available > 0.0 ? 1.0 - res_curtailed / res_available : 1.0; }
  /// Clearings that needed more than one evaluation.
  std::vector<int> congested_iterations() const;
};

/// Throws MesError when some MES has no feasible schedule (period and
/// phase-1 certificate attached).
SimRun run_day(const Scenario& scenario, Mode mode, Protocol protocol, std::uint64_t seed,
               const SimOptions& options = {});

struct IterationStats {
  int max = 0;
  double avg = 0.0;
  int congested = 0;  ///< clearings counted
};
IterationStats iteration_stats(const SimRun& run);

struct ProtocolComparison {
  SimRun sg_rtc;
  SimRun two_stage;
  double gap = 0.0;  ///< |2S-TC - SG-RTC| / SG-RTC total cost
  IterationStats sg_stats;
  IterationStats ts_stats;
};

ProtocolComparison compare_protocols(const Scenario& scenario, std::uint64_t seed, Mode mode = Mode::CA,
                                     const SimOptions& options = {});

void write_clearing_csv(const SimRun& run, std::ostream& out);
void write_schedule_csv(const DispatchSchedule& sched, std::ostream& out);
void write_simrun_json(const SimRun& run, std::ostream& out);
void write_compare_csv(const ProtocolComparison& cmp, std::ostream& out);
/// simrun.json, clearing.csv and schedule_<n>.csv into `dir`.
void write_run(const SimRun& run, const std::filesystem::path& dir);

}  // namespace imes
