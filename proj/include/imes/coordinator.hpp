#pragma once

// Upper-level clearing: transformer response, local price, subgradient
// iteration over a price vector, and the hourly bisection on the current
// period's price. MES responses come from warm-started MesAgent objects.

#include <cstdint>
#include <string_view>
#include <vector>

#include "imes/mes_optimizer.hpp"
#include "imes/model.hpp"

namespace imes {

enum class Mode : std::uint8_t { NCA, CA, CAFIL };
enum class Protocol : std::uint8_t { SGRTC, TwoStage };

std::string_view to_string(Mode m);
std::string_view to_string(Protocol p);

enum class TransformerMode : std::uint8_t { ImportMax, ExportMax, Flexible };

struct TransformerLimits {
  double import_max = 0.0;
  double export_max = 0.0;
};

/// Transformer response to one period's local price. Committed powers are
/// set for ImportMax/ExportMax; Flexible carries the range the coordinator
/// may clamp aggregate demand into.
struct TransformerBid {
  TransformerMode mode = TransformerMode::Flexible;
  double committed = 0.0;
  double range_lo = 0.0;
  double range_hi = 0.0;

  /// Transformer power answering net demand `demand` (MW).
  double power(double demand) const;
};

/// Sell reference: the RTP in CA mode, the feed-in price in CA-FIL.
double sell_reference(Mode mode, double mu_e, double feed_in);

TransformerBid transformer_bid(double lambda_e, double mu_e, double feed_in, const TransformerLimits& limits,
                               Mode mode, double deadband = 1e-12);

struct LocalPrice {
  double value = 0.0;
  bool clamped = false;
};

LocalPrice local_price(double mu_e, double lambda, double floor, double ceiling);

struct CoordinatorConfig {
  double balance_threshold = 1e-3;  ///< zeta, MW
  double price_tolerance = 1e-3;    ///< bisection width stop, yuan/kWh
  double step0 = 0.05;              ///< yuan/kWh per MW of imbalance
  double step_decay = 50.0;         ///< beta in step0 / (1 + k / beta)
  bool normalize_step = true;       ///< divide the step by the transformer import limit (in MW)
  int max_iterations = 200;
  double price_floor = 0.2;
  double price_ceiling = 1.0;

  static CoordinatorConfig from_grid(const GridParams& g);
};

/// One coordinator evaluation (broadcast + bids) for one period.
struct ClearingIteration {
  int period = 0;
  int iteration = 0;
  double lambda_e = 0.0;
  double sum_bids = 0.0;      ///< sum of MES bids, MW
  double transformer = 0.0;   ///< MW, import positive
  double residual = 0.0;      ///< sum of bids - transformer - shared RES
  bool converged = false;
};

struct ClearingRecord {
  int period = 0;
  double lambda_e = 0.0;
  double mu_e = 0.0;
  int iterations = 0;
  std::vector<double> bids;  ///< per MES, MW
  double shared_res = 0.0;
  double transformer = 0.0;  ///< physical transformer power = sum of bids - shared RES
  double residual = 0.0;     ///< balance residual against the transformer bid
  bool converged = false;
  bool import_congested = false;
  bool export_congested = false;
  bool price_clamped = false;
  bool limit_violation = false;  ///< physical transformer power outside its limits
  bool anomaly = false;          ///< non-monotone residual observed while searching
  std::vector<ClearingIteration> trace;
};

/// Physical transformer feasibility of net demand `d` (MW) with tolerance.
bool within_limits(double d, const TransformerLimits& limits, double tol);

struct SubgradientResult {
  PriceVector prices;                   ///< local prices of the returned iterate
  std::vector<ClearingRecord> records;  ///< one per horizon period
  std::vector<MesSolution> solutions;   ///< per agent, at the returned iterate
  int iterations = 0;
  bool converged = false;
  double best_dual_value = 0.0;         ///< max Lagrangian dual value seen, yuan
  std::vector<ClearingIteration> trace; ///< every evaluation, every period
};

/// Dual subgradient iteration over all periods of `horizon`. Agents must be
/// built on that horizon. Starts from `initial` (RTP when empty).
SubgradientResult subgradient_clear(std::vector<MesAgent>& agents, const GridParams& grid,
                                    const HorizonSpec& horizon, Mode mode, const CoordinatorConfig& cfg,
                                    const std::vector<double>& initial = {});

struct BisectionResult {
  ClearingRecord record;
  std::vector<MesSolution> solutions;  ///< per agent at the clearing price
};

/// Hourly stage for period horizon.start_period: only that period's price is
/// searched; later periods keep the day-ahead forecast in `forecast`.
BisectionResult hourly_bisection_clear(std::vector<MesAgent>& agents, const GridParams& grid,
                                       const HorizonSpec& horizon, const PriceVector& forecast, Mode mode,
                                       const CoordinatorConfig& cfg);

/// Evaluations allowed by the bisection: ceil(log2(width / tol)) + 2.
int bisection_iteration_cap(const CoordinatorConfig& cfg);

struct CentralizedResult {
  lp::LpStatus status = lp::LpStatus::IterationLimit;
  double cost = 0.0;  ///< yuan at RTP
  std::vector<DispatchSchedule> schedules;
  std::vector<double> transformer;
  std::vector<double> balance_duals;  ///< yuan/kWh offset per period
};

/// Joint LP over all MESs with the transformer balance (CA semantics).
CentralizedResult solve_centralized(const std::vector<MesConfig>& mes, const std::vector<MesState>& states,
                                    const GridParams& grid, const HorizonSpec& horizon);

}  // namespace imes
