#include "imes/coordinator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include <fmt/format.h>

#include "imes/parallel.hpp"

namespace imes {

std::string_view to_string(Mode m) {
  switch (m) {
    case Mode::NCA: return "NCA";
    case Mode::CA: return "CA";
    case Mode::CAFIL: return "CA-FIL";
  }
  return "?";
}

std::string_view to_string(Protocol p) { return p == Protocol::SGRTC ? "SG-RTC" : "2S-TC"; }

double TransformerBid::power(double demand) const {
  if (mode != TransformerMode::Flexible) return committed;
  return std::clamp(demand, range_lo, range_hi);
}

double sell_reference(Mode mode, double mu_e, double feed_in) { return mode == Mode::CAFIL ? feed_in : mu_e; }

TransformerBid transformer_bid(double lambda_e, double mu_e, double feed_in, const TransformerLimits& limits,
                               Mode mode, double deadband) {
  const double sell = sell_reference(mode, mu_e, feed_in);
  TransformerBid b;
  if (lambda_e > mu_e + deadband) {
    b.mode = TransformerMode::ImportMax;
    b.committed = b.range_lo = b.range_hi = limits.import_max;
  } else if (lambda_e < sell - deadband) {
    b.mode = TransformerMode::ExportMax;
    b.committed = b.range_lo = b.range_hi = -limits.export_max;
  } else {
    b.mode = TransformerMode::Flexible;
    b.range_lo = std::abs(lambda_e - sell) <= deadband ? -limits.export_max : 0.0;
    b.range_hi = std::abs(lambda_e - mu_e) <= deadband ? limits.import_max : 0.0;
  }
  return b;
}

LocalPrice local_price(double mu_e, double lambda, double floor, double ceiling) {
  const double raw = mu_e + lambda;
  const double v = std::clamp(raw, floor, ceiling);
  return {v, v != raw};
}

CoordinatorConfig CoordinatorConfig::from_grid(const GridParams& g) {
  CoordinatorConfig c;
  c.price_floor = g.price_floor;
  c.price_ceiling = g.price_ceiling;
  return c;
}

bool within_limits(double d, const TransformerLimits& limits, double tol) {
  return d <= limits.import_max + tol && d >= -limits.export_max - tol;
}

int bisection_iteration_cap(const CoordinatorConfig& cfg) {
  const double width = std::max(cfg.price_ceiling - cfg.price_floor, cfg.price_tolerance);
  return static_cast<int>(std::ceil(std::log2(width / cfg.price_tolerance))) + 2;
}

namespace {

TransformerLimits limits_of(const GridParams& g) { return {g.transformer_import_max, g.transformer_export_max}; }

double shared_at(const GridParams& g, int t) {
  return g.shared_res.empty() ? 0.0 : g.shared_res.at(static_cast<std::size_t>(t - 1));
}

void require_ok(const std::vector<MesAgent>& agents, int period) {
  for (const auto& a : agents) {
    const auto& s = a.last();
    if (!s.ok())
      throw MesError(fmt::format("MES {} has no feasible response during clearing ({})", a.id(),
                                 lp::to_string(s.status)),
                     a.id(), period, s.phase1_infeasibility);
  }
}

double sum_bids(const std::vector<MesAgent>& agents, int offset) {
  double s = 0.0;
  for (const auto& a : agents) s += a.last().schedule.grid_exchange.at(static_cast<std::size_t>(offset));
  return s;
}

std::vector<double> bids_at(const std::vector<MesSolution>& sols, int offset) {
  std::vector<double> out;
  out.reserve(sols.size());
  for (const auto& s : sols) out.push_back(s.schedule.grid_exchange.at(static_cast<std::size_t>(offset)));
  return out;
}

std::vector<MesSolution> snapshot(const std::vector<MesAgent>& agents) {
  std::vector<MesSolution> out;
  out.reserve(agents.size());
  for (const auto& a : agents) out.push_back(a.last());
  return out;
}

// Transformer term of the Lagrangian: min over the transformer range of
// -(lambda_e - mu) * P, in kyuan per hour.
double transformer_dual_term(double offset, const TransformerLimits& lim) {
  return offset > 0.0 ? -offset * lim.import_max : offset * lim.export_max;
}

}  // namespace

SubgradientResult subgradient_clear(std::vector<MesAgent>& agents, const GridParams& grid,
                                    const HorizonSpec& horizon, Mode mode, const CoordinatorConfig& cfg,
                                    const std::vector<double>& initial) {
  const int n = horizon.length();
  const int m = static_cast<int>(agents.size());
  const double dt = horizon.period_length_hours;
  const auto lim = limits_of(grid);
  const auto rtp = rtp_prices(grid, horizon);
  const double step_scale = cfg.normalize_step ? 1.0 / std::max(grid.transformer_import_max, 1e-6) : 1.0;

  std::vector<double> lambda = initial.empty() ? rtp.elec : initial;
  if (static_cast<int>(lambda.size()) != n) throw MesError("subgradient_clear: initial price length mismatch");
  for (auto& l : lambda) l = std::clamp(l, cfg.price_floor, cfg.price_ceiling);

  SubgradientResult out;
  out.best_dual_value = -std::numeric_limits<double>::infinity();
  bool have_best = false;
  bool best_feasible = false;
  double best_score = std::numeric_limits<double>::infinity();
  std::vector<double> residual(n), demand(n), tr(n);

  for (int k = 0; k < cfg.max_iterations; ++k) {
    parallel_for(m, [&](int i) { agents[i].solve(lambda); });
    require_ok(agents, horizon.start_period);
    ++out.iterations;

    double max_abs = 0.0;
    bool feasible = true;
    double dual = 0.0;
    for (int j = 0; j < n; ++j) {
      const int t = horizon.start_period + j;
      const double res = shared_at(grid, t);
      const double s = sum_bids(agents, j);
      demand[j] = s - res;
      const auto bid = transformer_bid(lambda[j], rtp.elec[j], grid.feed_in_price, lim, mode);
      tr[j] = bid.power(demand[j]);
      residual[j] = demand[j] - tr[j];
      max_abs = std::max(max_abs, std::abs(residual[j]));
      if (!within_limits(demand[j], lim, cfg.balance_threshold)) feasible = false;
      const double off = lambda[j] - rtp.elec[j];
      dual += 1000.0 * dt * (transformer_dual_term(off, lim) - off * res);
    }
    for (const auto& a : agents) dual += a.last().cost;
    out.best_dual_value = std::max(out.best_dual_value, dual);
    const bool conv = max_abs <= cfg.balance_threshold;
    for (int j = 0; j < n; ++j)
      out.trace.push_back({horizon.start_period + j, k + 1, lambda[j], demand[j] + shared_at(grid, horizon.start_period + j),
                           tr[j], residual[j], conv});

    const bool better = !have_best || (feasible && !best_feasible) ||
                        (feasible == best_feasible && max_abs < best_score);
    if (better) {
      have_best = true;
      best_feasible = feasible;
      best_score = max_abs;
      out.prices = rtp;
      out.prices.elec = lambda;
      out.solutions = snapshot(agents);
      out.converged = conv;
    }
    if (conv) break;

    const double eta = cfg.step0 / (1.0 + (k + 1) / cfg.step_decay) * step_scale;
    for (int j = 0; j < n; ++j)
      lambda[j] = std::clamp(lambda[j] + eta * residual[j], cfg.price_floor, cfg.price_ceiling);
  }

  out.records.reserve(n);
  for (int j = 0; j < n; ++j) {
    const int t = horizon.start_period + j;
    ClearingRecord r;
    r.period = t;
    r.lambda_e = out.prices.elec[j];
    r.mu_e = rtp.elec[j];
    r.iterations = out.iterations;
    r.bids = bids_at(out.solutions, j);
    r.shared_res = shared_at(grid, t);
    double s = 0.0;
    for (double b : r.bids) s += b;
    r.transformer = s - r.shared_res;
    const auto bid = transformer_bid(r.lambda_e, r.mu_e, grid.feed_in_price, lim, mode);
    r.residual = r.transformer - bid.power(r.transformer);
    r.converged = out.converged;
    r.import_congested = bid.mode == TransformerMode::ImportMax;
    r.export_congested = bid.mode == TransformerMode::ExportMax || (mode == Mode::CAFIL && r.lambda_e < r.mu_e);
    r.price_clamped = r.lambda_e <= cfg.price_floor || r.lambda_e >= cfg.price_ceiling;
    r.limit_violation = !within_limits(r.transformer, lim, cfg.balance_threshold);
    for (const auto& it : out.trace)
      if (it.period == t) r.trace.push_back(it);
    out.records.push_back(std::move(r));
  }
  return out;
}

BisectionResult hourly_bisection_clear(std::vector<MesAgent>& agents, const GridParams& grid,
                                       const HorizonSpec& horizon, const PriceVector& forecast, Mode mode,
                                       const CoordinatorConfig& cfg) {
  const int t = horizon.start_period;
  const int m = static_cast<int>(agents.size());
  const auto lim = limits_of(grid);
  const double mu = grid.rtp_price.at(static_cast<std::size_t>(t - 1));
  const double res = shared_at(grid, t);
  const int cap = bisection_iteration_cap(cfg);

  std::vector<double> prices(static_cast<std::size_t>(horizon.length()));
  for (int j = 0; j < horizon.length(); ++j) prices[j] = forecast.at(t + j);

  BisectionResult out;
  auto& rec = out.record;
  rec.period = t;
  rec.mu_e = mu;
  rec.shared_res = res;

  struct Eval {
    double lambda;
    double demand;
    double residual;
    std::vector<MesSolution> sols;
  };
  std::vector<std::pair<double, double>> seen;

  auto evaluate = [&](double lambda) {
    prices[0] = lambda;
    parallel_for(m, [&](int i) { agents[i].solve(prices); });
    require_ok(agents, t);
    ++rec.iterations;
    Eval e{lambda, sum_bids(agents, 0) - res, 0.0, snapshot(agents)};
    const auto bid = transformer_bid(lambda, mu, grid.feed_in_price, lim, mode);
    const double p = bid.power(e.demand);
    e.residual = e.demand - p;
    const bool conv = std::abs(e.residual) <= cfg.balance_threshold;
    rec.trace.push_back({t, rec.iterations, lambda, e.demand + res, p, e.residual, conv});
    seen.emplace_back(lambda, e.demand);
    return e;
  };

  Eval chosen = evaluate(std::clamp(mu, cfg.price_floor, cfg.price_ceiling));
  bool converged = std::abs(chosen.residual) <= cfg.balance_threshold;

  if (!converged) {
    const bool import = chosen.residual > 0.0;
    rec.import_congested = import;
    rec.export_congested = !import;
    double lo = import ? chosen.lambda : cfg.price_floor;
    double hi = import ? std::max(cfg.price_ceiling, chosen.lambda) : chosen.lambda;
    // Bracketing endpoints: residual > 0 on the low-price side, < 0 on the high side.
    std::optional<Eval> lo_end, hi_end;
    if (import) lo_end = chosen;
    else hi_end = chosen;
    while (rec.iterations < cap - 1 && hi - lo >= cfg.price_tolerance) {
      auto e = evaluate(0.5 * (lo + hi));
      if (std::abs(e.residual) <= cfg.balance_threshold) {
        chosen = std::move(e);
        converged = true;
        break;
      }
      if (e.residual > 0.0) {
        lo = e.lambda;
        lo_end = std::move(e);
      } else {
        hi = e.lambda;
        hi_end = std::move(e);
      }
    }
    if (!converged) {
      // The open end of the interval is the price bound; evaluate it when no
      // bracketing point on that side exists.
      if (import && !hi_end) hi_end = evaluate(hi);
      if (!import && !lo_end) lo_end = evaluate(lo);
      auto score = [&](const Eval& e) {
        return std::pair{!within_limits(e.demand, lim, cfg.balance_threshold), std::abs(e.residual)};
      };
      const bool take_hi = score(*hi_end) <= score(*lo_end);
      chosen = take_hi ? std::move(*hi_end) : std::move(*lo_end);
      converged = std::abs(chosen.residual) <= cfg.balance_threshold;
    }
  }

  for (std::size_t a = 0; a < seen.size(); ++a)
    for (std::size_t b = 0; b < seen.size(); ++b)
      if (seen[a].first < seen[b].first && seen[a].second < seen[b].second - cfg.balance_threshold)
        rec.anomaly = true;

  rec.lambda_e = chosen.lambda;
  rec.bids = bids_at(chosen.sols, 0);
  rec.transformer = chosen.demand;
  rec.residual = chosen.residual;
  rec.converged = converged;
  rec.price_clamped = chosen.lambda <= cfg.price_floor || chosen.lambda >= cfg.price_ceiling;
  rec.limit_violation = !within_limits(chosen.demand, lim, cfg.balance_threshold);
  out.solutions = std::move(chosen.sols);
  return out;
}

CentralizedResult solve_centralized(const std::vector<MesConfig>& mes, const std::vector<MesState>& states,
                                    const GridParams& grid, const HorizonSpec& horizon) {
  const int n = horizon.length();
  const double dt = horizon.period_length_hours;
  const auto prices = rtp_prices(grid, horizon);

  lp::LinearProgram lp;
  std::vector<P2Instance> parts;
  std::vector<int> col_offset;
  parts.reserve(mes.size());
  for (std::size_t i = 0; i < mes.size(); ++i) {
    parts.push_back(build_p2(mes[i], states.at(i), prices, horizon));
    const auto& p = parts.back().lp;
    const int c0 = lp.num_cols();
    const int r0 = lp.num_rows();
    col_offset.push_back(c0);
    for (int c = 0; c < p.num_cols(); ++c) lp.add_column(p.objective[c], p.lower[c], p.upper[c], p.tags[c]);
    for (int r = 0; r < p.num_rows(); ++r)
      lp.add_row(p.senses[r], p.rhs[r], fmt::format("m{}_{}", mes[i].id, p.row_names[r]), p.range[r]);
    for (const auto& e : p.entries) lp.add_entry(r0 + e.row, c0 + e.col, e.value);
    lp.objective_offset += p.objective_offset;
  }
  std::vector<int> tr_col(n), bal_row(n);
  for (int k = 0; k < n; ++k) {
    const int t = horizon.start_period + k;
    tr_col[k] = lp.add_column(0.0, -grid.transformer_export_max, grid.transformer_import_max, {-1, "transformer", t});
    bal_row[k] = lp.add_row(lp::RowSense::Equal, shared_at(grid, t), fmt::format("balance_{}", t));
    lp.add_entry(bal_row[k], tr_col[k], -1.0);
    for (std::size_t i = 0; i < parts.size(); ++i)
      lp.add_entry(bal_row[k], col_offset[i] + parts[i].layout.at("grid_exchange", k), 1.0);
  }

  const auto sol = lp::solve_simplex(lp);
  CentralizedResult out;
  out.status = sol.status;
  if (!sol.optimal()) return out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const int c0 = col_offset[i];
    std::vector<double> x(sol.x.begin() + c0, sol.x.begin() + c0 + parts[i].lp.num_cols());
    out.schedules.push_back(extract_schedule(parts[i], mes[i], states.at(i), x));
    out.cost += schedule_cost(out.schedules.back(), prices);
  }
  for (int k = 0; k < n; ++k) {
    out.transformer.push_back(sol.x[tr_col[k]]);
    out.balance_duals.push_back(-sol.duals[bal_row[k]] / dt);
  }
  return out;
}

}  // namespace imes
