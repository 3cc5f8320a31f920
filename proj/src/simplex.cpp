#include <algorithm>
#include <cmath>
#include <numeric>

#include "imes/lp.hpp"

namespace imes::lp {
namespace {

/// Dense LU with partial (row) pivoting, P B = L U. Elimination skips zero
/// multipliers and zero pivot-row entries, which keeps the cost close to the
/// fill of the typical sparse basis.
class DenseLu {
 public:
  /// Returns the basis position whose column has no acceptable pivot, or -1.
  int factor(int m, std::vector<double>& a, std::vector<int>& remaining_rows) {
    m_ = m;
    lu_.swap(a);
    perm_.resize(m);
    std::iota(perm_.begin(), perm_.end(), 0);
    std::vector<int> nz;
    nz.reserve(m);
    for (int k = 0; k < m; ++k) {
      int p = -1;
      double best = 0.0;
      for (int i = k; i < m; ++i) {
        const double v = std::abs(at(i, k));
        if (v > best) {
          best = v;
          p = i;
        }
      }
      if (best < kSingular) {
        remaining_rows.assign(perm_.begin() + k, perm_.end());
        return k;
      }
      if (p != k) {
        for (int j = 0; j < m; ++j) std::swap(at(k, j), at(p, j));
        std::swap(perm_[k], perm_[p]);
      }
      const double pivot = at(k, k);
      nz.clear();
      double* colk = &lu_[static_cast<std::size_t>(k) * m];
      for (int i = k + 1; i < m; ++i) {
        if (colk[i] != 0.0) {
          colk[i] /= pivot;
          nz.push_back(i);
        }
      }
      if (nz.empty()) continue;
      for (int j = k + 1; j < m; ++j) {
        double* colj = &lu_[static_cast<std::size_t>(j) * m];
        const double akj = colj[k];
        if (akj == 0.0) continue;
        for (int i : nz) colj[i] -= colk[i] * akj;
      }
    }
    return -1;
  }

  void solve(std::vector<double>& b) const {
    tmp_.resize(m_);
    for (int k = 0; k < m_; ++k) tmp_[k] = b[perm_[k]];
    for (int k = 0; k < m_; ++k) {
      const double v = tmp_[k];
      if (v == 0.0) continue;
      const double* col = &lu_[static_cast<std::size_t>(k) * m_];
      for (int i = k + 1; i < m_; ++i) tmp_[i] -= col[i] * v;
    }
    for (int k = m_ - 1; k >= 0; --k) {
      const double* col = &lu_[static_cast<std::size_t>(k) * m_];
      if (tmp_[k] == 0.0) continue;
      const double v = tmp_[k] / col[k];
      tmp_[k] = v;
      for (int i = 0; i < k; ++i) tmp_[i] -= col[i] * v;
    }
    for (int k = 0; k < m_; ++k) b[k] = tmp_[k];
  }

  void solve_transpose(std::vector<double>& c) const {
    tmp_.resize(m_);
    for (int k = 0; k < m_; ++k) {
      const double* col = &lu_[static_cast<std::size_t>(k) * m_];
      double s = c[k];
      for (int i = 0; i < k; ++i) s -= col[i] * tmp_[i];
      tmp_[k] = s / col[k];
    }
    for (int k = m_ - 1; k >= 0; --k) {
      const double* col = &lu_[static_cast<std::size_t>(k) * m_];
      double s = tmp_[k];
      for (int i = k + 1; i < m_; ++i) s -= col[i] * tmp_[i];
      tmp_[k] = s;
    }
    for (int k = 0; k < m_; ++k) c[perm_[k]] = tmp_[k];
  }

 private:
  static constexpr double kSingular = 1e-11;
  double& at(int i, int j) { return lu_[static_cast<std::size_t>(j) * m_ + i]; }

  int m_ = 0;
  std::vector<double> lu_;
  std::vector<int> perm_;
  mutable std::vector<double> tmp_;
};

struct Eta {
  int row = 0;
  double pivot = 1.0;
  std::vector<int> index;
  std::vector<double> value;
};

}  // namespace

struct SimplexSolver::Impl {
  ToleranceSet tol;
  int m = 0;
  int n = 0;
  double offset = 0.0;

  std::vector<int> col_start;
  std::vector<int> row_index;
  std::vector<double> value;

  std::vector<double> lo, hi, cost, x;
  std::vector<BasisStatus> status;
  std::vector<int> head;   // basis position -> variable
  std::vector<int> where;  // variable -> basis position or -1

  DenseLu lu;
  std::vector<Eta> etas;
  bool factor_valid = false;

  std::vector<double> y, alpha, work, cb;

  explicit Impl(const LinearProgram& lp, ToleranceSet t) : tol(t) {
    lp.validate();
    m = lp.num_rows();
    n = lp.num_cols();
    offset = lp.objective_offset;
    const auto entries = lp.canonical_entries();
    col_start.assign(n + 1, 0);
    for (const auto& e : entries) ++col_start[e.col + 1];
    for (int j = 0; j < n; ++j) col_start[j + 1] += col_start[j];
    row_index.resize(entries.size());
    value.resize(entries.size());
    std::vector<int> fill(col_start.begin(), col_start.end() - 1);
    for (const auto& e : entries) {
      row_index[fill[e.col]] = e.row;
      value[fill[e.col]++] = e.value;
    }
    const int total = n + m;
    lo.resize(total);
    hi.resize(total);
    cost.assign(total, 0.0);
    for (int j = 0; j < n; ++j) {
      lo[j] = lp.lower[j];
      hi[j] = lp.upper[j];
      cost[j] = lp.objective[j];
    }
    for (int i = 0; i < m; ++i) {
      lo[n + i] = lp.row_lower(i);
      hi[n + i] = lp.row_upper(i);
    }
    x.assign(total, 0.0);
    status.resize(total);
    where.assign(total, -1);
    head.resize(m);
    for (int j = 0; j < n; ++j) place_at_bound(j);
    for (int i = 0; i < m; ++i) {
      head[i] = n + i;
      where[n + i] = i;
      status[n + i] = BasisStatus::Basic;
    }
    y.resize(m);
    alpha.resize(m);
    work.resize(m);
    cb.resize(m);
  }

  void place_at_bound(int j, double hint = 0.0) {
    const bool lfin = std::isfinite(lo[j]);
    const bool hfin = std::isfinite(hi[j]);
    if (lfin && hfin && lo[j] == hi[j]) {
      status[j] = BasisStatus::Fixed;
      x[j] = lo[j];
    } else if (lfin && hfin) {
      const bool upper = std::abs(hint - hi[j]) < std::abs(hint - lo[j]);
      status[j] = upper ? BasisStatus::AtUpper : BasisStatus::AtLower;
      x[j] = upper ? hi[j] : lo[j];
    } else if (lfin) {
      status[j] = BasisStatus::AtLower;
      x[j] = lo[j];
    } else if (hfin) {
      status[j] = BasisStatus::AtUpper;
      x[j] = hi[j];
    } else {
      status[j] = BasisStatus::Free;
      x[j] = 0.0;
    }
  }

  void load_column(int j, std::vector<double>& v) const {
    std::fill(v.begin(), v.end(), 0.0);
    if (j < n) {
      for (int k = col_start[j]; k < col_start[j + 1]; ++k) v[row_index[k]] = value[k];
    } else {
      v[j - n] = -1.0;
    }
  }

  double column_dot(int j, const std::vector<double>& vec) const {
    if (j >= n) return -vec[j - n];
    double s = 0.0;
    for (int k = col_start[j]; k < col_start[j + 1]; ++k) s += value[k] * vec[row_index[k]];
    return s;
  }

  void refactor() {
    for (int attempt = 0; attempt <= m; ++attempt) {
      std::vector<double> dense(static_cast<std::size_t>(m) * m, 0.0);
      for (int p = 0; p < m; ++p) {
        const int j = head[p];
        double* col = &dense[static_cast<std::size_t>(p) * m];
        if (j < n) {
          for (int k = col_start[j]; k < col_start[j + 1]; ++k) col[row_index[k]] = value[k];
        } else {
          col[j - n] = -1.0;
        }
      }
      std::vector<int> remaining;
      const int bad = lu.factor(m, dense, remaining);
      if (bad < 0) break;
      // Replace the dependent column by a logical of an unpivoted row.
      int replacement = -1;
      for (int r : remaining)
        if (where[n + r] < 0) {
          replacement = n + r;
          break;
        }
      if (replacement < 0) throw LpError("basis repair failed");
      const int out = head[bad];
      where[out] = -1;
      place_at_bound(out, x[out]);
      head[bad] = replacement;
      where[replacement] = bad;
      status[replacement] = BasisStatus::Basic;
    }
    etas.clear();
    factor_valid = true;
  }

  void ftran(std::vector<double>& v) const {
    lu.solve(v);
    for (const auto& e : etas) {
      const double vr = v[e.row] / e.pivot;
      v[e.row] = vr;
      if (vr == 0.0) continue;
      for (std::size_t k = 0; k < e.index.size(); ++k) v[e.index[k]] -= e.value[k] * vr;
    }
  }

  void btran(std::vector<double>& v) const {
    for (auto it = etas.rbegin(); it != etas.rend(); ++it) {
      double s = v[it->row];
      for (std::size_t k = 0; k < it->index.size(); ++k) s -= it->value[k] * v[it->index[k]];
      v[it->row] = s / it->pivot;
    }
    lu.solve_transpose(v);
  }

  void compute_basic_values() {
    std::fill(work.begin(), work.end(), 0.0);
    for (int j = 0; j < n + m; ++j) {
      if (where[j] >= 0 || x[j] == 0.0) continue;
      if (j < n) {
        for (int k = col_start[j]; k < col_start[j + 1]; ++k) work[row_index[k]] -= value[k] * x[j];
      } else {
        work[j - n] += x[j];
      }
    }
    ftran(work);
    for (int p = 0; p < m; ++p) x[head[p]] = work[p];
  }

  double infeasibility() const {
    double s = 0.0;
    for (int p = 0; p < m; ++p) {
      const int j = head[p];
      if (x[j] < lo[j] - tol.feasibility) s += lo[j] - x[j];
      else if (x[j] > hi[j] + tol.feasibility) s += x[j] - hi[j];
    }
    return s;
  }

  bool can_increase(int j) const {
    return status[j] == BasisStatus::AtLower || status[j] == BasisStatus::Free;
  }
  bool can_decrease(int j) const {
    return status[j] == BasisStatus::AtUpper || status[j] == BasisStatus::Free;
  }

  LpSolution run();
  void fill_solution(LpSolution& sol);
};

LpSolution SimplexSolver::Impl::run() {
  LpSolution sol;
  const long limit = tol.iteration_limit > 0 ? tol.iteration_limit : 50L * (m + n);
  if (!factor_valid) refactor();
  compute_basic_values();
  int phase = infeasibility() > 0.0 ? 1 : 2;
  bool bland = false;
  int stall = 0;
  int verify_rounds = 0;
  std::vector<char> rejected(n + m, 0);
  bool any_rejected = false;

  for (;;) {
    if (sol.iterations >= limit) {
      sol.status = LpStatus::IterationLimit;
      sol.phase1_infeasibility = infeasibility();
      break;
    }
    if (static_cast<int>(etas.size()) >= tol.refactor_interval) {
      refactor();
      compute_basic_values();
      if (phase == 2 && infeasibility() > 0.0) phase = 1;
    }

    for (int p = 0; p < m; ++p) {
      const int j = head[p];
      if (phase == 1) {
        cb[p] = x[j] < lo[j] - tol.feasibility ? -1.0 : (x[j] > hi[j] + tol.feasibility ? 1.0 : 0.0);
      } else {
        cb[p] = cost[j];
      }
    }
    y = cb;
    btran(y);

    // Pricing.
    int q = -1;
    double q_dir = 0.0;
    double best = 0.0;
    for (int j = 0; j < n + m; ++j) {
      if (where[j] >= 0 || status[j] == BasisStatus::Fixed || rejected[j]) continue;
      const double cj = phase == 1 ? 0.0 : cost[j];
      const double d = cj - column_dot(j, y);
      double dir = 0.0;
      if (d < -tol.optimality && can_increase(j)) dir = 1.0;
      else if (d > tol.optimality && can_decrease(j)) dir = -1.0;
      if (dir == 0.0) continue;
      if (bland) {
        q = j;
        q_dir = dir;
        break;
      }
      if (std::abs(d) > best * (1.0 + 1e-9)) {
        best = std::abs(d);
        q = j;
        q_dir = dir;
      }
    }

    if (q < 0) {
      if (any_rejected) {
        std::fill(rejected.begin(), rejected.end(), 0);
        any_rejected = false;
        refactor();
        compute_basic_values();
        continue;
      }
      if (phase == 1) {
        const double inf = infeasibility();
        if (inf > 0.0) {
          sol.status = LpStatus::Infeasible;
          sol.phase1_infeasibility = inf;
          break;
        }
        phase = 2;
        continue;
      }
      if (!etas.empty() && verify_rounds < 3) {
        ++verify_rounds;
        refactor();
        compute_basic_values();
        if (infeasibility() > 0.0) phase = 1;
        continue;
      }
      sol.status = LpStatus::Optimal;
      break;
    }

    load_column(q, alpha);
    ftran(alpha);

    // Ratio test. Basic variable p moves at rate delta_p = -dir * alpha_p.
    double theta = kInf;
    int leave = -1;
    bool leave_upper = false;
    if (std::isfinite(lo[q]) && std::isfinite(hi[q])) theta = hi[q] - lo[q];
    double best_rate = 0.0;
    int best_index = n + m;
    const double tie = 1e-12;
    for (int p = 0; p < m; ++p) {
      const double delta = -q_dir * alpha[p];
      if (std::abs(delta) <= tol.pivot) continue;
      const int j = head[p];
      const double v = x[j];
      double ratio = kInf;
      bool to_upper = false;
      const bool below = phase == 1 && v < lo[j] - tol.feasibility;
      const bool above = phase == 1 && v > hi[j] + tol.feasibility;
      if (below) {
        if (delta > 0.0) ratio = (lo[j] - v) / delta;
      } else if (above) {
        if (delta < 0.0) {
          ratio = (hi[j] - v) / delta;
          to_upper = true;
        }
      } else if (delta > 0.0) {
        if (std::isfinite(hi[j])) {
          ratio = std::max(0.0, (hi[j] - v) / delta);
          to_upper = true;
        }
      } else if (std::isfinite(lo[j])) {
        ratio = std::max(0.0, (lo[j] - v) / delta);
      }
      if (!std::isfinite(ratio)) continue;
      bool take = false;
      if (!std::isfinite(theta)) {
        take = true;
      } else {
        const double eps = tie * (1.0 + std::abs(theta));
        if (ratio < theta - eps) take = true;
        else if (ratio <= theta + eps)
          take = leave < 0 || (bland ? j < best_index : std::abs(delta) > best_rate);
      }
      if (take) {
        theta = std::min(ratio, theta);
        leave = p;
        leave_upper = to_upper;
        best_rate = std::abs(delta);
        best_index = j;
      }
    }

    if (!std::isfinite(theta)) {
      if (phase == 2) {
        sol.status = LpStatus::Unbounded;
        sol.ray.assign(n, 0.0);
        if (q < n) sol.ray[q] = q_dir;
        for (int p = 0; p < m; ++p)
          if (head[p] < n) sol.ray[head[p]] = -q_dir * alpha[p];
        break;
      }
      rejected[q] = 1;
      any_rejected = true;
      continue;
    }

    if (leave >= 0 && std::abs(alpha[leave]) < 1e-7 && !etas.empty()) {
      // Weak pivot on a stale factorization; refresh and retry.
      refactor();
      compute_basic_values();
      continue;
    }

    // Move.
    x[q] += q_dir * theta;
    for (int p = 0; p < m; ++p) x[head[p]] -= q_dir * theta * alpha[p];

    if (leave < 0) {
      status[q] = q_dir > 0 ? BasisStatus::AtUpper : BasisStatus::AtLower;
      x[q] = q_dir > 0 ? hi[q] : lo[q];
    } else {
      const int out = head[leave];
      where[out] = -1;
      if (lo[out] == hi[out]) {
        status[out] = BasisStatus::Fixed;
        x[out] = lo[out];
      } else {
        status[out] = leave_upper ? BasisStatus::AtUpper : BasisStatus::AtLower;
        x[out] = leave_upper ? hi[out] : lo[out];
      }
      head[leave] = q;
      where[q] = leave;
      status[q] = BasisStatus::Basic;
      Eta eta;
      eta.row = leave;
      eta.pivot = alpha[leave];
      for (int p = 0; p < m; ++p) {
        if (p == leave || alpha[p] == 0.0) continue;
        eta.index.push_back(p);
        eta.value.push_back(alpha[p]);
      }
      etas.push_back(std::move(eta));
    }

    if (any_rejected) {
      std::fill(rejected.begin(), rejected.end(), 0);
      any_rejected = false;
    }
    ++sol.iterations;
    if (theta <= 1e-12) {
      if (++stall >= tol.degenerate_stall && !bland) {
        bland = true;
        sol.used_bland = true;
      }
    } else {
      stall = 0;
      bland = false;
    }
  }

  fill_solution(sol);
  return sol;
}

void SimplexSolver::Impl::fill_solution(LpSolution& sol) {
  sol.x.assign(x.begin(), x.begin() + n);
  double obj = offset;
  for (int j = 0; j < n; ++j) obj += cost[j] * x[j];
  sol.objective = obj;
  for (int p = 0; p < m; ++p) cb[p] = cost[head[p]];
  y = cb;
  btran(y);
  sol.duals = y;
  sol.reduced_costs.resize(n);
  for (int j = 0; j < n; ++j) sol.reduced_costs[j] = where[j] >= 0 ? 0.0 : cost[j] - column_dot(j, y);
  sol.column_status.assign(status.begin(), status.begin() + n);
  sol.row_status.assign(status.begin() + n, status.end());
}

SimplexSolver::SimplexSolver(const LinearProgram& lp, ToleranceSet tol)
    : impl_(std::make_unique<Impl>(lp, tol)) {}
SimplexSolver::~SimplexSolver() = default;
SimplexSolver::SimplexSolver(SimplexSolver&&) noexcept = default;
SimplexSolver& SimplexSolver::operator=(SimplexSolver&&) noexcept = default;

void SimplexSolver::set_objective(std::span<const double> c) {
  if (static_cast<int>(c.size()) != impl_->n) throw LpError("objective length mismatch");
  std::copy(c.begin(), c.end(), impl_->cost.begin());
}

void SimplexSolver::set_objective_coefficient(int col, double c) { impl_->cost.at(col) = c; }
double SimplexSolver::objective_coefficient(int col) const { return impl_->cost.at(col); }
int SimplexSolver::num_rows() const { return impl_->m; }
int SimplexSolver::num_cols() const { return impl_->n; }

LpSolution SimplexSolver::solve() { return impl_->run(); }

LpSolution solve_simplex(const LinearProgram& lp, const ToleranceSet& tol) {
  SimplexSolver solver(lp, tol);
  return solver.solve();
}

}  // namespace imes::lp
