#include <algorithm>
#include <cmath>
#include <optional>

#include "imes/lp.hpp"

namespace imes::lp {
namespace {

using Matrix = std::vector<std::vector<double>>;

constexpr double kZero = 1e-9;

std::optional<std::vector<double>> solve_square(Matrix a, std::vector<double> b) {
  const int n = static_cast<int>(b.size());
  for (int k = 0; k < n; ++k) {
    int p = k;
    for (int i = k + 1; i < n; ++i)
      if (std::abs(a[i][k]) > std::abs(a[p][k])) p = i;
    if (std::abs(a[p][k]) < 1e-10) return std::nullopt;
    std::swap(a[k], a[p]);
    std::swap(b[k], b[p]);
    for (int i = k + 1; i < n; ++i) {
      const double f = a[i][k] / a[k][k];
      if (f == 0.0) continue;
      for (int j = k; j < n; ++j) a[i][j] -= f * a[k][j];
      b[i] -= f * b[k];
    }
  }
  std::vector<double> x(n);
  for (int k = n - 1; k >= 0; --k) {
    double s = b[k];
    for (int j = k + 1; j < n; ++j) s -= a[k][j] * x[j];
    x[k] = s / a[k][k];
  }
  return x;
}

/// Row-reduces [A | b] and drops dependent rows. Returns false when a
/// dependent row has a nonzero right-hand side.
bool independent_rows(Matrix& a, std::vector<double>& b) {
  const int m = static_cast<int>(a.size());
  if (m == 0) return true;
  const int n = static_cast<int>(a[0].size());
  Matrix r = a;
  std::vector<double> rb = b;
  int rank = 0;
  for (int col = 0; col < n && rank < m; ++col) {
    int p = -1;
    double best = 1e-10;
    for (int i = rank; i < m; ++i)
      if (std::abs(r[i][col]) > best) {
        best = std::abs(r[i][col]);
        p = i;
      }
    if (p < 0) continue;
    std::swap(r[rank], r[p]);
    std::swap(rb[rank], rb[p]);
    for (int i = 0; i < m; ++i) {
      if (i == rank) continue;
      const double f = r[i][col] / r[rank][col];
      if (f == 0.0) continue;
      for (int j = 0; j < n; ++j) r[i][j] -= f * r[rank][j];
      rb[i] -= f * rb[rank];
    }
    ++rank;
  }
  for (int i = rank; i < m; ++i)
    if (std::abs(rb[i]) > 1e-8) return false;
  r.resize(rank);
  rb.resize(rank);
  a = std::move(r);
  b = std::move(rb);
  return true;
}

template <class Visit>
void for_each_subset(int n, int k, Visit&& visit) {
  std::vector<int> idx(k);
  for (int i = 0; i < k; ++i) idx[i] = i;
  if (k > n) return;
  for (;;) {
    visit(idx);
    int i = k - 1;
    while (i >= 0 && idx[i] == n - k + i) --i;
    if (i < 0) return;
    ++idx[i];
    for (int j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
}

/// Minimum of c'x over {x >= 0, A x = b} restricted to basic solutions.
std::optional<std::pair<double, std::vector<double>>> best_vertex(const Matrix& a,
                                                                  const std::vector<double>& b,
                                                                  const std::vector<double>& c) {
  const int m = static_cast<int>(a.size());
  const int n = static_cast<int>(c.size());
  std::optional<std::pair<double, std::vector<double>>> best;
  auto consider = [&](const std::vector<int>& cols) {
    Matrix basis(m, std::vector<double>(m));
    for (int i = 0; i < m; ++i)
      for (int k = 0; k < m; ++k) basis[i][k] = a[i][cols[k]];
    auto xb = solve_square(std::move(basis), b);
    if (!xb) return;
    std::vector<double> x(n, 0.0);
    for (int k = 0; k < m; ++k) {
      if ((*xb)[k] < -kZero) return;
      x[cols[k]] = std::max(0.0, (*xb)[k]);
    }
    double obj = 0.0;
    for (int j = 0; j < n; ++j) obj += c[j] * x[j];
    if (!best || obj < best->first - 1e-12) best.emplace(obj, std::move(x));
  };
  if (m == 0) {
    consider({});
  } else {
    for_each_subset(n, m, consider);
  }
  return best;
}

}  // namespace

LpSolution vertex_oracle(const LinearProgram& lp) {
  const StandardForm sf = to_standard_form(lp);
  const auto& p = sf.program;
  const int n = p.num_cols();
  if (n > kOracleMaxColumns) throw LpError("vertex_oracle: too many standard-form columns");
  const int m = p.num_rows();

  Matrix a(m, std::vector<double>(n, 0.0));
  for (const auto& e : p.canonical_entries()) a[e.row][e.col] = e.value;
  std::vector<double> b = p.rhs;

  LpSolution sol;
  sol.iterations = 0;
  if (!independent_rows(a, b)) {
    sol.status = LpStatus::Infeasible;
    return sol;
  }
  const auto vertex = best_vertex(a, b, p.objective);
  if (!vertex) {
    sol.status = LpStatus::Infeasible;
    return sol;
  }

  // Recession cone {d >= 0, A d = 0}, normalised by sum(d) = 1.
  Matrix cone = a;
  std::vector<double> cone_rhs(cone.size(), 0.0);
  cone.emplace_back(n, 1.0);
  cone_rhs.push_back(1.0);
  if (independent_rows(cone, cone_rhs)) {
    const auto ray = best_vertex(cone, cone_rhs, p.objective);
    if (ray && ray->first < -kZero) {
      sol.status = LpStatus::Unbounded;
      std::vector<double> shifted = ray->second;
      // Directions do not carry the bound shift.
      sol.ray.assign(sf.recovery.size(), 0.0);
      for (std::size_t j = 0; j < sf.recovery.size(); ++j) {
        const auto& r = sf.recovery[j];
        double v = 0.0;
        if (r.positive >= 0) v += r.sign * shifted[r.positive];
        if (r.negative >= 0) v -= shifted[r.negative];
        sol.ray[j] = v;
      }
      return sol;
    }
  }

  sol.status = LpStatus::Optimal;
  sol.x = sf.recover(vertex->second);
  double obj = lp.objective_offset;
  for (int j = 0; j < lp.num_cols(); ++j) obj += lp.objective[j] * sol.x[j];
  sol.objective = obj;
  return sol;
}

}  // namespace imes::lp
