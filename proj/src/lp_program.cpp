#include "imes/lp.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <unordered_set>

#include <fmt/format.h>

namespace imes::lp {

std::string VariableTag::name() const {
  std::string out = owner >= 0 ? fmt::format("m{}_", owner) : std::string{};
  out += field.empty() ? std::string{"x"} : field;
  if (period >= 0) out += fmt::format("_{}", period);
  return out;
}

int LinearProgram::add_column(double cost, double lo, double hi, VariableTag tag) {
  objective.push_back(cost);
  lower.push_back(lo);
  upper.push_back(hi);
  tags.push_back(std::move(tag));
  return num_cols() - 1;
}

int LinearProgram::add_row(RowSense sense, double rhs_value, std::string name, double range_width) {
  senses.push_back(sense);
  rhs.push_back(rhs_value);
  range.push_back(sense == RowSense::Range ? range_width : 0.0);
  row_names.push_back(std::move(name));
  return num_rows() - 1;
}

void LinearProgram::add_entry(int row, int col, double value) {
  if (value != 0.0) entries.push_back({row, col, value});
}

double LinearProgram::row_lower(int r) const {
  switch (senses[r]) {
    case RowSense::LessEqual: return -kInf;
    case RowSense::Equal:
    case RowSense::GreaterEqual:
    case RowSense::Range: return rhs[r];
  }
  return -kInf;
}

double LinearProgram::row_upper(int r) const {
  switch (senses[r]) {
    case RowSense::GreaterEqual: return kInf;
    case RowSense::Equal:
    case RowSense::LessEqual: return rhs[r];
    case RowSense::Range: return rhs[r] + range[r];
  }
  return kInf;
}

std::optional<int> LinearProgram::find_column(const VariableTag& tag) const {
  for (int j = 0; j < num_cols(); ++j)
    if (tags[j] == tag) return j;
  return std::nullopt;
}

void LinearProgram::validate() const {
  const auto n = objective.size();
  if (lower.size() != n || upper.size() != n || tags.size() != n)
    throw LpError("column arrays have inconsistent lengths");
  const auto m = rhs.size();
  if (senses.size() != m || range.size() != m || row_names.size() != m)
    throw LpError("row arrays have inconsistent lengths");
  for (std::size_t j = 0; j < n; ++j) {
    if (!std::isfinite(objective[j])) throw LpError(fmt::format("objective[{}] is not finite", j));
    if (std::isnan(lower[j]) || std::isnan(upper[j]) || lower[j] == kInf || upper[j] == -kInf)
      throw LpError(fmt::format("column {} has invalid bounds", j));
    if (lower[j] > upper[j])
      throw LpError(fmt::format("column {} ({}) has lower bound {} > upper bound {}", j,
                                tags[j].name(), lower[j], upper[j]));
  }
  for (std::size_t i = 0; i < m; ++i) {
    if (!std::isfinite(rhs[i]) || !std::isfinite(range[i]) || range[i] < 0.0)
      throw LpError(fmt::format("row {} has invalid rhs/range", i));
  }
  for (const auto& e : entries) {
    if (e.row < 0 || e.row >= static_cast<int>(m) || e.col < 0 || e.col >= static_cast<int>(n))
      throw LpError("matrix entry out of range");
    if (!std::isfinite(e.value)) throw LpError("matrix entry is not finite");
  }
  std::unordered_set<std::string> seen;
  for (const auto& t : tags) {
    if (t.field.empty()) continue;
    if (!seen.insert(t.name()).second) throw LpError("duplicate variable tag " + t.name());
  }
}

std::vector<Triplet> LinearProgram::canonical_entries() const {
  auto out = entries;
  std::sort(out.begin(), out.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  std::vector<Triplet> merged;
  merged.reserve(out.size());
  for (const auto& e : out) {
    if (!merged.empty() && merged.back().row == e.row && merged.back().col == e.col)
      merged.back().value += e.value;
    else
      merged.push_back(e);
  }
  std::erase_if(merged, [](const Triplet& e) { return e.value == 0.0; });
  return merged;
}

std::vector<double> StandardForm::recover(std::span<const double> standard_x) const {
  std::vector<double> x(recovery.size());
  for (std::size_t j = 0; j < recovery.size(); ++j) {
    const auto& r = recovery[j];
    double v = r.shift;
    if (r.positive >= 0) v += r.sign * standard_x[r.positive];
    if (r.negative >= 0) v -= standard_x[r.negative];
    x[j] = v;
  }
  return x;
}

StandardForm to_standard_form(const LinearProgram& lp) {
  lp.validate();
  StandardForm sf;
  auto& out = sf.program;
  sf.original_rows = lp.num_rows();
  out.objective_offset = lp.objective_offset;

  for (int i = 0; i < lp.num_rows(); ++i) out.add_row(RowSense::Equal, lp.rhs[i], lp.row_names[i]);

  const auto entries = lp.canonical_entries();
  std::vector<std::vector<std::pair<int, double>>> by_col(lp.num_cols());
  for (const auto& e : entries) by_col[e.col].emplace_back(e.row, e.value);

  sf.recovery.resize(lp.num_cols());
  for (int j = 0; j < lp.num_cols(); ++j) {
    const double lo = lp.lower[j];
    const double hi = lp.upper[j];
    const double c = lp.objective[j];
    auto& rec = sf.recovery[j];
    auto tag = lp.tags[j];
    if (std::isfinite(lo)) {
      rec.shift = lo;
      rec.sign = 1.0;
    } else if (std::isfinite(hi)) {
      rec.shift = hi;
      rec.sign = -1.0;
    }
    const bool free_var = !std::isfinite(lo) && !std::isfinite(hi);
    rec.positive = out.add_column(rec.sign * c, 0.0, kInf, tag);
    out.objective_offset += c * rec.shift;
    for (auto [row, a] : by_col[j]) {
      out.add_entry(row, rec.positive, rec.sign * a);
      out.rhs[row] -= a * rec.shift;
    }
    if (free_var) {
      auto neg_tag = tag;
      if (!neg_tag.field.empty()) neg_tag.field += "_neg";
      rec.negative = out.add_column(-c, 0.0, kInf, neg_tag);
      for (auto [row, a] : by_col[j]) out.add_entry(row, rec.negative, -a);
    }
    if (std::isfinite(lo) && std::isfinite(hi)) {
      const int r = out.add_row(RowSense::Equal, hi - lo, fmt::format("ub_{}", j));
      out.add_entry(r, rec.positive, 1.0);
      const int s = out.add_column(0.0, 0.0, kInf, {-1, fmt::format("ub_slack_{}", j), -1});
      out.add_entry(r, s, 1.0);
    }
  }

  for (int i = 0; i < lp.num_rows(); ++i) {
    switch (lp.senses[i]) {
      case RowSense::Equal: break;
      case RowSense::LessEqual: {
        const int s = out.add_column(0.0, 0.0, kInf, {-1, fmt::format("slack_{}", i), -1});
        out.add_entry(i, s, 1.0);
        break;
      }
      case RowSense::GreaterEqual: {
        const int s = out.add_column(0.0, 0.0, kInf, {-1, fmt::format("surplus_{}", i), -1});
        out.add_entry(i, s, -1.0);
        break;
      }
      case RowSense::Range: {
        // a'x - s = rhs, s + t = range
        const int s = out.add_column(0.0, 0.0, kInf, {-1, fmt::format("range_{}", i), -1});
        out.add_entry(i, s, -1.0);
        const int r = out.add_row(RowSense::Equal, lp.range[i], fmt::format("range_ub_{}", i));
        out.add_entry(r, s, 1.0);
        const int t = out.add_column(0.0, 0.0, kInf, {-1, fmt::format("range_slack_{}", i), -1});
        out.add_entry(r, t, 1.0);
        break;
      }
    }
  }
  return sf;
}

namespace {

std::string mps_name(std::string_view raw, std::string_view fallback) {
  std::string s(raw.empty() ? fallback : raw);
  for (auto& ch : s)
    if (ch == ' ') ch = '_';
  return s;
}

std::string mps_number(double v) { return fmt::format("{:.12g}", v); }

}  // namespace

void write_mps(const LinearProgram& lp, std::ostream& out, std::string_view name) {
  lp.validate();
  const auto entries = lp.canonical_entries();
  std::vector<std::string> rows(lp.num_rows());
  for (int i = 0; i < lp.num_rows(); ++i) rows[i] = mps_name(lp.row_names[i], fmt::format("R{}", i));
  std::vector<std::string> cols(lp.num_cols());
  for (int j = 0; j < lp.num_cols(); ++j)
    cols[j] = mps_name(lp.tags[j].field.empty() ? std::string{} : lp.tags[j].name(), fmt::format("C{}", j));

  out << fmt::format("{:<14}{}\n", "NAME", name);
  out << "ROWS\n";
  out << " N  COST\n";
  for (int i = 0; i < lp.num_rows(); ++i) {
    const char* kind = "E";
    if (lp.senses[i] == RowSense::LessEqual) kind = "L";
    if (lp.senses[i] == RowSense::GreaterEqual || lp.senses[i] == RowSense::Range) kind = "G";
    out << fmt::format(" {:<2} {}\n", kind, rows[i]);
  }
  out << "COLUMNS\n";
  std::vector<std::vector<std::pair<int, double>>> by_col(lp.num_cols());
  for (const auto& e : entries) by_col[e.col].emplace_back(e.row, e.value);
  for (int j = 0; j < lp.num_cols(); ++j) {
    if (lp.objective[j] != 0.0)
      out << fmt::format("    {:<8}  {:<8}  {:>12}\n", cols[j], "COST", mps_number(lp.objective[j]));
    for (auto [r, v] : by_col[j])
      out << fmt::format("    {:<8}  {:<8}  {:>12}\n", cols[j], rows[r], mps_number(v));
  }
  out << "RHS\n";
  if (lp.objective_offset != 0.0)
    out << fmt::format("    {:<8}  {:<8}  {:>12}\n", "RHS", "COST", mps_number(-lp.objective_offset));
  for (int i = 0; i < lp.num_rows(); ++i)
    if (lp.rhs[i] != 0.0) out << fmt::format("    {:<8}  {:<8}  {:>12}\n", "RHS", rows[i], mps_number(lp.rhs[i]));
  bool any_range = false;
  for (int i = 0; i < lp.num_rows(); ++i) {
    if (lp.senses[i] != RowSense::Range) continue;
    if (!any_range) out << "RANGES\n";
    any_range = true;
    out << fmt::format("    {:<8}  {:<8}  {:>12}\n", "RNG", rows[i], mps_number(lp.range[i]));
  }
  out << "BOUNDS\n";
  for (int j = 0; j < lp.num_cols(); ++j) {
    const double lo = lp.lower[j];
    const double hi = lp.upper[j];
    if (lo == hi) {
      out << fmt::format(" FX {:<8}  {:<8}  {:>12}\n", "BND", cols[j], mps_number(lo));
      continue;
    }
    if (!std::isfinite(lo) && !std::isfinite(hi)) {
      out << fmt::format(" FR {:<8}  {}\n", "BND", cols[j]);
      continue;
    }
    if (!std::isfinite(lo)) out << fmt::format(" MI {:<8}  {}\n", "BND", cols[j]);
    else if (lo != 0.0) out << fmt::format(" LO {:<8}  {:<8}  {:>12}\n", "BND", cols[j], mps_number(lo));
    if (std::isfinite(hi)) out << fmt::format(" UP {:<8}  {:<8}  {:>12}\n", "BND", cols[j], mps_number(hi));
  }
  out << "ENDATA\n";
}

std::string_view to_string(LpStatus status) {
  switch (status) {
    case LpStatus::Optimal: return "Optimal";
    case LpStatus::Infeasible: return "Infeasible";
    case LpStatus::Unbounded: return "Unbounded";
    case LpStatus::IterationLimit: return "IterationLimit";
  }
  return "?";
}

}  // namespace imes::lp
