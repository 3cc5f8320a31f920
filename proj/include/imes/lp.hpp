#pragma once

// Linear-programming kernel: problem container, standard-form conversion,
// a bounded revised simplex with warm starts, and a brute-force vertex
// enumeration oracle for testing.

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace imes::lp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

class LpError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class RowSense : std::uint8_t { LessEqual, Equal, GreaterEqual, Range };

struct Triplet {
  int row = 0;
  int col = 0;
  double value = 0.0;
};

/// Maps a column back to the domain quantity it represents.
struct VariableTag {
  int owner = -1;      ///< MES id (or -1 for coordinator-level columns)
  std::string field;   ///< schedule field name, e.g. "grid_exchange"
  int period = -1;     ///< period index, -1 for non-periodic columns

  std::string name() const;
  bool operator==(const VariableTag&) const = default;
};

/// min c'x + offset  s.t.  row_i(x) {<=,=,>=,in [rhs, rhs+range]} rhs_i,  lower <= x <= upper.
struct LinearProgram {
  std::vector<double> objective;
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<VariableTag> tags;

  std::vector<RowSense> senses;
  std::vector<double> rhs;
  std::vector<double> range;  ///< width of Range rows, 0 elsewhere
  std::vector<std::string> row_names;

  std::vector<Triplet> entries;
  double objective_offset = 0.0;

  int num_cols() const { return static_cast<int>(objective.size()); }
  int num_rows() const { return static_cast<int>(rhs.size()); }

  int add_column(double cost, double lo, double hi, VariableTag tag = {});
  int add_row(RowSense sense, double rhs_value, std::string name = {}, double range_width = 0.0);
  void add_entry(int row, int col, double value);

  /// Lower/upper activity bounds implied by the sense of row `r`.
  double row_lower(int r) const;
  double row_upper(int r) const;

  std::optional<int> find_column(const VariableTag& tag) const;

  /// Throws LpError on inconsistent dimensions, non-finite data, duplicate tags
  /// or crossed bounds.
  void validate() const;

  /// Entries sorted row-major with duplicates merged.
  std::vector<Triplet> canonical_entries() const;
};

/// Equality-only, nonnegative-variable form of a LinearProgram.
struct StandardForm {
  struct Recovery {
    int positive = -1;  ///< column carrying the (shifted, possibly reflected) value
    int negative = -1;  ///< second column of a free-variable split
    double shift = 0.0;
    double sign = 1.0;
  };

  LinearProgram program;
  std::vector<Recovery> recovery;  ///< one per original column
  int original_rows = 0;

  std::vector<double> recover(std::span<const double> standard_x) const;
};

StandardForm to_standard_form(const LinearProgram& lp);

struct ToleranceSet {
  double feasibility = 1e-7;
  double optimality = 1e-7;
  double pivot = 1e-9;
  long iteration_limit = 0;  ///< 0 selects 50 * (rows + cols)
  int degenerate_stall = 50; ///< consecutive degenerate pivots before Bland's rule
  int refactor_interval = 50;
};

enum class LpStatus : std::uint8_t { Optimal, Infeasible, Unbounded, IterationLimit };

std::string_view to_string(LpStatus status);

enum class BasisStatus : std::uint8_t { Basic, AtLower, AtUpper, Free, Fixed };

struct LpSolution {
  LpStatus status = LpStatus::IterationLimit;
  std::vector<double> x;              ///< structural values
  double objective = 0.0;             ///< includes objective_offset
  std::vector<double> duals;          ///< d objective / d rhs, one per row
  std::vector<double> reduced_costs;  ///< one per column
  std::vector<BasisStatus> column_status;
  std::vector<BasisStatus> row_status;
  double phase1_infeasibility = 0.0;  ///< sum of bound violations when phase 1 stopped
  std::vector<double> ray;            ///< improving direction when Unbounded
  long iterations = 0;
  bool used_bland = false;

  bool optimal() const { return status == LpStatus::Optimal; }
};

/// Bounded-variable revised simplex on [A -I][x; s] = 0 with the row
/// activities s carrying the row bounds. Dense LU of the basis with a
/// product-form eta file between refactorizations.
///
/// The solver keeps its basis and factorization between calls, so changing
/// only the objective and re-solving restarts phase 2 from the previous
/// optimal vertex.
class SimplexSolver {
 public:
  explicit SimplexSolver(const LinearProgram& lp, ToleranceSet tol = {});
  ~SimplexSolver();
  SimplexSolver(SimplexSolver&&) noexcept;
  SimplexSolver& operator=(SimplexSolver&&) noexcept;
  SimplexSolver(const SimplexSolver&) = delete;
  SimplexSolver& operator=(const SimplexSolver&) = delete;

  void set_objective(std::span<const double> cost);
  void set_objective_coefficient(int col, double cost);
  double objective_coefficient(int col) const;

  LpSolution solve();

  int num_rows() const;
  int num_cols() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

LpSolution solve_simplex(const LinearProgram& lp, const ToleranceSet& tol = {});

/// Exhaustive basic-feasible-solution enumeration on the standard form.
/// Ground truth for small instances only.
inline constexpr int kOracleMaxColumns = 12;
LpSolution vertex_oracle(const LinearProgram& lp);

/// Fixed-column MPS dump for cross-checking with external solvers.
void write_mps(const LinearProgram& lp, std::ostream& out, std::string_view name = "IMES");

}  // namespace imes::lp
