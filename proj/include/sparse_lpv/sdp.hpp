#pragma once

// Semidefinite programs in LMI form:
//
//   minimize    c' y
//   subject to  F_j(y) + margin_j I  <=  0     (negative semidefinite), j = 1..J
//
// where y stacks the entries of all declared variables and every F_j is an
// affine symmetric matrix function of y. Scalar bounds are stored as 1x1
// constraints of family "lower_bound" / "upper_bound".

#include <Eigen/Dense>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace sparse_lpv::sdp {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// One upper-triangular entry (row <= col) of a symmetric block.
struct Entry {
  int row = 0;
  int col = 0;
  double value = 0.0;
  friend bool operator==(const Entry&, const Entry&) = default;
};

struct Term {
  int unknown = 0;
  std::vector<Entry> entries;
  friend bool operator==(const Term&, const Term&) = default;
};

struct Constraint {
  std::string family;  // e.g. "hinf", "bound", "actuator", "lower_bound"
  int vertex = -1;     // polytope vertex index, -1 if vertex independent
  int index = -1;      // actuator index or other family-specific tag
  int dim = 0;
  double margin = 0.0;  // strictness shift: F(y) + margin I <= 0
  std::vector<Entry> constant;
  std::vector<Term> terms;  // sorted by unknown, no duplicates
  friend bool operator==(const Constraint&, const Constraint&) = default;

  /// Dense F(y) (without the margin).
  [[nodiscard]] Matrix evaluate(const Vector& y) const;
};

/// Named block of unknowns. Symmetric variables own the upper triangle
/// (row-major); general ones own every entry (row-major).
struct Variable {
  std::string name;
  int rows = 1;
  int cols = 1;
  bool symmetric = false;
  int offset = 0;
  std::optional<double> lower;  // scalar variables only
  std::optional<double> upper;
  friend bool operator==(const Variable&, const Variable&) = default;

  [[nodiscard]] int size() const { return symmetric ? rows * (rows + 1) / 2 : rows * cols; }
  [[nodiscard]] int unknown(int r, int c) const;
  [[nodiscard]] bool is_scalar() const { return rows == 1 && cols == 1; }
};

class Problem {
 public:
  /// Bounds become 1x1 constraints unless `bound_constraints` is false
  /// (used when the constraints are restored from a dump).
  int add_scalar(std::string name, std::optional<double> lower = std::nullopt,
                 std::optional<double> upper = std::nullopt, bool bound_constraints = true);
  int add_symmetric(std::string name, int dim);
  int add_matrix(std::string name, int rows, int cols);

  void set_objective(int unknown, double coefficient);
  void add_constraint(Constraint c);

  [[nodiscard]] int num_unknowns() const { return num_unknowns_; }
  [[nodiscard]] const std::vector<Variable>& variables() const { return variables_; }
  [[nodiscard]] const Variable& variable(int id) const { return variables_.at(static_cast<std::size_t>(id)); }
  [[nodiscard]] int find_variable(const std::string& name) const;  // -1 if absent
  [[nodiscard]] const std::vector<Constraint>& constraints() const { return constraints_; }
  [[nodiscard]] const Vector& objective() const { return objective_; }

  /// Reassembles the value of variable `id` from the unknown vector.
  [[nodiscard]] Matrix value(int id, const Vector& y) const;

  friend bool operator==(const Problem& a, const Problem& b);

 private:
  int add_variable(Variable v);

  std::vector<Variable> variables_;
  std::vector<Constraint> constraints_;
  Vector objective_;
  int num_unknowns_ = 0;
};

/// Accumulates one symmetric block matrix expression. Block offsets are in
/// rows; contributions to off-diagonal blocks are mirrored automatically.
class LmiBuilder {
 public:
  LmiBuilder(const Problem& problem, int dim);

  /// Adds M at (r0, c0) (and M' at (c0, r0) when off-diagonal). Diagonal
  /// contributions are symmetrized.
  void add_constant(int r0, int c0, const Matrix& M);
  /// Adds scale * Lm * V * Rm for matrix variable V.
  void add_product(int r0, int c0, const Matrix& Lm, int var, const Matrix& Rm, double scale = 1.0);
  /// Adds scale * (Lm V Rm + (Lm V Rm)') to the diagonal block at r0.
  void add_sym_product(int r0, const Matrix& Lm, int var, const Matrix& Rm, double scale = 1.0);
  /// Adds s * M for scalar variable s.
  void add_scalar(int r0, int c0, int var, const Matrix& M);
  /// Adds the selected rows of V: scale * V(rows, :).
  void add_rows(int r0, int c0, int var, int first_row, int num_rows, double scale = 1.0);

  [[nodiscard]] Constraint finish(std::string family, int vertex, int index, double margin) const;

 private:
  Matrix& slot(int unknown);
  void place(Matrix& target, int r0, int c0, const Matrix& M);

  const Problem* problem_;
  int dim_;
  Matrix constant_;
  std::vector<std::pair<int, Matrix>> terms_;
};

enum class Status { kOptimal, kInfeasible, kNumericalFailure, kIterationLimit };

const char* to_string(Status s);

struct Settings {
  double gap_tolerance = 1e-9;     // relative duality gap
  double primal_tolerance = 1e-7;  // relative residual of <A_i, X> = b_i
  double dual_tolerance = 1e-10;   // relative residual of the LMI slack; y is the certificate
  double infeasibility_tolerance = 1e-8;
  int max_iterations = 150;
  double step_fraction = 0.95;
  /// Accepted when progress stalls and residuals are within this factor of the targets.
  double stall_factor = 1e3;
  bool verbose = false;
};

struct Stats {
  int iterations = 0;
  double primal_objective = 0.0;
  double dual_objective = 0.0;
  double relative_gap = 0.0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
};

struct Solution {
  Status status = Status::kNumericalFailure;
  Vector values;            // valid for kOptimal, best effort otherwise
  bool best_effort = true;  // false only when status is kOptimal
  double objective = 0.0;
  Stats stats;
  std::string message;
};

/// Primal-dual interior-point solve (HKM direction, Mehrotra predictor-corrector).
Solution solve(const Problem& problem, const Settings& settings = {});

/// lambda_max(F_j(y) + margin_j I) for every constraint.
std::vector<double> check_feasibility(const Problem& problem, const Vector& y);

/// Largest entry of check_feasibility, -inf for a problem without constraints.
double max_violation(const Problem& problem, const Vector& y);

/// Sparse text dump, one record per nonzero coefficient; lossless.
void write_text(std::ostream& os, const Problem& problem);
Problem read_text(std::istream& is);

}  // namespace sparse_lpv::sdp
