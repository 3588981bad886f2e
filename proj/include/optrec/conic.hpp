#pragma once

// Standard-form conic programs and a primal-dual interior-point solver.
//
//   minimize    c'x + offset
//   subject to  A x = b
//               h - G x in K,   K = K_1 x ... x K_p
//
// Each K_i is a nonnegative orthant, a second-order cone
// {(t, u) : t >= ||u||_2}, or a cone of positive semidefinite matrices
// stored in packed form: the lower triangle, column by column, with the
// off-diagonal entries scaled by sqrt(2) so that the Euclidean inner product
// of packed vectors equals the trace inner product of the matrices.
// Decision variables are free; sign constraints are expressed as cone rows.

#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

namespace optrec::conic {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;

enum class ConeKind { nonnegative, second_order, psd };

struct ConeBlock {
  ConeKind kind = ConeKind::nonnegative;
  /// Number of entries for the orthant and the second-order cone; matrix
  /// order for the PSD cone.
  int dim = 0;

  /// Number of rows of G occupied by the block.
  int rows() const { return kind == ConeKind::psd ? dim * (dim + 1) / 2 : dim; }
  /// Contribution to the barrier degree.
  int degree() const { return kind == ConeKind::second_order ? 1 : dim; }
};

/// Index of entry (i, j), i >= j, of a d x d matrix in packed storage.
inline int packed_index(int d, int i, int j) {
  if (i < j) std::swap(i, j);
  return j * d - j * (j - 1) / 2 + (i - j);
}

struct ConicProblem {
  Eigen::VectorXd c;
  double offset = 0.0;
  SparseMatrix A;
  Eigen::VectorXd b;
  SparseMatrix G;
  Eigen::VectorXd h;
  std::vector<ConeBlock> cones;

  int num_variables() const { return static_cast<int>(c.size()); }
  int num_equalities() const { return static_cast<int>(b.size()); }
  int num_cone_rows() const { return static_cast<int>(h.size()); }
  bool is_linear() const;

  /// Throws std::invalid_argument when dimensions disagree or the cone
  /// blocks do not tile the rows of G exactly.
  void validate() const;

  /// Same problem with variables reordered: new variable k is old perm[k].
  ConicProblem permuted(const std::vector<int>& perm) const;
};

/// Writes one "matrix row col value" line per nonzero of c, A, b, G and h,
/// followed by the cone list. Zero-based indices.
void write_triplets(const ConicProblem& problem, std::ostream& out);

// ---------------------------------------------------------------------------
// Modeling layer

/// Affine expression sum_k coeff_k x_{var_k} + constant.
class LinearExpr {
 public:
  LinearExpr() = default;
  LinearExpr(double constant) : constant_(constant) {}  // NOLINT: implicit by intent

  static LinearExpr variable(int index, double coeff = 1.0);

  LinearExpr& add(int index, double coeff);
  LinearExpr& operator+=(const LinearExpr& other);
  LinearExpr& operator-=(const LinearExpr& other);
  LinearExpr& operator*=(double scale);

  friend LinearExpr operator+(LinearExpr lhs, const LinearExpr& rhs) { return lhs += rhs; }
  friend LinearExpr operator-(LinearExpr lhs, const LinearExpr& rhs) { return lhs -= rhs; }
  friend LinearExpr operator*(double scale, LinearExpr e) { return e *= scale; }
  friend LinearExpr operator-(LinearExpr e) { return e *= -1.0; }

  const std::vector<std::pair<int, double>>& terms() const { return terms_; }
  double constant() const { return constant_; }

 private:
  std::vector<std::pair<int, double>> terms_;
  double constant_ = 0.0;
};

/// Contiguous block of decision variables.
struct VarRange {
  int start = 0;
  int size = 0;

  LinearExpr operator[](int k) const { return LinearExpr::variable(start + k); }
  int index(int k) const { return start + k; }
};

class ProblemBuilder {
 public:
  VarRange add_variables(int count);
  int num_variables() const { return num_vars_; }

  void minimize(const LinearExpr& objective);
  /// expr == 0
  void add_equality(const LinearExpr& expr);
  /// expr >= 0
  void add_nonnegative(const LinearExpr& expr);
  /// entries[0] >= || entries[1:] ||
  void add_second_order(const std::vector<LinearExpr>& entries);
  /// Symmetric matrix with entries(i, j), i >= j, is PSD. `lower` is indexed
  /// lower[i][j] for j <= i.
  void add_psd(const std::vector<std::vector<LinearExpr>>& lower);

  ConicProblem build() const;

 private:
  struct Row {
    std::vector<std::pair<int, double>> terms;
    double rhs = 0.0;
  };
  void push_cone_row(const LinearExpr& expr, double scale);

  int num_vars_ = 0;
  LinearExpr objective_;
  std::vector<Row> equalities_;
  std::vector<Row> cone_rows_;
  std::vector<ConeBlock> cones_;
};

// ---------------------------------------------------------------------------
// Solver

enum class Status { optimal, infeasible, unbounded, numerical_failure };

const char* to_string(Status status);

struct SolverOptions {
  double tol = 1e-8;
  int max_iterations = 120;
};

struct ConicSolution {
  Status status = Status::numerical_failure;
  Eigen::VectorXd x;  ///< primal variables
  Eigen::VectorXd s;  ///< cone slacks h - G x
  Eigen::VectorXd y;  ///< equality multipliers
  Eigen::VectorXd z;  ///< cone multipliers
  double primal_objective = 0.0;  ///< c'x + offset
  double dual_objective = 0.0;    ///< -b'y - h'z + offset
  double primal_residual = 0.0;   ///< relative, scaled by max(1, ||b||, ||h||)
  double dual_residual = 0.0;     ///< relative, scaled by max(1, ||c||)
  double gap = 0.0;               ///< min(absolute gap s'z, relative gap)
  int iterations = 0;
  int dropped_equalities = 0;
  std::string message;

  double objective() const { return primal_objective; }
};

/// Solves with the homogeneous self-dual interior-point method. Never throws
/// for numerical trouble; reports Status::numerical_failure instead.
/// Throws std::invalid_argument for malformed problems or tol outside
/// [1e-12, 1e-2].
ConicSolution solve(const ConicProblem& problem, const SolverOptions& options = {});

/// Same contract as solve(); rejects problems with second-order or PSD cones.
ConicSolution lp_solve(const ConicProblem& problem, const SolverOptions& options = {});

}  // namespace optrec::conic
