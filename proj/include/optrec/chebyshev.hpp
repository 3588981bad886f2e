#pragma once

// Chebyshev-basis primitives on [-1, 1].
//
// Moment vectors use one convention throughout the library: entry j
// (zero-based storage index j) holds the functional applied to T_j, i.e.
// the 1-based entry j holds T_{j-1}.

#include <span>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace optrec::cheb {

/// Tolerance beyond [-1, 1] accepted by evaluation routines.
inline constexpr double kDomainSlack = 1e-12;

struct PointEvaluation {
  double x = 0.0;
};

/// f -> (1/2) * integral of f over [-1, 1].
struct NormalizedIntegral {};

struct Atom {
  double location = 0.0;
  double weight = 0.0;
};

struct AtomicMeasure {
  std::vector<Atom> atoms;
};

/// A linear functional on C[-1, 1].
class FunctionalSpec {
 public:
  using Kind = std::variant<PointEvaluation, NormalizedIntegral, AtomicMeasure>;

  static FunctionalSpec point(double x);
  static FunctionalSpec integral();
  static FunctionalSpec atomic(std::vector<Atom> atoms);

  const Kind& kind() const { return kind_; }
  bool is_point() const { return std::holds_alternative<PointEvaluation>(kind_); }
  bool is_integral() const { return std::holds_alternative<NormalizedIntegral>(kind_); }
  bool is_atomic() const { return std::holds_alternative<AtomicMeasure>(kind_); }
  /// Location of a point evaluation; throws std::logic_error otherwise.
  double point_location() const;

  /// Applies the functional to a Chebyshev series sum_j coeffs[j] T_j.
  double apply(const Eigen::VectorXd& coeffs) const;

 private:
  explicit FunctionalSpec(Kind kind) : kind_(std::move(kind)) {}
  Kind kind_;
};

/// Moments of a functional in the Chebyshev basis.
struct ChebMoments {
  Eigen::VectorXd entries;

  Eigen::Index size() const { return entries.size(); }
};

/// (T_0(x), ..., T_{n-1}(x)) by the three-term recurrence.
Eigen::VectorXd values(double x, int n);

/// Evaluates sum_j coeffs[j] T_j(x) (Clenshaw).
double evaluate(const Eigen::VectorXd& coeffs, double x);

/// First N Chebyshev moments of `f`. Normalized-integral moments come from
/// adaptive Gauss-Kronrod quadrature.
ChebMoments moments(const FunctionalSpec& f, int N);

/// Symmetric Toeplitz matrix with first column `u`.
Eigen::MatrixXd toeplitz(const Eigen::VectorXd& u);

struct MomentMatrix {
  Eigen::MatrixXd matrix;  ///< matrix(j, i) = T_j(points[i])
  double condition = 0.0;  ///< 2-norm condition estimate
  bool ill_conditioned = false;
};

inline constexpr double kDefaultConditionThreshold = 1e12;

/// Square Chebyshev-Vandermonde matrix of distinct points.
MomentMatrix moment_matrix(std::span<const double> points,
                           double condition_threshold = kDefaultConditionThreshold);

inline constexpr double kDefaultGridTolerance = 1e-8;

/// K Chebyshev nodes cos(pi (2k-1) / (2K)), k = 1..K, moved away from the
/// exclusions: a node within `tol` of an exclusion e is placed at e + tol
/// (or e - tol when that would leave [-1, 1]).
std::vector<double> grid(int K, std::span<const double> exclusions,
                         double tol = kDefaultGridTolerance);

/// Chebyshev nodes of the first kind without any exclusion handling.
std::vector<double> chebyshev_nodes(int K);

}  // namespace optrec::cheb
