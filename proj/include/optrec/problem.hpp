#pragma once

// Recovery-problem instances and the weights returned by the solvers.

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "optrec/chebyshev.hpp"
#include "optrec/conic.hpp"

namespace optrec {

enum class ModelType { type1, type2 };

const char* to_string(ModelType model);

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Observation noise bounded in the p-norm; the solvers add eta * ||a||_q
/// with q the conjugate exponent of p.
struct NoiseModel {
  double p = kInfinity;  ///< 1, 2 or infinity
  double eta = 0.0;

  /// Conjugate exponent of p.
  double conjugate() const;
};

struct ProblemSpec {
  ModelType model = ModelType::type2;
  int n = 1;                ///< V = polynomials of degree < n
  double epsilon = 0.1;
  double kappa = 1.0;       ///< kInfinity selects the unbounded model
  std::vector<double> points;
  cheb::FunctionalSpec quantity = cheb::FunctionalSpec::integral();
  std::optional<NoiseModel> noise;

  int m() const { return static_cast<int>(points.size()); }
  bool kappa_infinite() const { return std::isinf(kappa); }
  bool has_noise() const { return noise.has_value() && noise->eta > 0.0; }

  /// Throws SpecError naming the first offending field.
  void validate() const;

  /// Observation points plus the quantity location for point evaluations.
  std::vector<double> excluded_points() const;
};

/// C(j, i) = T_j(points[i]), j < rows.
Eigen::MatrixXd observation_matrix(const std::vector<double>& points, int rows);

struct Diagnostics {
  conic::Status status = conic::Status::numerical_failure;
  int iterations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double gap = 0.0;
  int dropped_equalities = 0;
  std::string message;
  std::vector<std::string> warnings;

  bool optimal() const { return status == conic::Status::optimal; }

  static Diagnostics from(const conic::ConicSolution& sol);
};

/// Linear recovery map y -> sum_i a_i y_i and the optimal value of the
/// program that produced it.
struct RecoveryWeights {
  Eigen::VectorXd a;
  double certified_value = std::numeric_limits<double>::quiet_NaN();
  ModelType model = ModelType::type2;
  Diagnostics diagnostics;

  double apply(const Eigen::VectorXd& observations) const { return a.dot(observations); }
};

/// eta * ||a||_q for the spec's noise model, zero without noise.
double noise_penalty(const ProblemSpec& spec, const Eigen::VectorXd& a);

/// Adds eta * ||a||_q to the builder's objective. `abs_bounds` are variables
/// already constrained to s_i >= |a_i| (reused for q = 1).
conic::LinearExpr add_noise_term(const ProblemSpec& spec, conic::ProblemBuilder& builder,
                                 const conic::VarRange& a, const conic::VarRange* abs_bounds);

}  // namespace optrec
