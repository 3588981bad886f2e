#pragma once

// Recovery over {f : dist(f, P_n) <= epsilon, ||f|| <= kappa}: truncated
// moment SDPs give lower bounds alpha^(N), linear programs over atomic
// measures on a grid give upper bounds beta^(t) and near-optimal weights.

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "optrec/conic.hpp"
#include "optrec/problem.hpp"

namespace optrec {

/// Variables (a, w+, w-, z+, z-), a in R^m and the rest in R^N:
///
///   minimize  epsilon (w+_1 + w-_1) + kappa (z+_1 + z-_1) [+ eta ||a||_q]
///   s.t.      w+ - w- + z+ - z- = M_N(quantity) - sum_i a_i M_N(delta_{x_i})
///             w+_j = w-_j,  j < n
///             Toep(w+), Toep(w-), Toep(z+), Toep(z-) PSD
///
/// Requires N >= max(n, m).
conic::ConicProblem assemble_type1_truncated(const ProblemSpec& spec, int N);

/// Lower bound alpha^(N) (certified_value) and the weight block of the
/// minimizer. Adds a warning when the moment matrix of the observation
/// points is ill-conditioned.
RecoveryWeights solve_type1_lower(const ProblemSpec& spec, int N, double tol = 1e-8);

/// The grid LP covers point evaluations without observation noise.
inline bool upper_bound_available(const ProblemSpec& spec) {
  return spec.quantity.is_point() && !spec.has_noise();
}

/// Variables (a; u, v, r, s), u, v, r, s indexed by the atoms
/// (x0, x_1..x_m, t_1..t_K):
///
///   minimize  epsilon sum r + kappa sum s
///   s.t.      u + v = (1, -a, 0),   [b | C | D] u = 0,   r +- u >= 0,  s +- v >= 0
///
/// Point-evaluation quantity without noise; the grid must avoid x0 and the x_i.
conic::ConicProblem assemble_grid_lp(const ProblemSpec& spec, std::span<const double> grid);

/// Upper bound beta^(t) (certified_value) and the near-optimal weights a^(t).
RecoveryWeights solve_type1_upper(const ProblemSpec& spec, std::span<const double> grid,
                                  double tol = 1e-8);

/// Grid-LP bound on the worst-case error of the fixed map `a`.
RecoveryWeights grid_error_bound(const ProblemSpec& spec, std::span<const double> grid,
                                 const Eigen::VectorXd& a, double tol = 1e-8);

struct SandwichResult {
  double alpha_N = 0.0;
  double beta_t = kInfinity;
  double gap = kInfinity;
  Eigen::VectorXd a_N;
  Eigen::VectorXd a_t;
  int N = 0;
  int K = 0;
  std::vector<double> grid;
  bool upper_available = true;
  bool ordered = true;  ///< alpha_N <= beta_t + 2 tol
  RecoveryWeights lower;
  RecoveryWeights upper;

  bool optimal() const {
    return lower.diagnostics.optimal() && (!upper_available || upper.diagnostics.optimal());
  }
};

SandwichResult sandwich(const ProblemSpec& spec, int N, int K, double tol = 1e-8);

struct ConvergenceRow {
  int N = 0;
  int K = 0;            ///< requested grid size
  int grid_points = 0;  ///< size of the nested grid actually used
  double alpha = 0.0;
  double beta = kInfinity;
  double gap = kInfinity;
};

struct ConvergenceStudy {
  std::vector<ConvergenceRow> rows;  ///< N-major over N_list x K_list
  std::vector<RecoveryWeights> lower;  ///< one per N
  std::vector<RecoveryWeights> upper;  ///< one per K; empty without upper bounds
  std::vector<double> weight_drift;    ///< ||a^(N_{i+1}) - a^(N_i)||_inf
  bool upper_available = true;
  bool alpha_monotone = true;
  bool beta_monotone = true;
  std::vector<std::string> diagnostics;

  bool optimal() const;
};

/// Sandwich table over N_list x K_list. Grid i is the union of the
/// Chebyshev grids of sizes K_list[0..i], so successive grids are nested.
/// Both lists must be nonempty and strictly ascending. With stop_gap > 0
/// the N levels run in order and stop once the gap on the finest grid drops
/// below stop_gap.
ConvergenceStudy convergence_study(const ProblemSpec& spec, const std::vector<int>& N_list,
                                   const std::vector<int>& K_list, double tol = 1e-8,
                                   bool parallel = true, double stop_gap = 0.0);

}  // namespace optrec
