#pragma once

// Optimal recovery over {f : ||f - v|| <= epsilon for some v in P_n with
// ||v|| <= kappa}, observed through point evaluations.

#include "optrec/conic.hpp"
#include "optrec/problem.hpp"

namespace optrec {

/// Toeplitz SDP in the variables (a, s, u):
///
///   minimize  epsilon (1 + sum s) + kappa u_1 [+ eta ||a||_q]
///   s.t.      Toep(u + C a - b) PSD,  Toep(u - C a + b) PSD,  s +- a >= 0
///
/// with b the first n moments of the quantity and C(j, i) = T_j(x_i). The
/// constant epsilon is carried as the objective offset, so the optimal value
/// is the worst-case error of the map. The weights occupy variables [0, m).
conic::ConicProblem assemble_type2(const ProblemSpec& spec);

/// Dispatches to assemble_type2 or, for infinite kappa, to
/// solve_type2_kappa_inf.
RecoveryWeights solve_type2(const ProblemSpec& spec, double tol = 1e-8);

/// minimize epsilon (1 + sum |a_i|) [+ eta ||a||_q] subject to C a = b.
/// Infeasible when b is outside the range of C, e.g. generically for n > m.
RecoveryWeights solve_type2_kappa_inf(const ProblemSpec& spec, double tol = 1e-8);

}  // namespace optrec
