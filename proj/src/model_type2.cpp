#include "optrec/model_type2.hpp"

#include <cmath>
#include <string>

#include "optrec/errors.hpp"
#include "optrec/log.hpp"

namespace optrec {

namespace {

using conic::LinearExpr;

void require_type2(const ProblemSpec& spec) {
  spec.validate();
  if (spec.model != ModelType::type2) throw SpecError("model", "expected type2");
}

RecoveryWeights finish(const ProblemSpec& spec, const conic::ConicSolution& sol) {
  RecoveryWeights out;
  out.model = ModelType::type2;
  out.diagnostics = Diagnostics::from(sol);
  if (sol.status == conic::Status::optimal) {
    out.a = sol.x.head(spec.m());
    out.certified_value = sol.objective();
  }
  return out;
}

}  // namespace

conic::ConicProblem assemble_type2(const ProblemSpec& spec) {
  require_type2(spec);
  if (spec.kappa_infinite()) {
    throw SpecError("kappa", "infinite kappa is handled by solve_type2_kappa_inf");
  }
  const int n = spec.n;
  const int m = spec.m();
  const Eigen::VectorXd b = cheb::moments(spec.quantity, n).entries;
  const Eigen::MatrixXd C = observation_matrix(spec.points, n);

  conic::ProblemBuilder pb;
  const auto a = pb.add_variables(m);
  const auto s = pb.add_variables(m);
  const auto u = pb.add_variables(n);

  LinearExpr objective(spec.epsilon);
  for (int i = 0; i < m; ++i) objective += spec.epsilon * s[i];
  objective += spec.kappa * u[0];

  // g_j = (C a - b)_j; the two Toeplitz blocks bound |sum_j g_j c_j| over
  // the unit ball of P_n by u_1.
  std::vector<LinearExpr> g(n);
  for (int j = 0; j < n; ++j) {
    g[j] = LinearExpr(-b(j));
    for (int i = 0; i < m; ++i) {
      if (C(j, i) != 0.0) g[j] += C(j, i) * a[i];
    }
  }
  for (const double sign : {1.0, -1.0}) {
    std::vector<std::vector<LinearExpr>> lower(n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j <= i; ++j) lower[i].push_back(u[i - j] + sign * g[i - j]);
    }
    pb.add_psd(lower);
  }
  for (int i = 0; i < m; ++i) {
    pb.add_nonnegative(s[i] + a[i]);
    pb.add_nonnegative(s[i] - a[i]);
  }
  objective += add_noise_term(spec, pb, a, &s);
  pb.minimize(objective);
  return pb.build();
}

RecoveryWeights solve_type2(const ProblemSpec& spec, double tol) {
  require_type2(spec);
  if (spec.kappa_infinite()) return solve_type2_kappa_inf(spec, tol);
  conic::SolverOptions opt;
  opt.tol = tol;
  const auto sol = conic::solve(assemble_type2(spec), opt);
  log::info("type2 solve: ", conic::to_string(sol.status), " value ", sol.objective(), " after ",
            sol.iterations, " iterations");
  return finish(spec, sol);
}

RecoveryWeights solve_type2_kappa_inf(const ProblemSpec& spec, double tol) {
  require_type2(spec);
  const int n = spec.n;
  const int m = spec.m();
  const Eigen::VectorXd b = cheb::moments(spec.quantity, n).entries;
  const Eigen::MatrixXd C = observation_matrix(spec.points, n);

  conic::ProblemBuilder pb;
  const auto a = pb.add_variables(m);
  const auto s = pb.add_variables(m);
  LinearExpr objective(spec.epsilon);
  for (int i = 0; i < m; ++i) {
    objective += spec.epsilon * s[i];
    pb.add_nonnegative(s[i] + a[i]);
    pb.add_nonnegative(s[i] - a[i]);
  }
  for (int j = 0; j < n; ++j) {
    LinearExpr row(-b(j));
    for (int i = 0; i < m; ++i) {
      if (C(j, i) != 0.0) row += C(j, i) * a[i];
    }
    pb.add_equality(row);
  }
  objective += add_noise_term(spec, pb, a, &s);
  pb.minimize(objective);
  const auto problem = pb.build();

  conic::SolverOptions opt;
  opt.tol = tol;
  const auto sol = problem.is_linear() ? conic::lp_solve(problem, opt) : conic::solve(problem, opt);
  auto out = finish(spec, sol);
  if (n > m) {
    out.diagnostics.warnings.push_back(
        "n > m with infinite kappa: the moment constraints C a = b are generically infeasible");
  }
  return out;
}

}  // namespace optrec
