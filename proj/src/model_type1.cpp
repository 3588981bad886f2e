#include "optrec/model_type1.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <sstream>

#include "optrec/errors.hpp"
#include "optrec/log.hpp"

namespace optrec {

namespace {

using conic::LinearExpr;

constexpr double kMonotoneSlack = 1e-8;

void require_type1(const ProblemSpec& spec) {
  spec.validate();
  if (spec.model != ModelType::type1) throw SpecError("model", "expected type1");
}

void add_toeplitz_psd(conic::ProblemBuilder& pb, const conic::VarRange& w) {
  std::vector<std::vector<LinearExpr>> lower(w.size);
  for (int i = 0; i < w.size; ++i) {
    for (int j = 0; j <= i; ++j) lower[i].push_back(w[i - j]);
  }
  pb.add_psd(lower);
}

RecoveryWeights finish(const ProblemSpec& spec, const conic::ConicSolution& sol) {
  RecoveryWeights out;
  out.model = ModelType::type1;
  out.diagnostics = Diagnostics::from(sol);
  if (sol.status == conic::Status::optimal) {
    out.a = sol.x.head(spec.m());
    out.certified_value = sol.objective();
  }
  return out;
}

// Builds the grid LP; `fixed` pins the weights when given.
conic::ConicProblem grid_lp(const ProblemSpec& spec, std::span<const double> grid,
                            const Eigen::VectorXd* fixed) {
  require_type1(spec);
  if (!spec.quantity.is_point()) {
    throw SpecError("quantity", "the grid upper bound needs a point-evaluation quantity");
  }
  if (spec.has_noise()) throw SpecError("noise", "the grid upper bound has no noise term");
  const auto excluded = spec.excluded_points();
  for (const double t : grid) {
    if (!(std::abs(t) <= 1.0)) throw DomainError("grid point outside [-1, 1]");
    for (const double e : excluded) {
      if (t == e) {
        throw std::invalid_argument("grid point " + std::to_string(t) +
                                    " coincides with x0 or an observation point");
      }
    }
  }
  const int n = spec.n;
  const int m = spec.m();
  const int K = static_cast<int>(grid.size());
  const int atoms = 1 + m + K;

  std::vector<double> locations;
  locations.reserve(atoms);
  locations.push_back(spec.quantity.point_location());
  locations.insert(locations.end(), spec.points.begin(), spec.points.end());
  locations.insert(locations.end(), grid.begin(), grid.end());
  const Eigen::MatrixXd T = observation_matrix(locations, n);

  conic::ProblemBuilder pb;
  const auto a = pb.add_variables(m);
  const auto u = pb.add_variables(atoms);
  const auto v = pb.add_variables(atoms);
  const auto r = pb.add_variables(atoms);
  const auto s = pb.add_variables(atoms);

  LinearExpr objective;
  for (int k = 0; k < atoms; ++k) {
    LinearExpr balance = u[k] + v[k];
    if (k == 0) balance -= LinearExpr(1.0);
    if (k >= 1 && k <= m) balance += a[k - 1];
    pb.add_equality(balance);
    objective += spec.epsilon * r[k] + spec.kappa * s[k];
  }
  for (int j = 0; j < n; ++j) {
    LinearExpr row;
    for (int k = 0; k < atoms; ++k) {
      if (T(j, k) != 0.0) row += T(j, k) * u[k];
    }
    pb.add_equality(row);
  }
  for (int k = 0; k < atoms; ++k) {
    pb.add_nonnegative(r[k] + u[k]);
    pb.add_nonnegative(r[k] - u[k]);
    pb.add_nonnegative(s[k] + v[k]);
    pb.add_nonnegative(s[k] - v[k]);
  }
  if (fixed != nullptr) {
    if (fixed->size() != m) throw std::invalid_argument("weight vector has the wrong length");
    for (int i = 0; i < m; ++i) pb.add_equality(a[i] - (*fixed)(i));
  }
  pb.minimize(objective);
  return pb.build();
}

std::vector<double> make_grid(const ProblemSpec& spec, int K) {
  if (K < 0) throw SpecError("grid_size", "must be nonnegative");
  if (K == 0) return {};
  const auto excluded = spec.excluded_points();
  return cheb::grid(K, excluded);
}

}  // namespace

conic::ConicProblem assemble_type1_truncated(const ProblemSpec& spec, int N) {
  require_type1(spec);
  if (N < spec.n) throw SpecError("truncation", "N must be at least n");
  if (N < spec.m()) throw SpecError("truncation", "N must be at least the number of points");
  const int m = spec.m();
  const Eigen::VectorXd rho = cheb::moments(spec.quantity, N).entries;
  const Eigen::MatrixXd C = observation_matrix(spec.points, N);

  conic::ProblemBuilder pb;
  const auto a = pb.add_variables(m);
  const auto wp = pb.add_variables(N);
  const auto wm = pb.add_variables(N);
  const auto zp = pb.add_variables(N);
  const auto zm = pb.add_variables(N);

  for (int j = 0; j < N; ++j) {
    LinearExpr row = wp[j] - wm[j] + zp[j] - zm[j] - LinearExpr(rho(j));
    for (int i = 0; i < m; ++i) {
      if (C(j, i) != 0.0) row += C(j, i) * a[i];
    }
    pb.add_equality(row);
  }
  for (int j = 0; j < spec.n; ++j) pb.add_equality(wp[j] - wm[j]);
  for (const auto& block : {wp, wm, zp, zm}) add_toeplitz_psd(pb, block);

  LinearExpr objective = spec.epsilon * (wp[0] + wm[0]) + spec.kappa * (zp[0] + zm[0]);
  objective += add_noise_term(spec, pb, a, nullptr);
  pb.minimize(objective);
  return pb.build();
}

RecoveryWeights solve_type1_lower(const ProblemSpec& spec, int N, double tol) {
  const auto problem = assemble_type1_truncated(spec, N);
  conic::SolverOptions opt;
  opt.tol = tol;
  const auto sol = conic::solve(problem, opt);
  log::info("type1 lower bound N=", N, ": ", conic::to_string(sol.status), " value ",
            sol.objective());
  auto out = finish(spec, sol);
  const auto mm = cheb::moment_matrix(spec.points);
  if (mm.ill_conditioned) {
    std::ostringstream os;
    os << "moment matrix of the observation points is ill-conditioned (condition " << mm.condition
       << "); weight convergence in N is unreliable";
    out.diagnostics.warnings.push_back(os.str());
  }
  return out;
}

conic::ConicProblem assemble_grid_lp(const ProblemSpec& spec, std::span<const double> grid) {
  return grid_lp(spec, grid, nullptr);
}

RecoveryWeights solve_type1_upper(const ProblemSpec& spec, std::span<const double> grid,
                                  double tol) {
  conic::SolverOptions opt;
  opt.tol = tol;
  const auto sol = conic::lp_solve(grid_lp(spec, grid, nullptr), opt);
  log::info("type1 upper bound K=", grid.size(), ": ", conic::to_string(sol.status), " value ",
            sol.objective());
  return finish(spec, sol);
}

RecoveryWeights grid_error_bound(const ProblemSpec& spec, std::span<const double> grid,
                                 const Eigen::VectorXd& a, double tol) {
  conic::SolverOptions opt;
  opt.tol = tol;
  auto out = finish(spec, conic::lp_solve(grid_lp(spec, grid, &a), opt));
  out.a = a;
  return out;
}

SandwichResult sandwich(const ProblemSpec& spec, int N, int K, double tol) {
  require_type1(spec);
  SandwichResult out;
  out.N = N;
  out.K = K;
  out.lower = solve_type1_lower(spec, N, tol);
  out.alpha_N = out.lower.certified_value;
  out.a_N = out.lower.a;
  out.upper_available = upper_bound_available(spec);
  if (!out.upper_available) return out;

  out.grid = make_grid(spec, K);
  out.upper = solve_type1_upper(spec, out.grid, tol);
  out.beta_t = out.upper.certified_value;
  out.a_t = out.upper.a;
  if (out.optimal()) {
    out.gap = out.beta_t - out.alpha_N;
    out.ordered = out.alpha_N <= out.beta_t + 2.0 * tol;
    if (!out.ordered) {
      log::error("sandwich ordering violated: alpha ", out.alpha_N, " > beta ", out.beta_t);
    }
  }
  return out;
}

bool ConvergenceStudy::optimal() const {
  auto ok = [](const RecoveryWeights& w) { return w.diagnostics.optimal(); };
  return std::all_of(lower.begin(), lower.end(), ok) && std::all_of(upper.begin(), upper.end(), ok);
}

ConvergenceStudy convergence_study(const ProblemSpec& spec, const std::vector<int>& N_list,
                                   const std::vector<int>& K_list, double tol, bool parallel,
                                   double stop_gap) {
  require_type1(spec);
  auto check_list = [](const std::vector<int>& list, const char* field) {
    if (list.empty()) throw SpecError(field, "list is empty");
    for (std::size_t i = 1; i < list.size(); ++i) {
      if (list[i] <= list[i - 1]) throw SpecError(field, "list must be strictly ascending");
    }
  };
  check_list(N_list, "N_list");
  check_list(K_list, "K_list");
  for (const int N : N_list) {
    if (N < std::max(spec.n, spec.m())) {
      throw SpecError("N_list", "entries must be at least max(n, m)");
    }
  }
  if (K_list.front() < 0) throw SpecError("K_list", "entries must be nonnegative");

  ConvergenceStudy out;
  out.upper_available = upper_bound_available(spec);

  std::vector<std::vector<double>> grids;
  if (out.upper_available) {
    std::vector<double> nested;
    for (const int K : K_list) {
      for (const double t : make_grid(spec, K)) {
        if (std::find(nested.begin(), nested.end(), t) == nested.end()) nested.push_back(t);
      }
      grids.push_back(nested);
    }
  }

  const auto policy = parallel ? std::launch::async : std::launch::deferred;
  std::vector<std::future<RecoveryWeights>> upper_jobs;
  for (const auto& g : grids) {
    upper_jobs.push_back(std::async(policy, [&spec, &g, tol] { return solve_type1_upper(spec, g, tol); }));
  }
  std::size_t levels = N_list.size();
  if (stop_gap > 0.0) {
    for (auto& job : upper_jobs) out.upper.push_back(job.get());
    const double best = out.upper_available && out.upper.back().diagnostics.optimal()
                            ? out.upper.back().certified_value
                            : kInfinity;
    for (std::size_t i = 0; i < N_list.size(); ++i) {
      out.lower.push_back(solve_type1_lower(spec, N_list[i], tol));
      if (out.lower.back().diagnostics.optimal() && best - out.lower.back().certified_value < stop_gap) {
        levels = i + 1;
        break;
      }
    }
  } else {
    std::vector<std::future<RecoveryWeights>> lower_jobs;
    for (const int N : N_list) {
      lower_jobs.push_back(
          std::async(policy, [&spec, N, tol] { return solve_type1_lower(spec, N, tol); }));
    }
    for (auto& job : lower_jobs) out.lower.push_back(job.get());
    for (auto& job : upper_jobs) out.upper.push_back(job.get());
  }

  for (std::size_t i = 0; i < levels; ++i) {
    for (std::size_t k = 0; k < K_list.size(); ++k) {
      ConvergenceRow row;
      row.N = N_list[i];
      row.K = K_list[k];
      row.alpha = out.lower[i].certified_value;
      if (out.upper_available) {
        row.grid_points = static_cast<int>(grids[k].size());
        row.beta = out.upper[k].certified_value;
        row.gap = row.beta - row.alpha;
      }
      out.rows.push_back(row);
    }
  }

  for (std::size_t i = 1; i < out.lower.size(); ++i) {
    const auto& prev = out.lower[i - 1];
    const auto& next = out.lower[i];
    if (!prev.diagnostics.optimal() || !next.diagnostics.optimal()) continue;
    out.weight_drift.push_back((next.a - prev.a).lpNorm<Eigen::Infinity>());
    if (next.certified_value < prev.certified_value - kMonotoneSlack) {
      out.alpha_monotone = false;
      std::ostringstream os;
      os << "alpha decreased from N=" << N_list[i - 1] << " to N=" << N_list[i] << " by "
         << prev.certified_value - next.certified_value << "; solver accuracy is insufficient";
      out.diagnostics.push_back(os.str());
    }
  }
  for (std::size_t k = 1; k < out.upper.size(); ++k) {
    const auto& prev = out.upper[k - 1];
    const auto& next = out.upper[k];
    if (!prev.diagnostics.optimal() || !next.diagnostics.optimal()) continue;
    if (next.certified_value > prev.certified_value + kMonotoneSlack) {
      out.beta_monotone = false;
      std::ostringstream os;
      os << "beta increased from K=" << K_list[k - 1] << " to K=" << K_list[k] << " by "
         << next.certified_value - prev.certified_value << "; solver accuracy is insufficient";
      out.diagnostics.push_back(os.str());
    }
  }
  for (const auto& d : out.diagnostics) log::error(d);
  return out;
}

}  // namespace optrec
