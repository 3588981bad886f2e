#include "optrec/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "optrec/conic.hpp"
#include "optrec/log.hpp"

namespace optrec::oracle {

namespace {

constexpr double kAnnihilationThreshold = 1e-7;

int effective_degree(const Eigen::VectorXd& coeffs) {
  int d = static_cast<int>(coeffs.size()) - 1;
  while (d > 0 && coeffs(d) == 0.0) --d;
  return std::max(d, 0);
}

// g_j = Q(T_j) - sum_i a_i T_j(x_i), j < n.
Eigen::VectorXd residual_functional(const Eigen::VectorXd& a, const ProblemSpec& spec) {
  if (a.size() != spec.m()) throw std::invalid_argument("weight vector has the wrong length");
  const Eigen::VectorXd b = cheb::moments(spec.quantity, spec.n).entries;
  return b - observation_matrix(spec.points, spec.n) * a;
}

Eigen::VectorXd random_coefficients(CounterRng& rng, int size) {
  Eigen::VectorXd c(size);
  for (int j = 0; j < size; ++j) c(j) = rng.symmetric();
  if (c.cwiseAbs().maxCoeff() == 0.0) c(0) = 1.0;
  return c;
}

Eigen::VectorXd rescaled(const Eigen::VectorXd& c, double target) {
  return c * (target / certified_sup_norm(c));
}

int perturbation_size(const ProblemSpec& spec, int h_degree) {
  return h_degree > 0 ? h_degree : 4 * spec.n;
}

}  // namespace

std::uint64_t CounterRng::mix(std::uint64_t x) {
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double CounterRng::symmetric() {
  const double unit = static_cast<double>(next() >> 11) * 0x1.0p-53;
  return 2.0 * unit - 1.0;
}

int audit_grid_size(int degree) { return 10 * std::max(degree, 0) + 64; }

double certified_sup_norm(const Eigen::VectorXd& coeffs, int grid_size) {
  if (coeffs.size() == 0) return 0.0;
  const int d = effective_degree(coeffs);
  const int M = grid_size > 0 ? grid_size : audit_grid_size(d);
  const double ratio = static_cast<double>(d) * std::numbers::pi / M;
  const double factor = 1.0 - ratio * ratio / 8.0;
  if (!(factor > 0.5)) throw std::invalid_argument("audit grid too coarse for the degree");
  double peak = 0.0;
  for (const double t : cheb::chebyshev_nodes(M)) {
    peak = std::max(peak, std::abs(cheb::evaluate(coeffs, t)));
  }
  return peak / factor;
}

double dual_norm(const Eigen::VectorXd& a, const cheb::FunctionalSpec& quantity,
                 std::span<const double> points) {
  if (quantity.is_point()) {
    const double x0 = quantity.point_location();
    if (std::find(points.begin(), points.end(), x0) != points.end()) {
      throw std::invalid_argument("dual_norm: x0 coincides with an observation point");
    }
  } else if (!quantity.is_integral()) {
    throw std::invalid_argument("dual_norm: unsupported quantity");
  }
  return 1.0 + a.lpNorm<1>();
}

Bounds max_over_ball(const Eigen::VectorXd& a, const ProblemSpec& spec,
                     const BallOptions& options) {
  const Eigen::VectorXd g = residual_functional(a, spec);
  const int n = spec.n;
  if (g.cwiseAbs().maxCoeff() == 0.0) return {0.0, 0.0};

  const int M = std::max(options.grid_size, audit_grid_size(n - 1));
  const auto nodes = cheb::chebyshev_nodes(M);
  Eigen::MatrixXd D(M, n);
  for (int k = 0; k < M; ++k) D.row(k) = cheb::values(nodes[k], n).transpose();

  auto value = [&](const Eigen::VectorXd& c) {
    const double sup = certified_sup_norm(c, M);
    return sup > 0.0 ? std::abs(g.dot(c)) / sup : 0.0;
  };

  Bounds out;
  // Each T_j has sup-norm one.
  for (int j = 0; j < n; ++j) out.lower = std::max(out.lower, std::abs(g(j)));
  CounterRng rng(options.seed);
  for (int s = 0; s < options.samples; ++s) out.lower = std::max(out.lower, value(random_coefficients(rng, n)));

  // maximize g'c subject to |D c| <= 1 on the grid.
  conic::ProblemBuilder pb;
  const auto c = pb.add_variables(n);
  conic::LinearExpr objective;
  for (int j = 0; j < n; ++j) objective += -g(j) * c[j];
  pb.minimize(objective);
  for (const double sign : {1.0, -1.0}) {
    for (int k = 0; k < M; ++k) {
      conic::LinearExpr row(1.0);
      for (int j = 0; j < n; ++j) row += -sign * D(k, j) * c[j];
      pb.add_nonnegative(row);
    }
  }
  conic::SolverOptions opt;
  opt.tol = 1e-10;
  const auto sol = conic::lp_solve(pb.build(), opt);
  // The bounds below hold for any primal and dual vectors, so a last iterate
  // short of the LP tolerance still certifies them.
  const bool usable = sol.x.size() == n && sol.x.allFinite() && sol.z.size() == 2 * M &&
                      sol.z.allFinite();
  if (!usable) {
    log::error("max_over_ball: grid LP ", conic::to_string(sol.status), "; upper bound is infinite");
    out.upper = kInfinity;
    return out;
  }
  if (sol.status != conic::Status::optimal) {
    log::info("max_over_ball: grid LP ", conic::to_string(sol.status), "; bounding from the last iterate");
  }
  out.lower = std::max(out.lower, value(sol.x));

  // Any lambda with D' lambda = g certifies max <= ||lambda||_1 on the grid,
  // hence on the ball. Remove the solver's residual by a least-norm shift.
  Eigen::VectorXd lambda = sol.z.head(M) - sol.z.tail(M);
  const Eigen::VectorXd r = g - D.transpose() * lambda;
  lambda += D * (D.transpose() * D).ldlt().solve(r);
  out.upper = std::max(lambda.lpNorm<1>(), out.lower);
  return out;
}

Bounds worst_case_type2(const Eigen::VectorXd& a, const ProblemSpec& spec,
                        const BallOptions& options) {
  const double base = spec.epsilon * dual_norm(a, spec.quantity, spec.points) + noise_penalty(spec, a);
  const Bounds ball = max_over_ball(a, spec, options);
  if (!spec.kappa_infinite()) {
    return {base + spec.kappa * ball.lower, base + spec.kappa * ball.upper};
  }
  Bounds out{base, base};
  if (ball.upper > kAnnihilationThreshold) out.upper = kInfinity;
  if (ball.lower > kAnnihilationThreshold) out.lower = kInfinity;
  return out;
}

SampledFunction SampledFunction::from_parts(Eigen::VectorXd v, Eigen::VectorXd h) {
  SampledFunction f;
  f.v = std::move(v);
  f.h = std::move(h);
  f.sup_v = certified_sup_norm(f.v);
  f.sup_h = certified_sup_norm(f.h);
  f.sup_f = certified_sup_norm(f.coefficients());
  return f;
}

Eigen::VectorXd SampledFunction::coefficients() const {
  Eigen::VectorXd c = Eigen::VectorXd::Zero(std::max(v.size(), h.size()));
  c.head(v.size()) += v;
  c.head(h.size()) += h;
  return c;
}

double SampledFunction::operator()(double x) const {
  return cheb::evaluate(v, x) + cheb::evaluate(h, x);
}

SampledFunction sample_type2(const ProblemSpec& spec, std::uint64_t seed, int h_degree) {
  CounterRng rng(seed);
  const double v_bound = spec.kappa_infinite() ? 10.0 : spec.kappa;
  Eigen::VectorXd v = rescaled(random_coefficients(rng, spec.n), v_bound);
  Eigen::VectorXd h = rescaled(random_coefficients(rng, perturbation_size(spec, h_degree)), spec.epsilon);
  auto f = SampledFunction::from_parts(std::move(v), std::move(h));
  f.seed = seed;
  return f;
}

SampledFunction sample_type1(const ProblemSpec& spec, std::uint64_t seed, int h_degree) {
  CounterRng rng(seed);
  const double kappa = spec.kappa_infinite() ? 10.0 : spec.kappa;
  const Eigen::VectorXd v0 = random_coefficients(rng, spec.n);
  const Eigen::VectorXd h =
      rescaled(random_coefficients(rng, perturbation_size(spec, h_degree)), std::min(spec.epsilon, kappa));

  // Largest scale of v0 keeping ||scale * v0 + h|| <= kappa (convex in scale).
  auto total = [&](double scale) {
    Eigen::VectorXd c = h;
    c.head(v0.size()) += scale * v0;
    return certified_sup_norm(c);
  };
  double lo = 0.0, hi = 1.0;
  if (total(lo) < kappa) {
    while (total(hi) <= kappa) hi *= 2.0;
    for (int it = 0; it < 60; ++it) {
      const double mid = 0.5 * (lo + hi);
      (total(mid) <= kappa ? lo : hi) = mid;
    }
  }
  auto f = SampledFunction::from_parts(lo * v0, h);
  f.seed = seed;
  return f;
}

std::vector<SampledFunction> draw_samples(const ProblemSpec& spec, std::uint64_t seed, int count) {
  std::vector<SampledFunction> out;
  out.reserve(std::max(count, 0));
  const CounterRng base(seed);
  for (int i = 0; i < count; ++i) {
    const std::uint64_t s = base.split(static_cast<std::uint64_t>(i)).seed();
    out.push_back(spec.model == ModelType::type1 ? sample_type1(spec, s) : sample_type2(spec, s));
  }
  return out;
}

double empirical_error(const Eigen::VectorXd& a, std::span<const SampledFunction> samples,
                       const ProblemSpec& spec) {
  if (samples.empty()) return 0.0;
  if (a.size() != spec.m()) throw std::invalid_argument("weight vector has the wrong length");
  Eigen::Index longest = 0;
  for (const auto& f : samples) longest = std::max(longest, f.coefficients().size());
  Eigen::VectorXd q_moments;
  if (!spec.quantity.is_point()) {
    q_moments = cheb::moments(spec.quantity, static_cast<int>(longest)).entries;
  }
  double worst = 0.0;
  for (const auto& f : samples) {
    double q = 0.0;
    if (spec.quantity.is_point()) {
      q = f(spec.quantity.point_location());
    } else {
      const Eigen::VectorXd c = f.coefficients();
      q = c.dot(q_moments.head(c.size()));
    }
    double recovered = 0.0;
    for (int i = 0; i < spec.m(); ++i) recovered += a(i) * f(spec.points[i]);
    worst = std::max(worst, std::abs(q - recovered));
  }
  return worst;
}

}  // namespace optrec::oracle
