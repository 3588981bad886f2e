#pragma once

// Brute-force checks that do not share code paths with the recovery
// solvers: dual-norm formulas, bounds on maxima over the unit ball of P_n,
// and random functions from the model sets.

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "optrec/chebyshev.hpp"
#include "optrec/problem.hpp"

namespace optrec::oracle {

/// Counter-based generator: draw k of stream `seed` is a pure function of
/// (seed, k), so streams can be split and replayed freely.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

  static std::uint64_t mix(std::uint64_t x);
  /// Independent stream derived from this one.
  CounterRng split(std::uint64_t index) const { return CounterRng(mix(seed_ ^ mix(index + 1))); }
  std::uint64_t seed() const { return seed_; }

  std::uint64_t next() { return mix(seed_ + 0x9e3779b97f4a7c15ULL * ++counter_); }
  /// Uniform on [-1, 1).
  double symmetric();

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

/// Audit-grid size for a polynomial of the given degree.
int audit_grid_size(int degree);

/// Upper bound on ||sum_j c_j T_j||_inf from the Chebyshev audit grid.
///
/// With M nodes theta_k = pi (2k - 1) / (2M), every maximizer of |p(cos theta)|
/// lies within pi / (2M) of a node, and p'' <= d^2 ||p|| (Bernstein), so
/// the grid maximum is at least ||p|| (1 - d^2 pi^2 / (8 M^2)).
double certified_sup_norm(const Eigen::VectorXd& coeffs, int grid_size = 0);

struct Bounds {
  double lower = 0.0;
  double upper = 0.0;
};

/// ||Q - sum a_i delta_{x_i}|| in C[-1, 1]^*: the atoms and the atom at x0
/// (or the diffuse integral) are mutually singular, so the value is
/// 1 + sum |a_i|.
double dual_norm(const Eigen::VectorXd& a, const cheb::FunctionalSpec& quantity,
                 std::span<const double> points);

struct BallOptions {
  int grid_size = 2048;
  int samples = 1000;
  std::uint64_t seed = 1;
};

/// Bounds on max { |Q(v) - sum a_i v(x_i)| : v in P_n, ||v|| <= 1 }.
/// Upper: dual of the LP over a dense grid (a relaxation of the ball).
/// Lower: the LP maximizer and random polynomials, each divided by its
/// certified sup-norm.
Bounds max_over_ball(const Eigen::VectorXd& a, const ProblemSpec& spec,
                     const BallOptions& options = {});

/// epsilon * dual_norm + kappa * max_over_ball [+ eta ||a||_q]. With
/// infinite kappa the ball term is zero when the functional annihilates P_n
/// (ball bound below 1e-7) and infinite otherwise.
Bounds worst_case_type2(const Eigen::VectorXd& a, const ProblemSpec& spec,
                        const BallOptions& options = {});

/// f = v + h with v in P_n and h a perturbation, both as Chebyshev series.
struct SampledFunction {
  Eigen::VectorXd v;
  Eigen::VectorXd h;
  double sup_v = 0.0;  ///< certified bounds
  double sup_h = 0.0;
  double sup_f = 0.0;
  std::uint64_t seed = 0;

  static SampledFunction from_parts(Eigen::VectorXd v, Eigen::VectorXd h);

  Eigen::VectorXd coefficients() const;
  double operator()(double x) const;
};

/// Member of the second-type model set: ||h|| <= epsilon, ||v|| <= kappa,
/// each bound met within 1%. Infinite kappa uses ||v|| = 10.
/// `h_degree` <= 0 selects 4n.
SampledFunction sample_type2(const ProblemSpec& spec, std::uint64_t seed, int h_degree = 0);

/// Member of the first-type model set: ||h|| <= epsilon, ||v + h|| <= kappa.
SampledFunction sample_type1(const ProblemSpec& spec, std::uint64_t seed, int h_degree = 0);

/// Samples for the spec's model, seeds split from `seed`.
std::vector<SampledFunction> draw_samples(const ProblemSpec& spec, std::uint64_t seed, int count);

/// max over samples of |Q(f) - sum a_i f(x_i)|; zero for no samples.
double empirical_error(const Eigen::VectorXd& a, std::span<const SampledFunction> samples,
                       const ProblemSpec& spec);

}  // namespace optrec::oracle
