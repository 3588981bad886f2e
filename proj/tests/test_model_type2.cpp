#include <cmath>
#include <random>

#include "doctest.h"
#include "optrec/errors.hpp"
#include "optrec/model_type2.hpp"
#include "optrec/oracle.hpp"

using namespace optrec;
using doctest::Approx;

namespace {

ProblemSpec scalar(double kappa) {
  ProblemSpec spec;
  spec.model = ModelType::type2;
  spec.n = 1;
  spec.epsilon = 0.1;
  spec.kappa = kappa;
  spec.points = {0.0};
  spec.quantity = cheb::FunctionalSpec::point(0.5);
  return spec;
}

// minimize eps (1 + |a|) + kappa |1 - a| over a fine grid in [-3, 3].
double scalar_grid_oracle(double eps, double kappa) {
  double best = kInfinity;
  for (int k = 0; k <= 600000; ++k) {
    const double a = -3.0 + 1e-5 * k;
    best = std::min(best, eps * (1.0 + std::abs(a)) + kappa * std::abs(1.0 - a));
  }
  return best;
}

ProblemSpec medium(double kappa) {
  ProblemSpec spec;
  spec.n = 4;
  spec.epsilon = 0.05;
  spec.kappa = kappa;
  spec.points = {-0.9, -0.5, -0.1, 0.35, 0.8};
  spec.quantity = cheb::FunctionalSpec::point(0.6);
  return spec;
}

}  // namespace

TEST_CASE("scalar instance matches the grid oracle") {
  const auto w = solve_type2(scalar(1.0));
  REQUIRE(w.diagnostics.optimal());
  CHECK(w.certified_value == Approx(scalar_grid_oracle(0.1, 1.0)).epsilon(1e-7));
  CHECK(w.certified_value == Approx(0.2).epsilon(1e-7));
  CHECK(w.a(0) == Approx(1.0).epsilon(1e-6));

  const auto small = solve_type2(scalar(0.05));
  REQUIRE(small.diagnostics.optimal());
  CHECK(small.certified_value == Approx(scalar_grid_oracle(0.1, 0.05)).epsilon(1e-7));
  CHECK(small.certified_value == Approx(0.15).epsilon(1e-7));
  CHECK(std::abs(small.a(0)) <= 1e-6);
}

TEST_CASE("large kappa approaches the unbounded model") {
  const auto big = solve_type2(scalar(1e6));
  const auto inf = solve_type2(scalar(kInfinity));
  REQUIRE(big.diagnostics.optimal());
  REQUIRE(inf.diagnostics.optimal());
  CHECK(inf.certified_value == Approx(0.2).epsilon(1e-8));
  CHECK(inf.a(0) == Approx(1.0).epsilon(1e-8));
  CHECK(std::abs(big.certified_value - inf.certified_value) <= 1e-4);
}

TEST_CASE("unbounded model examples") {
  ProblemSpec spec;
  spec.n = 2;
  spec.epsilon = 0.1;
  spec.kappa = kInfinity;
  spec.points = {-1.0, 1.0};
  spec.quantity = cheb::FunctionalSpec::point(0.0);
  const auto w = solve_type2_kappa_inf(spec);
  REQUIRE(w.diagnostics.optimal());
  CHECK(w.a(0) == Approx(0.5).epsilon(1e-8));
  CHECK(w.a(1) == Approx(0.5).epsilon(1e-8));
  CHECK(w.certified_value == Approx(0.2).epsilon(1e-8));

  spec.points = {0.0};
  spec.quantity = cheb::FunctionalSpec::point(0.5);
  const auto bad = solve_type2(spec);
  CHECK(bad.diagnostics.status == conic::Status::infeasible);
  CHECK_FALSE(bad.diagnostics.warnings.empty());
}

TEST_CASE("assembly contract") {
  ProblemSpec spec = medium(1.0);
  const auto p = assemble_type2(spec);
  CHECK(p.num_variables() == 2 * spec.m() + spec.n);
  CHECK(p.offset == Approx(spec.epsilon));

  spec.noise = NoiseModel{2.0, 0.0};
  const auto q = assemble_type2(spec);
  CHECK(q.num_variables() == p.num_variables());
  CHECK((Eigen::MatrixXd(q.G) - Eigen::MatrixXd(p.G)).norm() == 0.0);
  CHECK((q.c - p.c).norm() == 0.0);

  spec.model = ModelType::type1;
  CHECK_THROWS_AS(assemble_type2(spec), SpecError);
  CHECK_THROWS_AS(assemble_type2(medium(kInfinity)), SpecError);
}

TEST_CASE("decomposition and suboptimality") {
  const ProblemSpec spec = medium(1.0);
  const auto w = solve_type2(spec);
  REQUIRE(w.diagnostics.optimal());
  const auto b = oracle::worst_case_type2(w.a, spec);
  CHECK(w.certified_value >= b.lower - 1e-6);
  CHECK(w.certified_value <= b.upper + 1e-6);

  std::mt19937_64 rng(19);
  std::normal_distribution<double> g(0.0, 0.1);
  for (int trial = 0; trial < 100; ++trial) {
    Eigen::VectorXd other = w.a;
    for (Eigen::Index i = 0; i < other.size(); ++i) other(i) += g(rng);
    const auto ob = oracle::worst_case_type2(other, spec, {512, 50, 1});
    CHECK(ob.upper >= w.certified_value - 1e-6);
    CHECK(ob.lower >= w.certified_value - 1e-6);
  }
}

TEST_CASE("integral quantity") {
  ProblemSpec spec = medium(0.5);
  spec.quantity = cheb::FunctionalSpec::integral();
  const auto w = solve_type2(spec);
  REQUIRE(w.diagnostics.optimal());
  const auto b = oracle::worst_case_type2(w.a, spec);
  CHECK(w.certified_value >= b.lower - 1e-6);
  CHECK(w.certified_value <= b.upper + 1e-6);
}

TEST_CASE("certified value is nondecreasing in kappa") {
  double last = 0.0;
  for (double kappa : {0.01, 0.03, 0.1, 0.3, 1.0, 3.0, 10.0}) {
    const auto w = solve_type2(medium(kappa));
    REQUIRE(w.diagnostics.optimal());
    CHECK(w.certified_value >= last - 1e-8);
    last = w.certified_value;
  }
  const auto inf = solve_type2(medium(kInfinity));
  REQUIRE(inf.diagnostics.optimal());
  CHECK(inf.certified_value >= last - 1e-8);
}

TEST_CASE("objective is homogeneous in (epsilon, kappa)") {
  ProblemSpec spec = medium(0.4);
  const double base = solve_type2(spec).certified_value;
  spec.epsilon *= 3.0;
  spec.kappa *= 3.0;
  CHECK(solve_type2(spec).certified_value == Approx(3.0 * base).epsilon(1e-7));
}

TEST_CASE("sampled functions never beat the certified value") {
  for (double kappa : {0.2, 1.0, kInfinity}) {
    const ProblemSpec spec = medium(kappa);
    const auto w = solve_type2(spec);
    REQUIRE(w.diagnostics.optimal());
    const auto samples = oracle::draw_samples(spec, 42, 1000);
    CHECK(oracle::empirical_error(w.a, samples, spec) <= w.certified_value + 1e-6);
  }
}

TEST_CASE("noise term") {
  const ProblemSpec clean = medium(1.0);
  const auto base = solve_type2(clean);
  for (double p : {1.0, 2.0, kInfinity}) {
    ProblemSpec spec = clean;
    spec.noise = NoiseModel{p, 0.0};
    const auto zero = solve_type2(spec);
    REQUIRE(zero.diagnostics.optimal());
    CHECK((zero.a - base.a).lpNorm<Eigen::Infinity>() <= 1e-8);
    CHECK(zero.certified_value == Approx(base.certified_value).epsilon(1e-9));

    double last = base.certified_value;
    for (double eta : {0.001, 0.01, 0.1}) {
      spec.noise = NoiseModel{p, eta};
      const auto w = solve_type2(spec);
      REQUIRE(w.diagnostics.optimal());
      CHECK(w.certified_value >= last - 1e-8);
      last = w.certified_value;
      const auto b = oracle::worst_case_type2(w.a, spec);
      CHECK(w.certified_value >= b.lower - 1e-6);
      CHECK(w.certified_value <= b.upper + 1e-6);
    }
  }
}

TEST_CASE("overparametrized instance") {
  ProblemSpec spec = medium(1.0);
  spec.n = 9;
  const auto w = solve_type2(spec);
  REQUIRE(w.diagnostics.optimal());
  CHECK(w.certified_value > 0.0);
  const auto b = oracle::worst_case_type2(w.a, spec);
  CHECK(w.certified_value >= b.lower - 1e-6);
  CHECK(w.certified_value <= b.upper + 1e-6);
}
