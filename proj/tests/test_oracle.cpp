#include <cmath>
#include <set>

#include "doctest.h"
#include "optrec/oracle.hpp"

using namespace optrec;
using doctest::Approx;

namespace {

double dense_sup(const Eigen::VectorXd& c) {
  double peak = 0.0;
  for (int k = 0; k <= 200000; ++k) peak = std::max(peak, std::abs(cheb::evaluate(c, -1.0 + 1e-5 * k)));
  return peak;
}

ProblemSpec two_point() {
  ProblemSpec spec;
  spec.n = 2;
  spec.epsilon = 0.1;
  spec.kappa = 1.0;
  spec.points = {-1.0, 1.0};
  spec.quantity = cheb::FunctionalSpec::point(0.0);
  return spec;
}

}  // namespace

TEST_CASE("counter rng is reproducible") {
  oracle::CounterRng a(99), b(99), c(100);
  for (int k = 0; k < 50; ++k) {
    const auto x = a.next();
    CHECK(x == b.next());
    CHECK(x != c.next());
  }
  CHECK(a.split(3).seed() == b.split(3).seed());
  CHECK(a.split(3).seed() != a.split(4).seed());
  oracle::CounterRng u(5);
  double lo = 1.0, hi = -1.0;
  for (int k = 0; k < 10000; ++k) {
    const double s = u.symmetric();
    CHECK(s >= -1.0);
    CHECK(s < 1.0);
    lo = std::min(lo, s);
    hi = std::max(hi, s);
  }
  CHECK(lo < -0.99);
  CHECK(hi > 0.99);
}

TEST_CASE("certified sup norm") {
  Eigen::VectorXd t5 = Eigen::VectorXd::Zero(6);
  t5(5) = 1.0;
  const double s = oracle::certified_sup_norm(t5);
  CHECK(s >= 1.0);
  CHECK(s <= 1.01);
  CHECK(oracle::certified_sup_norm(Eigen::VectorXd()) == 0.0);

  oracle::CounterRng rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXd c(3 + trial);
    for (Eigen::Index j = 0; j < c.size(); ++j) c(j) = rng.symmetric();
    const double exact = dense_sup(c);
    const double bound = oracle::certified_sup_norm(c);
    CHECK(bound >= exact * (1.0 - 1e-9));
    CHECK(bound <= 1.05 * exact);
  }
  CHECK_THROWS(oracle::certified_sup_norm(Eigen::VectorXd::Ones(40), 8));
}

TEST_CASE("dual norm of the error functional") {
  Eigen::VectorXd a(2);
  a << 0.5, -1.5;
  const std::vector<double> pts = {-0.3, 0.4};
  CHECK(oracle::dual_norm(a, cheb::FunctionalSpec::point(0.0), pts) == Approx(3.0));
  CHECK(oracle::dual_norm(a, cheb::FunctionalSpec::integral(), pts) == Approx(3.0));
}

TEST_CASE("maximum over the polynomial ball") {
  ProblemSpec spec;
  spec.n = 1;
  spec.points = {0.0};
  spec.quantity = cheb::FunctionalSpec::point(0.5);
  Eigen::VectorXd a(1);
  a << 0.3;
  auto b = oracle::max_over_ball(a, spec);
  CHECK(b.lower <= 0.7 + 1e-9);
  CHECK(b.upper >= 0.7 - 1e-9);
  CHECK(b.upper - b.lower <= 1e-6);

  spec = two_point();
  Eigen::VectorXd half(2);
  half << 0.5, 0.5;
  CHECK(oracle::max_over_ball(half, spec).upper <= 1e-7);

  Eigen::VectorXd left(2);
  left << 1.0, 0.0;
  b = oracle::max_over_ball(left, spec);
  CHECK(b.lower == Approx(1.0).epsilon(1e-6));
  CHECK(b.upper == Approx(1.0).epsilon(1e-6));
  CHECK(b.lower <= b.upper + 1e-12);
}

TEST_CASE("worst case of the second model") {
  ProblemSpec spec = two_point();
  Eigen::VectorXd half(2);
  half << 0.5, 0.5;
  auto b = oracle::worst_case_type2(half, spec);
  CHECK(b.lower == Approx(0.2).epsilon(1e-7));
  CHECK(b.upper == Approx(0.2).epsilon(1e-7));

  Eigen::VectorXd left(2);
  left << 1.0, 0.0;
  b = oracle::worst_case_type2(left, spec);
  CHECK(b.upper == Approx(1.2).epsilon(1e-6));

  spec.kappa = kInfinity;
  CHECK(oracle::worst_case_type2(half, spec).upper == Approx(0.2).epsilon(1e-7));
  CHECK(oracle::worst_case_type2(left, spec).upper == kInfinity);

  spec.noise = NoiseModel{kInfinity, 0.1};
  CHECK(oracle::worst_case_type2(half, spec).upper == Approx(0.3).epsilon(1e-7));
}

TEST_CASE("second model samples meet their bounds") {
  ProblemSpec spec = two_point();
  spec.kappa = 2.0;
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto f = oracle::sample_type2(spec, seed);
    CHECK(f.v.size() == spec.n);
    CHECK(f.h.size() == 4 * spec.n);
    CHECK(f.sup_h == Approx(spec.epsilon).epsilon(1e-9));
    CHECK(f.sup_v == Approx(spec.kappa).epsilon(1e-9));
    CHECK(dense_sup(f.h) >= 0.99 * spec.epsilon);
    CHECK(dense_sup(f.v) >= 0.99 * spec.kappa);
    CHECK(f(0.3) == Approx(cheb::evaluate(f.coefficients(), 0.3)).epsilon(1e-13));
  }
  CHECK(oracle::sample_type2(spec, 4, 7).h.size() == 7);
  spec.kappa = kInfinity;
  CHECK(oracle::sample_type2(spec, 1).sup_v == Approx(10.0).epsilon(1e-9));
}

TEST_CASE("first model samples meet their bounds") {
  ProblemSpec spec = two_point();
  spec.model = ModelType::type1;
  for (double kappa : {0.05, 1.0, 4.0}) {
    spec.kappa = kappa;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const auto f = oracle::sample_type1(spec, seed);
      CHECK(f.sup_h <= spec.epsilon * (1.0 + 1e-9));
      CHECK(f.sup_f <= kappa * (1.0 + 1e-9));
      CHECK(dense_sup(f.coefficients()) <= kappa * (1.0 + 1e-9));
    }
  }
}

TEST_CASE("sample streams are deterministic") {
  ProblemSpec spec = two_point();
  const auto s1 = oracle::draw_samples(spec, 8, 25);
  const auto s2 = oracle::draw_samples(spec, 8, 25);
  const auto s3 = oracle::draw_samples(spec, 9, 25);
  REQUIRE(s1.size() == 25);
  std::set<std::uint64_t> seeds;
  for (std::size_t i = 0; i < s1.size(); ++i) {
    CHECK(s1[i].coefficients() == s2[i].coefficients());
    CHECK(s1[i].coefficients() != s3[i].coefficients());
    seeds.insert(s1[i].seed);
  }
  CHECK(seeds.size() == s1.size());
  CHECK(oracle::draw_samples(spec, 8, 0).empty());
}

TEST_CASE("empirical error") {
  ProblemSpec spec = two_point();
  Eigen::VectorXd a(2);
  a << 0.25, 0.5;
  CHECK(oracle::empirical_error(a, {}, spec) == 0.0);
  const auto samples = oracle::draw_samples(spec, 3, 10);
  double worst = 0.0;
  for (const auto& f : samples) worst = std::max(worst, std::abs(f(0.0) - 0.25 * f(-1.0) - 0.5 * f(1.0)));
  CHECK(oracle::empirical_error(a, samples, spec) == Approx(worst).epsilon(1e-12));
  CHECK_THROWS(oracle::empirical_error(Eigen::VectorXd::Ones(3), samples, spec));

  spec.quantity = cheb::FunctionalSpec::integral();
  const auto one = oracle::SampledFunction::from_parts(Eigen::VectorXd::Zero(1),
                                                       Eigen::VectorXd::Unit(3, 2));
  // T_2 has normalized integral -1/3 and equals 1 at both endpoints.
  const std::vector<oracle::SampledFunction> single = {one};
  CHECK(oracle::empirical_error(a, single, spec) == Approx(1.0 / 3.0 + 0.75).epsilon(1e-12));
}
