// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on failure.

#include <algorithm>
#include <cmath>
#include <deque>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "optrec/commands.hpp"
#include "optrec/io.hpp"
#include "optrec/model_type1.hpp"
#include "optrec/model_type2.hpp"
#include "optrec/oracle.hpp"

using namespace optrec;

namespace {

constexpr double kTol = 1e-8;
constexpr int kSamples = 1000;
constexpr std::uint64_t kSeed = 2024;

struct Outcome {
  bool passed = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok && passed) detail = what;
    passed = passed && ok;
  }
};

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(10) << v;
  return os.str();
}

ProblemSpec make_spec(ModelType model, int n, double eps, double kappa, std::vector<double> points,
                      cheb::FunctionalSpec quantity) {
  ProblemSpec spec;
  spec.model = model;
  spec.n = n;
  spec.epsilon = eps;
  spec.kappa = kappa;
  spec.points = std::move(points);
  spec.quantity = std::move(quantity);
  return spec;
}

ProblemSpec micro(ModelType model, double kappa) {
  return make_spec(model, 1, 0.1, kappa, {0.0}, cheb::FunctionalSpec::point(0.5));
}

ProblemSpec medium(double kappa) {
  return make_spec(ModelType::type2, 4, 0.05, kappa, {-0.9, -0.5, -0.1, 0.35, 0.8},
                   cheb::FunctionalSpec::point(0.6));
}

ProblemSpec nodes_spec() {
  return make_spec(ModelType::type1, 3, 0.1, 1.0, cheb::chebyshev_nodes(5),
                   cheb::FunctionalSpec::point(0.3));
}

std::vector<double> spread_points(int m, double shift) {
  std::vector<double> pts;
  for (int i = 0; i < m; ++i) pts.push_back(std::cos(std::numbers::pi * (i + shift) / m));
  return pts;
}

// Sandwich specs spanning n in {1, 3, 5} and m in {1, 5, 8}.
std::vector<ProblemSpec> sandwich_specs() {
  const auto q = cheb::FunctionalSpec::point(0.3);
  return {
      make_spec(ModelType::type1, 1, 0.1, 1.0, {0.0}, cheb::FunctionalSpec::point(0.5)),
      make_spec(ModelType::type1, 3, 0.05, 1.0, spread_points(5, 0.4), q),
      make_spec(ModelType::type1, 5, 0.02, 2.0, spread_points(8, 0.4), q),
      make_spec(ModelType::type1, 5, 0.1, 1.0, {0.1}, q),
      make_spec(ModelType::type1, 3, 0.1, 0.5, spread_points(8, 0.25), cheb::FunctionalSpec::point(-0.7)),
  };
}

std::string describe(const ProblemSpec& s) {
  return "n=" + std::to_string(s.n) + " m=" + std::to_string(s.m()) + " kappa=" + fmt(s.kappa);
}

struct Solved2 {
  ProblemSpec spec;
  RecoveryWeights w;
};

std::deque<Solved2> type2_suite;

const RecoveryWeights& record(const ProblemSpec& spec, RecoveryWeights w) {
  type2_suite.push_back({spec, std::move(w)});
  return type2_suite.back().w;
}

double grid_oracle(double eps, double kappa) {
  double best = kInfinity;
  for (int k = 0; k <= 600000; ++k) {
    const double a = -3.0 + 1e-5 * k;
    best = std::min(best, eps * (1.0 + std::abs(a)) + kappa * std::abs(1.0 - a));
  }
  return best;
}

Outcome analytic_micro_instance() {
  Outcome o;
  const double oracle_1 = grid_oracle(0.1, 1.0);
  const double oracle_05 = grid_oracle(0.1, 0.05);
  o.require(std::abs(oracle_1 - 0.2) <= 1e-6 && std::abs(oracle_05 - 0.15) <= 1e-6, "grid oracle");
  const auto w1 = record(micro(ModelType::type2, 1.0), solve_type2(micro(ModelType::type2, 1.0), kTol));
  const auto w05 = record(micro(ModelType::type2, 0.05), solve_type2(micro(ModelType::type2, 0.05), kTol));
  o.require(w1.diagnostics.optimal() && w05.diagnostics.optimal(), "solver status");
  o.require(std::abs(w1.certified_value - oracle_1) <= 1e-6 && std::abs(w1.a(0) - 1.0) <= 1e-6,
            "kappa=1 gives " + fmt(w1.certified_value));
  o.require(std::abs(w05.certified_value - oracle_05) <= 1e-6 && std::abs(w05.a(0)) <= 1e-6,
            "kappa=0.05 gives " + fmt(w05.certified_value));
  if (o.passed) {
    o.detail = "values " + fmt(w1.certified_value) + ", " + fmt(w05.certified_value) + "; weights " +
               fmt(w1.a(0)) + ", " + fmt(w05.a(0));
  }
  return o;
}

Outcome unbounded_reduction() {
  Outcome o;
  std::mt19937_64 rng(kSeed);
  std::uniform_real_distribution<double> u(-0.95, 0.95);
  double worst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 1 + trial % 4;
    const int m = n + trial % 3;
    std::vector<double> pts = spread_points(m, 0.5);
    for (auto& p : pts) p = std::clamp(p + 0.05 * u(rng), -1.0, 1.0);
    const double eps = 0.01 + 0.1 * std::abs(u(rng));
    const auto q = trial % 3 == 2 ? cheb::FunctionalSpec::integral() : cheb::FunctionalSpec::point(u(rng));
    ProblemSpec big = make_spec(ModelType::type2, n, eps, 1e6, pts, q);
    ProblemSpec inf = big;
    inf.kappa = kInfinity;
    try {
      big.validate();
    } catch (const std::exception&) {
      big.quantity = cheb::FunctionalSpec::integral();
      inf.quantity = big.quantity;
    }
    const auto& wb = record(big, solve_type2(big, kTol));
    const auto& wi = record(inf, solve_type2_kappa_inf(inf, kTol));
    o.require(wb.diagnostics.optimal() && wi.diagnostics.optimal(), "solver status on " + describe(big));
    const double diff = std::abs(wb.certified_value - wi.certified_value);
    worst = std::max(worst, diff);
    o.require(diff <= 1e-4, describe(big) + " differs by " + fmt(diff));
  }

  ProblemSpec two = make_spec(ModelType::type2, 2, 0.1, kInfinity, {-1.0, 1.0},
                              cheb::FunctionalSpec::point(0.0));
  const auto& w = record(two, solve_type2_kappa_inf(two, kTol));
  // V a = (T_0(0), T_1(0)) with V(j, i) = T_j(x_i).
  Eigen::Matrix2d V;
  V << 1.0, 1.0, -1.0, 1.0;
  const Eigen::Vector2d exact = V.fullPivLu().solve(Eigen::Vector2d(1.0, 0.0));
  o.require(w.diagnostics.optimal() && (w.a - exact).lpNorm<Eigen::Infinity>() <= 1e-8 &&
                std::abs(w.certified_value - 2 * two.epsilon) <= 1e-8,
            "two-point instance gives " + fmt(w.certified_value));
  if (o.passed) o.detail = "10 random specs, max difference " + fmt(worst) + "; a=(0.5, 0.5)";
  return o;
}

Outcome decomposition_identity() {
  Outcome o;
  int checked = 0;
  for (const auto& [spec, w] : type2_suite) {
    if (!w.diagnostics.optimal()) continue;
    const auto b = oracle::worst_case_type2(w.a, spec, {2048, 200, kSeed});
    ++checked;
    o.require(w.certified_value >= b.lower - 1e-6 && w.certified_value <= b.upper + 1e-6,
              describe(spec) + ": " + fmt(w.certified_value) + " outside [" + fmt(b.lower) + ", " +
                  fmt(b.upper) + "]");
  }
  o.require(checked > 0, "no instances");
  if (o.passed) o.detail = std::to_string(checked) + " type2 instances";
  return o;
}

Outcome sandwich_ordering() {
  Outcome o;
  int cells = 0;
  for (const auto& spec : sandwich_specs()) {
    const int base = std::max(spec.n, spec.m());
    for (int N : {base, 2 * base, 4 * base}) {
      for (int K : {32, 64, 128}) {
        const auto sw = sandwich(spec, N, K, kTol);
        ++cells;
        o.require(sw.optimal(), describe(spec) + " N=" + std::to_string(N) + " not optimal");
        o.require(sw.alpha_N <= sw.beta_t + 2e-8,
                  describe(spec) + " N=" + std::to_string(N) + " K=" + std::to_string(K) +
                      ": alpha " + fmt(sw.alpha_N) + " > beta " + fmt(sw.beta_t));
      }
    }
  }
  if (o.passed) o.detail = std::to_string(cells) + " (N, K) cells over 5 specs";
  return o;
}

Outcome monotonicity() {
  Outcome o;
  for (const auto& spec : sandwich_specs()) {
    const int base = std::max(spec.n, spec.m());
    const auto study = convergence_study(spec, {base, 2 * base, 4 * base, 8 * base}, {64, 128, 256}, kTol);
    o.require(study.optimal(), describe(spec) + " not optimal");
    const int nK = 3;
    for (std::size_t r = 0; r < study.rows.size(); ++r) {
      const auto& row = study.rows[r];
      if (r >= nK) {
        o.require(row.alpha >= study.rows[r - nK].alpha - 1e-8,
                  describe(spec) + ": alpha drops at N=" + std::to_string(row.N));
      }
      if (r % nK != 0) {
        o.require(row.beta <= study.rows[r - 1].beta + 1e-8,
                  describe(spec) + ": beta rises at K=" + std::to_string(row.K));
      }
    }
  }
  if (o.passed) o.detail = "N=(b, 2b, 4b, 8b) with b=max(n, m), nested K=(64, 128, 256), 5 specs";
  return o;
}

Outcome gap_closure() {
  Outcome o;
  const auto a = sandwich(micro(ModelType::type1, 1.0), 16, 64, kTol);
  o.require(a.optimal() && a.gap < 1e-3, "micro-instance gap " + fmt(a.gap));
  const auto b = sandwich(nodes_spec(), 50, 200, kTol);
  o.require(b.optimal() && b.gap < 1e-2, "nodes gap " + fmt(b.gap));
  o.require(std::abs(b.alpha_N - 0.2117983016) <= 1e-6, "baseline alpha " + fmt(b.alpha_N));
  if (o.passed) o.detail = "gaps " + fmt(a.gap) + " and " + fmt(b.gap) + ", alpha " + fmt(b.alpha_N);
  return o;
}

Outcome empirical_domination() {
  Outcome o;
  int instances = 0;
  for (double kappa : {0.2, 1.0, kInfinity}) {
    record(medium(kappa), solve_type2(medium(kappa), kTol));
  }
  for (const auto& [spec, w] : type2_suite) {
    if (!w.diagnostics.optimal()) continue;
    const auto samples = oracle::draw_samples(spec, kSeed, kSamples);
    const double err = oracle::empirical_error(w.a, samples, spec);
    ++instances;
    o.require(err <= w.certified_value + 1e-6,
              describe(spec) + ": sample error " + fmt(err) + " above " + fmt(w.certified_value));
  }
  for (const auto& spec : sandwich_specs()) {
    const auto sw = sandwich(spec, 4 * std::max(spec.n, spec.m()), 128, kTol);
    if (!sw.optimal()) {
      o.require(false, describe(spec) + " not optimal");
      continue;
    }
    const auto samples = oracle::draw_samples(spec, kSeed, kSamples);
    const double err = oracle::empirical_error(sw.a_t, samples, spec);
    ++instances;
    o.require(err <= sw.beta_t + 1e-6, describe(spec) + ": sample error " + fmt(err) + " above beta");
  }

  // f = kappa + epsilon T_6: T_6(0.5) = 1 and T_6(0) = -1.
  const ProblemSpec spec = micro(ModelType::type2, 1.0);
  const auto w = solve_type2(spec, kTol);
  Eigen::VectorXd h = Eigen::VectorXd::Zero(7);
  h(6) = spec.epsilon;
  const std::vector<oracle::SampledFunction> witness = {
      oracle::SampledFunction::from_parts(Eigen::VectorXd::Constant(1, spec.kappa), h)};
  const double achieved = oracle::empirical_error(w.a, witness, spec);
  o.require(achieved >= 0.2 - 1e-6, "witness error " + fmt(achieved));
  if (o.passed) {
    o.detail = std::to_string(instances) + " instances x " + std::to_string(kSamples) +
               " samples; witness error " + fmt(achieved);
  }
  return o;
}

Outcome noise_consistency() {
  Outcome o;
  const ProblemSpec clean2 = medium(1.0);
  const auto base2 = record(clean2, solve_type2(clean2, kTol));
  ProblemSpec clean1 = sandwich_specs()[1];
  const int N = 4 * clean1.n + 8;
  const auto base1 = solve_type1_lower(clean1, N, kTol);
  o.require(base2.diagnostics.optimal() && base1.diagnostics.optimal(), "noiseless solves");
  for (double p : {1.0, 2.0, kInfinity}) {
    ProblemSpec s2 = clean2;
    ProblemSpec s1 = clean1;
    s2.noise = NoiseModel{p, 0.0};
    s1.noise = NoiseModel{p, 0.0};
    const auto z2 = solve_type2(s2, kTol);
    const auto z1 = solve_type1_lower(s1, N, kTol);
    o.require((z2.a - base2.a).lpNorm<Eigen::Infinity>() <= 1e-8 &&
                  (z1.a - base1.a).lpNorm<Eigen::Infinity>() <= 1e-8,
              "eta=0 changes the weights for p=" + fmt(p));
    double last2 = base2.certified_value, last1 = base1.certified_value;
    for (double eta : {0.001, 0.01, 0.1}) {
      s2.noise = NoiseModel{p, eta};
      s1.noise = NoiseModel{p, eta};
      const auto& w2 = record(s2, solve_type2(s2, kTol));
      const auto w1 = solve_type1_lower(s1, N, kTol);
      o.require(w2.diagnostics.optimal() && w1.diagnostics.optimal(), "noisy solve status");
      o.require(w2.certified_value >= last2 - 1e-8 && w1.certified_value >= last1 - 1e-8,
                "value decreases at eta=" + fmt(eta) + " p=" + fmt(p));
      last2 = w2.certified_value;
      last1 = w1.certified_value;
    }
  }
  if (o.passed) o.detail = "p in {1, 2, inf}, eta in {0, 0.001, 0.01, 0.1}, both models";
  return o;
}

Outcome determinism() {
  Outcome o;
  const auto dir = std::filesystem::temp_directory_path();
  const std::vector<std::pair<std::string, ProblemSpec>> specs = {
      {"optrec_acceptance_t2.json", medium(1.0)}, {"optrec_acceptance_t1.json", nodes_spec()}};
  for (const auto& [name, spec] : specs) {
    io::SpecFile file;
    file.spec = spec;
    file.truncation = 16;
    file.grid_size = 64;
    const std::string path = (dir / name).string();
    io::write_json(io::to_json(file), path);
    std::string runs[2];
    for (auto& text : runs) {
      cli::SolveFlags flags;
      flags.seed = 11;
      std::ostringstream out, err;
      o.require(cli::cmd_solve(path, flags, out, err) == cli::kOk, name + " solve failed");
      auto doc = io::Json::parse(out.str());
      doc.erase("wall_clock_seconds");
      text = doc.dump();
    }
    o.require(runs[0] == runs[1], name + " differs between runs");
    std::filesystem::remove(path);
  }
  if (o.passed) o.detail = "solve output identical apart from wall_clock_seconds";
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* title;
    std::function<Outcome()> run;
  };
  // Criterion 3 reads the type2 instances solved by the others, so it runs last.
  const std::vector<Criterion> order = {
      {1, "analytic micro-instance", analytic_micro_instance},
      {2, "unbounded reduction", unbounded_reduction},
      {4, "sandwich ordering", sandwich_ordering},
      {5, "monotonicity", monotonicity},
      {6, "gap closure", gap_closure},
      {7, "empirical domination", empirical_domination},
      {8, "noise consistency", noise_consistency},
      {9, "determinism", determinism},
      {3, "decomposition identity", decomposition_identity},
  };
  std::vector<std::pair<int, std::string>> lines;
  bool all = true;
  for (const auto& c : order) {
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& ex) {
      out.passed = false;
      out.detail = std::string("exception: ") + ex.what();
    }
    all = all && out.passed;
    lines.emplace_back(c.id, std::string(out.passed ? "PASS" : "FAIL") + " " + std::to_string(c.id) +
                                 " " + c.title + ": " + out.detail);
  }
  std::sort(lines.begin(), lines.end());
  for (const auto& [id, line] : lines) std::cout << line << '\n';
  return all ? 0 : 1;
}
