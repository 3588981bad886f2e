#include "optrec/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "optrec/errors.hpp"
#include "optrec/io.hpp"
#include "optrec/log.hpp"
#include "optrec/model_type1.hpp"
#include "optrec/model_type2.hpp"
#include "optrec/oracle.hpp"

namespace optrec::cli {

namespace {

using io::Json;
using Clock = std::chrono::steady_clock;

constexpr double kCheckSlack = 1e-6;

int exit_code(conic::Status status) {
  switch (status) {
    case conic::Status::optimal: return kOk;
    case conic::Status::infeasible:
    case conic::Status::unbounded: return kInfeasible;
    case conic::Status::numerical_failure: return kNumericalFailure;
  }
  return kNumericalFailure;
}

// Infeasible and unbounded outrank optimal; numerical failure outranks all.
conic::Status worse(conic::Status a, conic::Status b) {
  auto rank = [](conic::Status s) {
    switch (s) {
      case conic::Status::optimal: return 0;
      case conic::Status::infeasible:
      case conic::Status::unbounded: return 1;
      case conic::Status::numerical_failure: return 2;
    }
    return 2;
  };
  return rank(a) >= rank(b) ? a : b;
}

Json vector_json(const Eigen::VectorXd& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(io::number(v(i)));
  return out;
}

Eigen::VectorXd vector_from(const Json& arr, const std::string& field) {
  if (!arr.is_array()) throw SpecError(field, "expected an array");
  Eigen::VectorXd v(static_cast<Eigen::Index>(arr.size()));
  for (std::size_t i = 0; i < arr.size(); ++i) v(static_cast<Eigen::Index>(i)) = io::to_double(arr[i], field);
  return v;
}

Json diagnostics_json(const Diagnostics& d) {
  Json out;
  out["status"] = conic::to_string(d.status);
  out["iterations"] = d.iterations;
  out["primal_residual"] = io::number(d.primal_residual);
  out["dual_residual"] = io::number(d.dual_residual);
  out["gap"] = io::number(d.gap);
  out["dropped_equalities"] = d.dropped_equalities;
  out["message"] = d.message;
  return out;
}

double elapsed_seconds(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void emit(const Json& doc, const std::string& path, std::ostream& out) {
  if (path.empty()) {
    out << doc.dump(2) << '\n';
  } else {
    io::write_json(doc, path);
  }
}

double resolve_tolerance(const std::optional<double>& flag, const io::SpecFile& file) {
  const double tol = flag.value_or(file.tolerance.value_or(kDefaultTolerance));
  if (!(tol >= 1e-12 && tol <= 1e-2)) throw SpecError("tol", "must lie in [1e-12, 1e-2]");
  return tol;
}

void dump_problems(const std::string& path, const std::vector<conic::ConicProblem>& problems) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (std::size_t k = 0; k < problems.size(); ++k) {
    out << "# program " << k << '\n';
    conic::write_triplets(problems[k], out);
  }
}

// --- solve -------------------------------------------------------------------

int solve_type2_into(const io::SpecFile& file, double tol, const SolveFlags& flags, Json& result) {
  const ProblemSpec& spec = file.spec;
  if (!flags.dump_path.empty() && !spec.kappa_infinite()) {
    dump_problems(flags.dump_path, {assemble_type2(spec)});
  }
  const RecoveryWeights w = solve_type2(spec, tol);
  result["status"] = conic::to_string(w.diagnostics.status);
  result["weights"] = vector_json(w.a);
  result["certified_value"] = io::number(w.certified_value);
  result["solver"] = diagnostics_json(w.diagnostics);
  result["warnings"] = w.diagnostics.warnings;
  if (w.diagnostics.optimal()) {
    const auto bounds = oracle::worst_case_type2(w.a, spec);
    const auto samples = oracle::draw_samples(spec, flags.seed, flags.samples);
    const double empirical = oracle::empirical_error(w.a, samples, spec);
    Json check;
    check["worst_case_lower"] = io::number_or_inf(bounds.lower);
    check["worst_case_upper"] = io::number_or_inf(bounds.upper);
    check["empirical_error"] = empirical;
    check["samples"] = flags.samples;
    check["consistent"] = w.certified_value >= bounds.lower - kCheckSlack &&
                          w.certified_value <= bounds.upper + kCheckSlack &&
                          empirical <= w.certified_value + kCheckSlack;
    result["oracle"] = check;
  }
  return exit_code(w.diagnostics.status);
}

int solve_type1_into(const io::SpecFile& file, double tol, const SolveFlags& flags, Json& result) {
  const ProblemSpec& spec = file.spec;
  const int N = flags.N.value_or(file.truncation.value_or(std::max(4 * spec.n, spec.m())));
  const int K = flags.K.value_or(file.grid_size.value_or(kDefaultGridSize));
  const SandwichResult sw = sandwich(spec, N, K, tol);
  if (!flags.dump_path.empty()) {
    std::vector<conic::ConicProblem> programs{assemble_type1_truncated(spec, N)};
    if (sw.upper_available) programs.push_back(assemble_grid_lp(spec, sw.grid));
    dump_problems(flags.dump_path, programs);
  }

  conic::Status status = sw.lower.diagnostics.status;
  if (sw.upper_available) status = worse(status, sw.upper.diagnostics.status);
  std::vector<std::string> warnings = sw.lower.diagnostics.warnings;
  if (!sw.upper_available) {
    warnings.push_back(spec.has_noise() ? "upper bound unavailable with observation noise"
                                        : "upper bound unavailable for the normalized integral");
  }
  if (!sw.ordered) {
    warnings.push_back("alpha exceeds beta beyond 2 tol: solver accuracy is insufficient");
    status = conic::Status::numerical_failure;
  }

  result["status"] = conic::to_string(status);
  result["weights"] = vector_json(sw.upper_available ? sw.a_t : sw.a_N);
  result["certified_value"] = io::number(sw.upper_available ? sw.beta_t : kInfinity);
  result["lower_bound"] = io::number(sw.alpha_N);
  Json s;
  s["alpha"] = io::number(sw.alpha_N);
  s["beta"] = io::number(sw.beta_t);
  s["gap"] = io::number(sw.gap);
  s["N"] = N;
  s["K"] = K;
  s["grid_points"] = static_cast<int>(sw.grid.size());
  s["weights_lower"] = vector_json(sw.a_N);
  s["weights_upper"] = vector_json(sw.a_t);
  s["upper_bound_unavailable"] = !sw.upper_available;
  s["ordered"] = sw.ordered;
  result["sandwich"] = s;
  Json solver;
  solver["lower"] = diagnostics_json(sw.lower.diagnostics);
  if (sw.upper_available) solver["upper"] = diagnostics_json(sw.upper.diagnostics);
  result["solver"] = solver;
  result["warnings"] = warnings;
  if (status == conic::Status::optimal && sw.upper_available) {
    const auto samples = oracle::draw_samples(spec, flags.seed, flags.samples);
    const double empirical = oracle::empirical_error(sw.a_t, samples, spec);
    Json check;
    check["empirical_error"] = empirical;
    check["samples"] = flags.samples;
    check["consistent"] = empirical <= sw.beta_t + kCheckSlack;
    result["oracle"] = check;
  }
  return exit_code(status);
}

// --- verify ------------------------------------------------------------------

struct Check {
  std::string name;
  bool passed = true;
  std::string detail;
};

std::string format(double x) {
  std::ostringstream os;
  os << std::setprecision(12) << x;
  return os.str();
}

std::vector<Check> verify_type2(const ProblemSpec& spec, const Eigen::VectorXd& a, double certified,
                                const VerifyFlags& flags) {
  std::vector<Check> checks;
  const auto bounds = oracle::worst_case_type2(a, spec);
  checks.push_back({"decomposition",
                    certified >= bounds.lower - kCheckSlack && certified <= bounds.upper + kCheckSlack,
                    "certified " + format(certified) + " within [" + format(bounds.lower) + ", " +
                        format(bounds.upper) + "]"});
  if (flags.samples > 0) {
    const auto samples = oracle::draw_samples(spec, flags.seed, flags.samples);
    const double empirical = oracle::empirical_error(a, samples, spec);
    checks.push_back({"empirical_domination", empirical <= certified + kCheckSlack,
                      "max sampled error " + format(empirical) + " vs certified " + format(certified)});
  }
  return checks;
}

std::vector<Check> verify_type1(const ProblemSpec& spec, const Eigen::VectorXd& a, const Json& doc,
                                double tol, const VerifyFlags& flags) {
  std::vector<Check> checks;
  const Json& s = doc.at("sandwich");
  const double alpha = io::to_double(s.at("alpha"), "sandwich.alpha");
  if (s.at("upper_bound_unavailable").get<bool>()) {
    checks.push_back({"upper_bound", true, "unavailable; lower bound " + format(alpha) +
                                               " not re-derived"});
    return checks;
  }
  const double beta = io::to_double(s.at("beta"), "sandwich.beta");
  checks.push_back({"sandwich_order", alpha <= beta + 2.0 * tol,
                    "alpha " + format(alpha) + " <= beta " + format(beta)});
  const int K = s.at("K").get<int>();
  const auto grid = K > 0 ? cheb::grid(K, spec.excluded_points()) : std::vector<double>{};
  const auto bound = grid_error_bound(spec, grid, a, tol);
  if (bound.diagnostics.optimal()) {
    checks.push_back({"grid_bound", bound.certified_value <= beta + kCheckSlack,
                      "grid error bound of the weights " + format(bound.certified_value) +
                          " vs beta " + format(beta)});
  } else {
    checks.push_back({"grid_bound", false,
                      std::string("grid LP ") + conic::to_string(bound.diagnostics.status)});
  }
  if (flags.samples > 0) {
    const auto samples = oracle::draw_samples(spec, flags.seed, flags.samples);
    const double empirical = oracle::empirical_error(a, samples, spec);
    checks.push_back({"empirical_domination", empirical <= beta + kCheckSlack,
                      "max sampled error " + format(empirical) + " vs beta " + format(beta)});
  }
  return checks;
}

std::vector<int> default_N_list(const ProblemSpec& spec) {
  std::vector<int> out;
  for (int N = std::max(spec.n, spec.m()); N <= 256; N *= 2) out.push_back(N);
  if (out.empty()) out.push_back(std::max(spec.n, spec.m()));
  return out;
}

void print_table(const ConvergenceStudy& study, std::ostream& os) {
  os << std::setw(6) << "N" << std::setw(8) << "K" << std::setw(8) << "points" << std::setw(20)
     << "alpha" << std::setw(20) << "beta" << std::setw(16) << "gap" << '\n';
  os << std::setprecision(12);
  for (const auto& row : study.rows) {
    os << std::setw(6) << row.N << std::setw(8) << row.K << std::setw(8) << row.grid_points
       << std::setw(20) << row.alpha << std::setw(20) << row.beta << std::setw(16)
       << std::setprecision(4) << row.gap << std::setprecision(12) << '\n';
  }
}

}  // namespace

std::vector<int> parse_int_list(const std::string& text, const std::string& field) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const int value = std::stoi(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
      out.push_back(value);
    } catch (const std::exception&) {
      throw SpecError(field, "cannot parse \"" + item + "\" as an integer");
    }
  }
  if (out.empty()) throw SpecError(field, "empty list");
  return out;
}

int cmd_solve(const std::string& spec_path, const SolveFlags& flags, std::ostream& out,
              std::ostream& err) {
  const auto start = Clock::now();
  try {
    const io::SpecFile file = io::parse_spec(io::read_json(spec_path));
    const double tol = resolve_tolerance(flags.tol, file);
    if (flags.samples < 0) throw SpecError("samples", "must be nonnegative");
    if (flags.N && *flags.N < 1) throw SpecError("N", "must be positive");
    if (flags.K && *flags.K < 0) throw SpecError("K", "must be nonnegative");

    Json result;
    result["spec"] = io::to_json(file);
    result["model"] = to_string(file.spec.model);
    result["tolerance"] = tol;
    result["seed"] = flags.seed;
    const int code = file.spec.model == ModelType::type2 ? solve_type2_into(file, tol, flags, result)
                                                         : solve_type1_into(file, tol, flags, result);
    result["wall_clock_seconds"] = elapsed_seconds(start);
    emit(result, flags.out_path, out);
    if (code != kOk) err << "solve: status " << result["status"].get<std::string>() << '\n';
    return code;
  } catch (const SpecError& ex) {
    err << "spec error in " << ex.field() << ": " << ex.what() << '\n';
    return kSpecError;
  } catch (const std::exception& ex) {
    err << "solve failed: " << ex.what() << '\n';
    return kNumericalFailure;
  }
}

int cmd_verify(const std::string& result_path, const VerifyFlags& flags, std::ostream& out,
               std::ostream& err) {
  try {
    if (flags.samples < 0) throw SpecError("samples", "must be nonnegative");
    Json doc = io::read_json(result_path);
    if (!doc.is_object() || !doc.contains("spec")) throw SpecError("spec", "result has no spec echo");
    const io::SpecFile file = io::parse_spec(doc.at("spec"));
    const ProblemSpec& spec = file.spec;
    const double tol = io::to_double(doc.at("tolerance"), "tolerance");

    std::vector<Check> checks;
    const std::string status = doc.at("status").get<std::string>();
    if (status != "optimal") {
      checks.push_back({"status", true, "result is " + status + "; no bounds to verify"});
    } else {
      const Eigen::VectorXd a = vector_from(doc.at("weights"), "weights");
      const bool sized = a.size() == spec.m() && a.allFinite();
      checks.push_back({"weights", sized, std::to_string(a.size()) + " finite weights for " +
                                              std::to_string(spec.m()) + " points"});
      const Json& cv = doc.at("certified_value");
      const bool has_value = cv.is_number();
      const double certified = has_value ? cv.get<double>() : kInfinity;
      if (has_value) {
        checks.push_back({"certified_value", certified >= 0.0, "value " + format(certified)});
      }
      if (sized) {
        auto more = spec.model == ModelType::type2
                        ? verify_type2(spec, a, certified, flags)
                        : verify_type1(spec, a, doc, tol, flags);
        checks.insert(checks.end(), more.begin(), more.end());
      }
    }

    bool all = true;
    Json list = Json::array();
    for (const auto& c : checks) {
      all = all && c.passed;
      list.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
      out << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << c.detail << '\n';
    }
    doc["verification"] = {{"passed", all}, {"samples", flags.samples}, {"seed", flags.seed},
                           {"checks", list}};
    io::write_json(doc, flags.out_path.empty() ? result_path : flags.out_path);
    return all ? kOk : kVerifyFailed;
  } catch (const SpecError& ex) {
    err << "verify: error in " << ex.field() << ": " << ex.what() << '\n';
    return kSpecError;
  } catch (const std::exception& ex) {
    err << "verify failed: " << ex.what() << '\n';
    return kSpecError;
  }
}

int cmd_converge(const std::string& spec_path, const ConvergeFlags& flags, std::ostream& out,
                 std::ostream& err) {
  const auto start = Clock::now();
  try {
    const io::SpecFile file = io::parse_spec(io::read_json(spec_path));
    const ProblemSpec& spec = file.spec;
    if (spec.model != ModelType::type1) throw SpecError("model", "converge needs a type1 spec");
    const double tol = resolve_tolerance(flags.tol, file);
    const bool default_schedule = flags.N_list.empty();
    const auto N_list = default_schedule ? default_N_list(spec) : flags.N_list;
    const auto K_list = flags.K_list.empty() ? std::vector<int>{64, 128, 256} : flags.K_list;

    const ConvergenceStudy study =
        convergence_study(spec, N_list, K_list, tol, flags.parallel, default_schedule ? tol : 0.0);

    conic::Status status = conic::Status::optimal;
    for (const auto& w : study.lower) status = worse(status, w.diagnostics.status);
    for (const auto& w : study.upper) status = worse(status, w.diagnostics.status);
    int code = exit_code(status);
    if (code == kOk && !(study.alpha_monotone && study.beta_monotone)) code = kNumericalFailure;

    Json doc;
    doc["spec"] = io::to_json(file);
    doc["tolerance"] = tol;
    doc["status"] = conic::to_string(status);
    doc["N_list"] = N_list;
    doc["K_list"] = K_list;
    Json rows = Json::array();
    for (const auto& r : study.rows) {
      rows.push_back({{"N", r.N}, {"K", r.K}, {"grid_points", r.grid_points},
                      {"alpha", io::number(r.alpha)}, {"beta", io::number(r.beta)},
                      {"gap", io::number(r.gap)}});
    }
    doc["rows"] = rows;
    doc["weight_drift"] = study.weight_drift;
    doc["alpha_monotone"] = study.alpha_monotone;
    doc["beta_monotone"] = study.beta_monotone;
    doc["upper_bound_unavailable"] = !study.upper_available;
    doc["diagnostics"] = study.diagnostics;
    doc["wall_clock_seconds"] = elapsed_seconds(start);

    if (flags.out_path.empty()) {
      print_table(study, err);
      out << doc.dump(2) << '\n';
    } else {
      io::write_json(doc, flags.out_path);
      print_table(study, out);
    }
    for (const auto& d : study.diagnostics) err << "converge: " << d << '\n';
    return code;
  } catch (const SpecError& ex) {
    err << "spec error in " << ex.field() << ": " << ex.what() << '\n';
    return kSpecError;
  } catch (const std::exception& ex) {
    err << "converge failed: " << ex.what() << '\n';
    return kNumericalFailure;
  }
}

}  // namespace optrec::cli
