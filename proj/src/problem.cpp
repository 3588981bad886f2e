#include "optrec/problem.hpp"

#include <algorithm>
#include <cmath>

#include "optrec/errors.hpp"

namespace optrec {

const char* to_string(ModelType model) {
  return model == ModelType::type1 ? "type1" : "type2";
}

double NoiseModel::conjugate() const {
  if (p == 1.0) return kInfinity;
  if (p == 2.0) return 2.0;
  return 1.0;
}

void ProblemSpec::validate() const {
  if (n < 1) throw SpecError("n", "must be at least 1");
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw SpecError("epsilon", "must be positive and finite");
  }
  if (!(kappa > 0.0)) throw SpecError("kappa", "must be positive or inf");
  if (points.empty()) throw SpecError("points", "at least one observation point is required");
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!(std::abs(points[i]) <= 1.0)) {
      throw SpecError("points", "entry " + std::to_string(i) + " lies outside [-1, 1]");
    }
    for (std::size_t k = i + 1; k < points.size(); ++k) {
      if (points[i] == points[k]) {
        throw SpecError("points", "entries " + std::to_string(i) + " and " + std::to_string(k) +
                                      " coincide");
      }
    }
  }
  if (quantity.is_atomic()) {
    throw SpecError("quantity", "only point evaluations and the normalized integral are supported");
  }
  if (quantity.is_point()) {
    const double x0 = quantity.point_location();
    if (std::find(points.begin(), points.end(), x0) != points.end()) {
      throw SpecError("quantity", "x0 coincides with an observation point");
    }
  }
  if (noise) {
    if (noise->p != 1.0 && noise->p != 2.0 && !std::isinf(noise->p)) {
      throw SpecError("noise", "p must be 1, 2 or inf");
    }
    if (!(noise->eta >= 0.0) || !std::isfinite(noise->eta)) {
      throw SpecError("noise", "eta must be finite and nonnegative");
    }
  }
}

std::vector<double> ProblemSpec::excluded_points() const {
  std::vector<double> out = points;
  if (quantity.is_point()) out.push_back(quantity.point_location());
  return out;
}

Eigen::MatrixXd observation_matrix(const std::vector<double>& points, int rows) {
  Eigen::MatrixXd C(rows, static_cast<Eigen::Index>(points.size()));
  for (std::size_t i = 0; i < points.size(); ++i) {
    C.col(static_cast<Eigen::Index>(i)) = cheb::values(points[i], rows);
  }
  return C;
}

Diagnostics Diagnostics::from(const conic::ConicSolution& sol) {
  Diagnostics d;
  d.status = sol.status;
  d.iterations = sol.iterations;
  d.primal_residual = sol.primal_residual;
  d.dual_residual = sol.dual_residual;
  d.gap = sol.gap;
  d.dropped_equalities = sol.dropped_equalities;
  d.message = sol.message;
  return d;
}

double noise_penalty(const ProblemSpec& spec, const Eigen::VectorXd& a) {
  if (!spec.has_noise()) return 0.0;
  const double q = spec.noise->conjugate();
  const double norm = std::isinf(q) ? a.lpNorm<Eigen::Infinity>()
                      : q == 2.0    ? a.norm()
                                    : a.lpNorm<1>();
  return spec.noise->eta * norm;
}

conic::LinearExpr add_noise_term(const ProblemSpec& spec, conic::ProblemBuilder& builder,
                                 const conic::VarRange& a, const conic::VarRange* abs_bounds) {
  conic::LinearExpr term;
  if (!spec.has_noise()) return term;
  const double eta = spec.noise->eta;
  const double q = spec.noise->conjugate();
  if (q == 1.0) {
    if (abs_bounds != nullptr) {
      for (int i = 0; i < a.size; ++i) term += eta * (*abs_bounds)[i];
      return term;
    }
    auto s = builder.add_variables(a.size);
    for (int i = 0; i < a.size; ++i) {
      builder.add_nonnegative(s[i] + a[i]);
      builder.add_nonnegative(s[i] - a[i]);
      term += eta * s[i];
    }
    return term;
  }
  auto t = builder.add_variables(1);
  if (std::isinf(q)) {
    for (int i = 0; i < a.size; ++i) {
      builder.add_nonnegative(t[0] + a[i]);
      builder.add_nonnegative(t[0] - a[i]);
    }
  } else {
    std::vector<conic::LinearExpr> cone{t[0]};
    for (int i = 0; i < a.size; ++i) cone.push_back(a[i]);
    builder.add_second_order(cone);
  }
  term += eta * t[0];
  return term;
}

}  // namespace optrec
