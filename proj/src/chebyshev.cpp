#include "optrec/chebyshev.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "optrec/errors.hpp"

namespace optrec::cheb {

namespace {

void check_location(double x, const char* what) {
  if (!(std::abs(x) <= 1.0 + kDomainSlack)) {
    throw DomainError(std::string(what) + " " + std::to_string(x) + " lies outside [-1, 1]");
  }
}

double clamp_unit(double x) { return std::clamp(x, -1.0, 1.0); }

double integral_moment(int j) {
  auto integrand = [j](double x) { return std::cos(j * std::acos(clamp_unit(x))); };
  double error = 0.0;
  const double value = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      integrand, -1.0, 1.0, 15, 1e-15, &error);
  return 0.5 * value;
}

}  // namespace

FunctionalSpec FunctionalSpec::point(double x) {
  check_location(x, "point evaluation location");
  return FunctionalSpec(PointEvaluation{clamp_unit(x)});
}

FunctionalSpec FunctionalSpec::integral() { return FunctionalSpec(NormalizedIntegral{}); }

FunctionalSpec FunctionalSpec::atomic(std::vector<Atom> atoms) {
  for (auto& atom : atoms) {
    check_location(atom.location, "atom location");
    atom.location = clamp_unit(atom.location);
  }
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    for (std::size_t k = i + 1; k < atoms.size(); ++k) {
      if (atoms[i].location == atoms[k].location) {
        throw std::invalid_argument("atomic measure has repeated location " +
                                    std::to_string(atoms[i].location));
      }
    }
  }
  return FunctionalSpec(AtomicMeasure{std::move(atoms)});
}

double FunctionalSpec::point_location() const {
  if (const auto* p = std::get_if<PointEvaluation>(&kind_)) return p->x;
  throw std::logic_error("functional is not a point evaluation");
}

double FunctionalSpec::apply(const Eigen::VectorXd& coeffs) const {
  if (coeffs.size() == 0) return 0.0;
  return coeffs.dot(moments(*this, static_cast<int>(coeffs.size())).entries);
}

Eigen::VectorXd values(double x, int n) {
  if (n <= 0) throw DomainError("number of Chebyshev values must be positive");
  check_location(x, "evaluation point");
  x = clamp_unit(x);
  Eigen::VectorXd t(n);
  t(0) = 1.0;
  if (n > 1) t(1) = x;
  for (int j = 2; j < n; ++j) t(j) = 2.0 * x * t(j - 1) - t(j - 2);
  return t;
}

double evaluate(const Eigen::VectorXd& coeffs, double x) {
  const Eigen::Index n = coeffs.size();
  if (n == 0) return 0.0;
  double b1 = 0.0, b2 = 0.0;
  for (Eigen::Index j = n - 1; j >= 1; --j) {
    const double b0 = coeffs(j) + 2.0 * x * b1 - b2;
    b2 = b1;
    b1 = b0;
  }
  return coeffs(0) + x * b1 - b2;
}

ChebMoments moments(const FunctionalSpec& f, int N) {
  if (N <= 0) throw DomainError("number of moments must be positive");
  ChebMoments out{Eigen::VectorXd::Zero(N)};
  std::visit(
      [&](const auto& kind) {
        using K = std::decay_t<decltype(kind)>;
        if constexpr (std::is_same_v<K, PointEvaluation>) {
          out.entries = values(kind.x, N);
        } else if constexpr (std::is_same_v<K, NormalizedIntegral>) {
          for (int j = 0; j < N; ++j) out.entries(j) = integral_moment(j);
        } else {
          for (const auto& atom : kind.atoms) {
            out.entries += atom.weight * values(atom.location, N);
          }
        }
      },
      f.kind());
  return out;
}

Eigen::MatrixXd toeplitz(const Eigen::VectorXd& u) {
  const Eigen::Index d = u.size();
  if (d == 0) throw std::invalid_argument("toeplitz: empty generating vector");
  Eigen::MatrixXd t(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) t(i, j) = u(std::abs(i - j));
  }
  return t;
}

MomentMatrix moment_matrix(std::span<const double> points, double condition_threshold) {
  const auto m = static_cast<int>(points.size());
  if (m == 0) throw std::invalid_argument("moment_matrix: no points");
  for (int i = 0; i < m; ++i) {
    for (int k = i + 1; k < m; ++k) {
      if (points[i] == points[k]) {
        throw std::invalid_argument("moment_matrix: duplicate point " + std::to_string(points[i]));
      }
    }
  }
  MomentMatrix out;
  out.matrix.resize(m, m);
  for (int i = 0; i < m; ++i) out.matrix.col(i) = values(points[i], m);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(out.matrix);
  const auto& sv = svd.singularValues();
  const double smallest = sv(sv.size() - 1);
  out.condition = smallest > 0.0 ? sv(0) / smallest : std::numeric_limits<double>::infinity();
  out.ill_conditioned = !(out.condition <= condition_threshold);
  return out;
}

std::vector<double> chebyshev_nodes(int K) {
  std::vector<double> nodes(std::max(K, 0));
  for (int k = 1; k <= K; ++k) {
    nodes[k - 1] = std::cos(std::numbers::pi * (2.0 * k - 1.0) / (2.0 * K));
  }
  return nodes;
}

std::vector<double> grid(int K, std::span<const double> exclusions, double tol) {
  if (K <= 0) throw DomainError("grid size must be positive");
  if (!(tol > 0.0)) throw DomainError("grid tolerance must be positive");

  auto nodes = chebyshev_nodes(K);
  auto conflict = [&](double t, std::size_t self, double radius) -> const double* {
    for (const double& e : exclusions) {
      if (std::abs(t - e) <= radius) return &e;
    }
    for (std::size_t k = 0; k < nodes.size(); ++k) {
      if (k != self && nodes[k] == t) return &nodes[k];
    }
    return nullptr;
  };

  for (std::size_t k = 0; k < nodes.size(); ++k) {
    // Each move places the node tol away from the conflicting value, so later
    // checks only need the tol/2 separation guarantee. The bounded retry count
    // catches tolerances too coarse for the node density.
    for (int attempt = 0;; ++attempt) {
      const double* hit = conflict(nodes[k], k, attempt == 0 ? tol : 0.5 * tol);
      if (hit == nullptr) break;
      if (attempt > 2 * static_cast<int>(exclusions.size() + nodes.size()) + 4) {
        throw std::runtime_error("grid: cannot separate node " + std::to_string(nodes[k]) +
                                 " from the excluded points with tol " + std::to_string(tol));
      }
      double moved = *hit + tol;
      if (moved > 1.0) moved = *hit - tol;
      if (moved < -1.0) {
        throw std::runtime_error("grid: tolerance too large for the interval");
      }
      nodes[k] = moved;
    }
  }
  return nodes;
}

}  // namespace optrec::cheb
