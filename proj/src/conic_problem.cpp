#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>
#include <string>

#include "optrec/conic.hpp"

namespace optrec::conic {

bool ConicProblem::is_linear() const {
  return std::all_of(cones.begin(), cones.end(),
                     [](const ConeBlock& k) { return k.kind == ConeKind::nonnegative; });
}

void ConicProblem::validate() const {
  const auto n = c.size();
  if (A.rows() != b.size()) throw std::invalid_argument("conic problem: A rows differ from b");
  if (G.rows() != h.size()) throw std::invalid_argument("conic problem: G rows differ from h");
  if (A.rows() > 0 && A.cols() != n) throw std::invalid_argument("conic problem: A columns");
  if (G.rows() > 0 && G.cols() != n) throw std::invalid_argument("conic problem: G columns");
  long covered = 0;
  for (const auto& cone : cones) {
    if (cone.dim <= 0) throw std::invalid_argument("conic problem: empty cone block");
    covered += cone.rows();
  }
  if (covered != h.size()) {
    throw std::invalid_argument("conic problem: cone blocks cover " + std::to_string(covered) +
                                " rows, G has " + std::to_string(h.size()));
  }
  if (!c.allFinite() || !b.allFinite() || !h.allFinite() || !std::isfinite(offset)) {
    throw std::invalid_argument("conic problem: non-finite data");
  }
}

ConicProblem ConicProblem::permuted(const std::vector<int>& perm) const {
  const int n = num_variables();
  if (static_cast<int>(perm.size()) != n) throw std::invalid_argument("permutation size");
  std::vector<int> inverse(n, -1);
  for (int k = 0; k < n; ++k) {
    if (perm[k] < 0 || perm[k] >= n || inverse[perm[k]] != -1) {
      throw std::invalid_argument("not a permutation");
    }
    inverse[perm[k]] = k;
  }
  auto remap = [&](const SparseMatrix& M) {
    std::vector<Eigen::Triplet<double, int>> triplets;
    for (int k = 0; k < M.outerSize(); ++k) {
      for (SparseMatrix::InnerIterator it(M, k); it; ++it) {
        triplets.emplace_back(it.row(), inverse[it.col()], it.value());
      }
    }
    SparseMatrix out(M.rows(), M.cols());
    out.setFromTriplets(triplets.begin(), triplets.end());
    return out;
  };
  ConicProblem out = *this;
  for (int k = 0; k < n; ++k) out.c(k) = c(perm[k]);
  out.A = remap(A);
  out.G = remap(G);
  return out;
}

const char* to_string(Status status) {
  switch (status) {
    case Status::optimal: return "optimal";
    case Status::infeasible: return "infeasible";
    case Status::unbounded: return "unbounded";
    case Status::numerical_failure: return "numerical_failure";
  }
  return "unknown";
}

void write_triplets(const ConicProblem& p, std::ostream& out) {
  out.precision(17);
  out << "# variables " << p.num_variables() << " equalities " << p.num_equalities()
      << " cone_rows " << p.num_cone_rows() << " offset " << p.offset << '\n';
  for (int k = 0; k < p.c.size(); ++k) {
    if (p.c(k) != 0.0) out << "c 0 " << k << ' ' << p.c(k) << '\n';
  }
  auto dump = [&out](const char* tag, const SparseMatrix& M) {
    for (int k = 0; k < M.outerSize(); ++k) {
      for (SparseMatrix::InnerIterator it(M, k); it; ++it) {
        out << tag << ' ' << it.row() << ' ' << it.col() << ' ' << it.value() << '\n';
      }
    }
  };
  dump("A", p.A);
  for (int k = 0; k < p.b.size(); ++k) {
    if (p.b(k) != 0.0) out << "b " << k << " 0 " << p.b(k) << '\n';
  }
  dump("G", p.G);
  for (int k = 0; k < p.h.size(); ++k) {
    if (p.h(k) != 0.0) out << "h " << k << " 0 " << p.h(k) << '\n';
  }
  for (const auto& cone : p.cones) {
    const char* name = cone.kind == ConeKind::nonnegative   ? "nonnegative"
                       : cone.kind == ConeKind::second_order ? "second_order"
                                                             : "psd";
    out << "cone " << name << ' ' << cone.dim << '\n';
  }
}

// ---------------------------------------------------------------------------

LinearExpr LinearExpr::variable(int index, double coeff) {
  LinearExpr e;
  e.terms_.emplace_back(index, coeff);
  return e;
}

LinearExpr& LinearExpr::add(int index, double coeff) {
  terms_.emplace_back(index, coeff);
  return *this;
}

LinearExpr& LinearExpr::operator+=(const LinearExpr& other) {
  terms_.insert(terms_.end(), other.terms_.begin(), other.terms_.end());
  constant_ += other.constant_;
  return *this;
}

LinearExpr& LinearExpr::operator-=(const LinearExpr& other) {
  for (const auto& [k, v] : other.terms_) terms_.emplace_back(k, -v);
  constant_ -= other.constant_;
  return *this;
}

LinearExpr& LinearExpr::operator*=(double scale) {
  for (auto& term : terms_) term.second *= scale;
  constant_ *= scale;
  return *this;
}

namespace {

// Sums duplicate indices and drops exact zeros.
std::vector<std::pair<int, double>> compact(std::vector<std::pair<int, double>> terms) {
  std::sort(terms.begin(), terms.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<std::pair<int, double>> out;
  for (const auto& t : terms) {
    if (!out.empty() && out.back().first == t.first) {
      out.back().second += t.second;
    } else {
      out.push_back(t);
    }
  }
  std::erase_if(out, [](const auto& t) { return t.second == 0.0; });
  return out;
}

}  // namespace

VarRange ProblemBuilder::add_variables(int count) {
  if (count < 0) throw std::invalid_argument("negative variable count");
  VarRange r{num_vars_, count};
  num_vars_ += count;
  return r;
}

void ProblemBuilder::minimize(const LinearExpr& objective) { objective_ = objective; }

void ProblemBuilder::add_equality(const LinearExpr& expr) {
  equalities_.push_back({compact(expr.terms()), -expr.constant()});
}

void ProblemBuilder::push_cone_row(const LinearExpr& expr, double scale) {
  // s = h - G x = scale * expr  =>  G = -scale * coeffs, h = scale * constant.
  Row row{compact(expr.terms()), scale * expr.constant()};
  for (auto& t : row.terms) t.second *= -scale;
  cone_rows_.push_back(std::move(row));
}

void ProblemBuilder::add_nonnegative(const LinearExpr& expr) {
  push_cone_row(expr, 1.0);
  if (!cones_.empty() && cones_.back().kind == ConeKind::nonnegative) {
    ++cones_.back().dim;
  } else {
    cones_.push_back({ConeKind::nonnegative, 1});
  }
}

void ProblemBuilder::add_second_order(const std::vector<LinearExpr>& entries) {
  if (entries.empty()) throw std::invalid_argument("empty second-order cone");
  for (const auto& e : entries) push_cone_row(e, 1.0);
  cones_.push_back({ConeKind::second_order, static_cast<int>(entries.size())});
}

void ProblemBuilder::add_psd(const std::vector<std::vector<LinearExpr>>& lower) {
  const int d = static_cast<int>(lower.size());
  if (d == 0) throw std::invalid_argument("empty PSD block");
  for (int i = 0; i < d; ++i) {
    if (static_cast<int>(lower[i].size()) < i + 1) {
      throw std::invalid_argument("PSD block: row " + std::to_string(i) + " too short");
    }
  }
  for (int j = 0; j < d; ++j) {
    for (int i = j; i < d; ++i) push_cone_row(lower[i][j], i == j ? 1.0 : std::sqrt(2.0));
  }
  cones_.push_back({ConeKind::psd, d});
}

ConicProblem ProblemBuilder::build() const {
  ConicProblem p;
  p.c = Eigen::VectorXd::Zero(num_vars_);
  for (const auto& [k, v] : objective_.terms()) p.c(k) += v;
  p.offset = objective_.constant();

  auto assemble = [this](const std::vector<Row>& rows, SparseMatrix& M, Eigen::VectorXd& rhs) {
    std::vector<Eigen::Triplet<double, int>> triplets;
    rhs.resize(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
      for (const auto& [k, v] : rows[r].terms) {
        if (k < 0 || k >= num_vars_) throw std::invalid_argument("variable index out of range");
        triplets.emplace_back(static_cast<int>(r), k, v);
      }
      rhs(static_cast<Eigen::Index>(r)) = rows[r].rhs;
    }
    M.resize(static_cast<Eigen::Index>(rows.size()), num_vars_);
    M.setFromTriplets(triplets.begin(), triplets.end());
    M.makeCompressed();
  };
  assemble(equalities_, p.A, p.b);
  assemble(cone_rows_, p.G, p.h);
  p.cones = cones_;
  return p;
}

}  // namespace optrec::conic
