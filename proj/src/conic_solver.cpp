// Homogeneous self-dual primal-dual interior-point method with
// Nesterov-Todd scaling and Mehrotra predictor-corrector steps, in the
// formulation popularized by CVXOPT's conelp and ECOS. PSD blocks use the
// symmetrized Jordan product; Newton systems are reduced to
//
//   [ G' V G + dI   A' ] [dx]   [rx]
//   [ A            -dI ] [dy] = [ry],      V = (W'W)^{-1},
//
// factored by a sparse LDL' and polished by iterative refinement.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <optional>
#include <stdexcept>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>
#include <Eigen/SparseCholesky>
#include <unsupported/Eigen/FFT>

#include "optrec/conic.hpp"
#include "optrec/log.hpp"

namespace optrec::conic {

namespace {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Triplet = Eigen::Triplet<double, int>;

const double kSqrt2 = std::sqrt(2.0);

Mat smat(const Eigen::Ref<const Vec>& v, int d) {
  Mat M(d, d);
  for (int j = 0; j < d; ++j) {
    for (int i = j; i < d; ++i) {
      const double value = v(packed_index(d, i, j));
      M(i, j) = M(j, i) = (i == j) ? value : value / kSqrt2;
    }
  }
  return M;
}

void svec(const Mat& M, Eigen::Ref<Vec> v) {
  const int d = static_cast<int>(M.rows());
  for (int j = 0; j < d; ++j) {
    for (int i = j; i < d; ++i) {
      v(packed_index(d, i, j)) = (i == j) ? M(i, i) : 0.5 * kSqrt2 * (M(i, j) + M(j, i));
    }
  }
}

// Coefficients c with smat(v) = c_0 I + sum_l c_l (E_l + E_l'), where E_l
// is the l-th subdiagonal shift; false when smat(v) is not Toeplitz.
bool toeplitz_coefficients(const Eigen::Ref<const Vec>& v, int d, Eigen::Ref<Vec> c) {
  const Mat M = smat(v, d);
  c = M.col(0);
  const double slack = 1e-13 * std::max(1.0, M.cwiseAbs().maxCoeff());
  for (int j = 1; j < d; ++j) {
    for (int i = j; i < d; ++i) {
      if (std::abs(M(i, j) - c(i - j)) > slack) return false;
    }
  }
  return true;
}

// H(j, k) = tr(T_j P T_k P) for the Toeplitz basis T_0 = I, T_l = E_l + E_l',
// from the 2-D autocorrelation A(p, q) = sum P(y + p, v + q) P(y, v).
Mat toeplitz_hessian(const Mat& P) {
  const int d = static_cast<int>(P.rows());
  int L = 1;
  while (L < 2 * d) L *= 2;
  using Cplx = std::complex<double>;
  using CMat = Eigen::Matrix<Cplx, Eigen::Dynamic, Eigen::Dynamic>;
  using CVec = Eigen::Matrix<Cplx, Eigen::Dynamic, 1>;
  Eigen::FFT<double> fft;
  CMat X = CMat::Zero(L, L);
  X.topLeftCorner(d, d) = P.cast<Cplx>();
  CVec in(L), out(L);
  auto transform = [&](bool forward) {
    for (int pass = 0; pass < 2; ++pass) {
      for (int j = 0; j < L; ++j) {
        in = pass == 0 ? CVec(X.col(j)) : CVec(X.row(j).transpose());
        if (forward) fft.fwd(out, in); else fft.inv(out, in);
        if (pass == 0) X.col(j) = out; else X.row(j) = out.transpose();
      }
    }
  };
  transform(true);
  X = X.cwiseAbs2().cast<Cplx>();
  transform(false);
  auto A = [&](int p, int q) { return X((p + L) % L, (q + L) % L).real(); };
  Mat H(d, d);
  for (int j = 0; j < d; ++j) {
    for (int k = 0; k <= j; ++k) {
      double h;
      if (j == 0 && k == 0) h = A(0, 0);
      else if (k == 0) h = 2.0 * A(j, 0);
      else if (j == 0) h = 2.0 * A(0, k);
      else h = 2.0 * (A(j, k) + A(j, -k));
      H(j, k) = H(k, j) = h;
    }
  }
  return H;
}

struct Block {
  ConeBlock cone;
  int offset = 0;
  int rows = 0;

  // Columns of G touched by the block and the dense restriction of G to them
  // (unused for the orthant, which is handled row by row).
  std::vector<int> cols;
  Mat G;
  Mat toeplitz;  // PSD: Toeplitz coefficients of the columns of G, if all are Toeplitz

  // Nesterov-Todd scaling.
  Vec w;            // orthant: W = diag(w)
  Mat W, Winv;      // second-order cone (both symmetric)
  Mat R, Rinv;      // PSD: W z = svec(R' Z R)
  Mat P;            // PSD: Rinv' Rinv
};

double soc_residual(const Eigen::Ref<const Vec>& u) {
  return u(0) * u(0) - u.tail(u.size() - 1).squaredNorm();
}

// Largest alpha with x + alpha d in the second-order cone, x interior.
double soc_max_step(const Eigen::Ref<const Vec>& x, const Eigen::Ref<const Vec>& d) {
  const auto n = x.size();
  const double a = d(0) * d(0) - d.tail(n - 1).squaredNorm();
  const double b = 2.0 * (x(0) * d(0) - x.tail(n - 1).dot(d.tail(n - 1)));
  const double c = soc_residual(x);
  double alpha = std::numeric_limits<double>::infinity();
  if (d(0) < 0.0) alpha = -x(0) / d(0);
  const double scale = std::max({std::abs(a), std::abs(b), std::abs(c), 1e-300});
  if (std::abs(a) <= 1e-14 * scale) {
    if (b < 0.0) alpha = std::min(alpha, -c / b);
    return alpha;
  }
  const double disc = b * b - 4.0 * a * c;
  if (disc < 0.0) return alpha;
  const double sq = std::sqrt(disc);
  const double q = -0.5 * (b + (b >= 0.0 ? sq : -sq));
  for (double root : {q / a, q != 0.0 ? c / q : std::numeric_limits<double>::infinity()}) {
    if (root > 0.0) alpha = std::min(alpha, root);
  }
  return alpha;
}

// KKT regularization schemes, tried in order until one converges.
enum class Regularization { global, per_variable, equilibrated };

class Solver {
 public:
  Solver(const ConicProblem& p, const SolverOptions& opt, Regularization reg)
      : p_(p), opt_(opt), reg_(reg) {
    n_ = p.num_variables();
    m_ = p.num_equalities();
    k_ = p.num_cone_rows();
    int offset = 0;
    for (const auto& cone : p.cones) {
      Block blk;
      blk.cone = cone;
      blk.offset = offset;
      blk.rows = cone.rows();
      offset += blk.rows;
      degree_ += cone.degree();
      blocks_.push_back(std::move(blk));
    }
    Gt_ = p.G.transpose();
    At_ = p.A.transpose();
    extract_blocks();
  }

  ConicSolution run();

 private:
  // --- cone algebra --------------------------------------------------------
  template <typename F>
  void for_blocks(F&& f) const {
    for (const auto& blk : blocks_) f(blk);
  }

  Vec identity() const {
    Vec e = Vec::Zero(k_);
    for_blocks([&](const Block& blk) {
      auto seg = e.segment(blk.offset, blk.rows);
      switch (blk.cone.kind) {
        case ConeKind::nonnegative: seg.setOnes(); break;
        case ConeKind::second_order: seg(0) = 1.0; break;
        case ConeKind::psd:
          for (int i = 0; i < blk.cone.dim; ++i) seg(packed_index(blk.cone.dim, i, i)) = 1.0;
          break;
      }
    });
    return e;
  }

  Vec jordan(const Vec& u, const Vec& v) const {
    Vec out(k_);
    for_blocks([&](const Block& blk) {
      const auto us = u.segment(blk.offset, blk.rows);
      const auto vs = v.segment(blk.offset, blk.rows);
      auto os = out.segment(blk.offset, blk.rows);
      switch (blk.cone.kind) {
        case ConeKind::nonnegative: os = us.cwiseProduct(vs); break;
        case ConeKind::second_order:
          os(0) = us.dot(vs);
          os.tail(blk.rows - 1) = us(0) * vs.tail(blk.rows - 1) + vs(0) * us.tail(blk.rows - 1);
          break;
        case ConeKind::psd: {
          const int d = blk.cone.dim;
          const Mat U = smat(us, d), V = smat(vs, d);
          svec(0.5 * (U * V + V * U), os);
          break;
        }
      }
    });
    return out;
  }

  // Solves lambda o x = d for x, lambda the current scaled point.
  Vec jordan_divide(const Vec& d) const {
    Vec out(k_);
    for_blocks([&](const Block& blk) {
      const auto ls = lambda_.segment(blk.offset, blk.rows);
      const auto ds = d.segment(blk.offset, blk.rows);
      auto os = out.segment(blk.offset, blk.rows);
      switch (blk.cone.kind) {
        case ConeKind::nonnegative: os = ds.cwiseQuotient(ls); break;
        case ConeKind::second_order: {
          const int r = blk.rows;
          const double x0 = (ls(0) * ds(0) - ls.tail(r - 1).dot(ds.tail(r - 1))) / soc_residual(ls);
          os(0) = x0;
          os.tail(r - 1) = (ds.tail(r - 1) - x0 * ls.tail(r - 1)) / ls(0);
          break;
        }
        case ConeKind::psd: {
          const int dim = blk.cone.dim;
          for (int j = 0; j < dim; ++j) {
            const double lj = ls(packed_index(dim, j, j));
            for (int i = j; i < dim; ++i) {
              const double li = ls(packed_index(dim, i, i));
              const int idx = packed_index(dim, i, j);
              os(idx) = 2.0 * ds(idx) / (li + lj);
            }
          }
          break;
        }
      }
    });
    return out;
  }

  // Largest step keeping x + alpha dx in the cone (x interior).
  double max_step(const Vec& x, const Vec& dx) const {
    double alpha = std::numeric_limits<double>::infinity();
    for_blocks([&](const Block& blk) {
      const auto xs = x.segment(blk.offset, blk.rows);
      const auto ds = dx.segment(blk.offset, blk.rows);
      switch (blk.cone.kind) {
        case ConeKind::nonnegative:
          for (int i = 0; i < blk.rows; ++i) {
            if (ds(i) < 0.0) alpha = std::min(alpha, -xs(i) / ds(i));
          }
          break;
        case ConeKind::second_order: alpha = std::min(alpha, soc_max_step(xs, ds)); break;
        case ConeKind::psd: {
          const int d = blk.cone.dim;
          Eigen::LLT<Mat> llt(smat(xs, d));
          if (llt.info() != Eigen::Success) {
            alpha = 0.0;
            break;
          }
          Mat M = smat(ds, d);
          llt.matrixL().solveInPlace(M);
          Mat Mt = M.transpose();
          llt.matrixL().solveInPlace(Mt);
          Eigen::SelfAdjointEigenSolver<Mat> eig(Mt, Eigen::EigenvaluesOnly);
          const double lmin = eig.eigenvalues()(0);
          if (lmin < 0.0) alpha = std::min(alpha, -1.0 / lmin);
          break;
        }
      }
    });
    return alpha;
  }

  // Smallest "eigenvalue" of x relative to the identity of each block.
  double min_eigenvalue(const Vec& x) const {
    double lo = std::numeric_limits<double>::infinity();
    for_blocks([&](const Block& blk) {
      const auto xs = x.segment(blk.offset, blk.rows);
      switch (blk.cone.kind) {
        case ConeKind::nonnegative: lo = std::min(lo, xs.minCoeff()); break;
        case ConeKind::second_order:
          lo = std::min(lo, xs(0) - xs.tail(blk.rows - 1).norm());
          break;
        case ConeKind::psd: {
          Eigen::SelfAdjointEigenSolver<Mat> eig(smat(xs, blk.cone.dim), Eigen::EigenvaluesOnly);
          lo = std::min(lo, eig.eigenvalues()(0));
          break;
        }
      }
    });
    return lo;
  }

  // --- scaling -------------------------------------------------------------
  bool compute_scaling(const Vec& s, const Vec& z) {
    lambda_.resize(k_);
    for (auto& blk : blocks_) {
      const auto ss = s.segment(blk.offset, blk.rows);
      const auto zs = z.segment(blk.offset, blk.rows);
      auto ls = lambda_.segment(blk.offset, blk.rows);
      switch (blk.cone.kind) {
        case ConeKind::nonnegative:
          if ((ss.array() <= 0.0).any() || (zs.array() <= 0.0).any()) return false;
          blk.w = (ss.array() / zs.array()).sqrt();
          ls = (ss.array() * zs.array()).sqrt();
          break;
        case ConeKind::second_order: {
          const int r = blk.rows;
          const double js = soc_residual(ss), jz = soc_residual(zs);
          if (!(js > 0.0) || !(jz > 0.0) || ss(0) <= 0.0 || zs(0) <= 0.0) return false;
          const Vec sb = ss / std::sqrt(js);
          const Vec zb = zs / std::sqrt(jz);
          const double gamma = std::sqrt(0.5 * (1.0 + sb.dot(zb)));
          Vec wb = sb;
          wb(0) += zb(0);
          wb.tail(r - 1) -= zb.tail(r - 1);
          wb /= 2.0 * gamma;
          // W = eta (2 v v' - J) with v the square root of wb in the cone.
          wb(0) += 1.0;
          wb /= std::sqrt(2.0 * wb(0));
          const double eta = std::pow(js / jz, 0.25);
          Mat J = -Mat::Identity(r, r);
          J(0, 0) = 1.0;
          blk.W = eta * (2.0 * wb * wb.transpose() - J);
          const Vec Jw = J * wb;
          blk.Winv = (2.0 * Jw * Jw.transpose() - J) / eta;
          ls = blk.W * zs;
          break;
        }
        case ConeKind::psd: {
          const int d = blk.cone.dim;
          Eigen::LLT<Mat> lls(smat(ss, d)), llz(smat(zs, d));
          if (lls.info() != Eigen::Success || llz.info() != Eigen::Success) return false;
          const Mat Ls = lls.matrixL(), Lz = llz.matrixL();
          Eigen::BDCSVD<Mat> svd(Lz.transpose() * Ls, Eigen::ComputeFullU | Eigen::ComputeFullV);
          const Vec sv = svd.singularValues();
          if (!(sv.minCoeff() > 0.0)) return false;
          const Vec isq = sv.cwiseSqrt().cwiseInverse();
          blk.R = Ls * svd.matrixV() * isq.asDiagonal();
          blk.Rinv = isq.asDiagonal() * svd.matrixU().transpose() * Lz.transpose();
          blk.P = blk.Rinv.transpose() * blk.Rinv;
          ls.setZero();
          for (int i = 0; i < d; ++i) ls(packed_index(d, i, i)) = sv(i);
          break;
        }
      }
    }
    return true;
  }

  void set_identity_scaling() {
    for (auto& blk : blocks_) {
      switch (blk.cone.kind) {
        case ConeKind::nonnegative: blk.w = Vec::Ones(blk.rows); break;
        case ConeKind::second_order:
          blk.W = Mat::Identity(blk.rows, blk.rows);
          blk.Winv = blk.W;
          break;
        case ConeKind::psd:
          blk.R = Mat::Identity(blk.cone.dim, blk.cone.dim);
          blk.Rinv = blk.R;
          blk.P = blk.R;
          break;
      }
    }
  }

  enum class Op { W, WinvT, WT, V, WtW };

  Vec apply(Op op, const Vec& v) const {
    Vec out(k_);
    for_blocks([&](const Block& blk) {
      const auto vs = v.segment(blk.offset, blk.rows);
      auto os = out.segment(blk.offset, blk.rows);
      switch (blk.cone.kind) {
        case ConeKind::nonnegative:
          switch (op) {
            case Op::W:
            case Op::WT: os = blk.w.cwiseProduct(vs); break;
            case Op::WinvT: os = vs.cwiseQuotient(blk.w); break;
            case Op::V: os = vs.cwiseQuotient(blk.w.cwiseAbs2()); break;
            case Op::WtW: os = vs.cwiseProduct(blk.w.cwiseAbs2()); break;
          }
          break;
        case ConeKind::second_order:
          switch (op) {
            case Op::W:
            case Op::WT: os = blk.W * vs; break;
            case Op::WinvT: os = blk.Winv * vs; break;
            case Op::V: os = blk.Winv * (blk.Winv * vs); break;
            case Op::WtW: os = blk.W * (blk.W * vs); break;
          }
          break;
        case ConeKind::psd: {
          const Mat M = smat(vs, blk.cone.dim);
          switch (op) {
            case Op::W: svec(blk.R.transpose() * M * blk.R, os); break;
            case Op::WT: svec(blk.R * M * blk.R.transpose(), os); break;
            case Op::WinvT: svec(blk.Rinv * M * blk.Rinv.transpose(), os); break;
            case Op::V: svec(blk.P * M * blk.P, os); break;
            case Op::WtW: svec(blk.R * (blk.R.transpose() * M * blk.R) * blk.R.transpose(), os); break;
          }
          break;
        }
      }
    });
    return out;
  }

  // --- KKT system ------------------------------------------------------------
  void extract_blocks() {
    // Orthant rows: row-wise sparse lists. Other blocks: dense restrictions.
    std::vector<std::vector<std::pair<int, double>>> rows(k_);
    for (int col = 0; col < p_.G.outerSize(); ++col) {
      for (SparseMatrix::InnerIterator it(p_.G, col); it; ++it) {
        rows[it.row()].emplace_back(col, it.value());
      }
    }
    for (auto& blk : blocks_) {
      if (blk.cone.kind == ConeKind::nonnegative) {
        for (int r = 0; r < blk.rows; ++r) orthant_rows_.push_back({blk.offset + r, rows[blk.offset + r]});
        continue;
      }
      std::vector<int> cols;
      for (int r = 0; r < blk.rows; ++r) {
        for (const auto& [c, v] : rows[blk.offset + r]) cols.push_back(c);
      }
      std::sort(cols.begin(), cols.end());
      cols.erase(std::unique(cols.begin(), cols.end()), cols.end());
      blk.cols = cols;
      blk.G = Mat::Zero(blk.rows, static_cast<int>(cols.size()));
      for (int r = 0; r < blk.rows; ++r) {
        for (const auto& [c, v] : rows[blk.offset + r]) {
          const auto pos = std::lower_bound(cols.begin(), cols.end(), c) - cols.begin();
          blk.G(r, pos) += v;
        }
      }
      if (blk.cone.kind == ConeKind::psd && blk.cone.dim >= 16) {
        Mat coeffs(blk.cone.dim, blk.G.cols());
        bool all = true;
        for (Eigen::Index j = 0; all && j < blk.G.cols(); ++j) {
          all = toeplitz_coefficients(blk.G.col(j), blk.cone.dim, coeffs.col(j));
        }
        if (all) blk.toeplitz = std::move(coeffs);
      }
    }
  }

  // G_b' V G_b for one cone block. Toeplitz PSD blocks go through the
  // autocorrelation of P; other PSD blocks use M_j = smat(G col j) and
  // Z_j = P M_j, whose entries tr(Z_j Z_k) come from one product.
  static Mat block_hessian(const Block& blk) {
    if (blk.cone.kind == ConeKind::second_order) {
      return blk.G.transpose() * (blk.Winv * (blk.Winv * blk.G));
    }
    if (blk.toeplitz.size() > 0) {
      return blk.toeplitz.transpose() * toeplitz_hessian(blk.P) * blk.toeplitz;
    }
    const int d = blk.cone.dim;
    const Eigen::Index cols = blk.G.cols();
    constexpr double kMaxBytes = 512.0 * 1024 * 1024;
    if (2.0 * d * d * cols * sizeof(double) > kMaxBytes) {
      Mat VG(blk.rows, cols);
      for (Eigen::Index j = 0; j < cols; ++j) {
        const Mat M = smat(blk.G.col(j), d);
        svec(blk.P * M * blk.P, VG.col(j));
      }
      return blk.G.transpose() * VG;
    }
    Mat Z(static_cast<Eigen::Index>(d) * d, cols);
    Mat Zt(static_cast<Eigen::Index>(d) * d, cols);
    for (Eigen::Index j = 0; j < cols; ++j) {
      const SparseMatrix M = smat(blk.G.col(j), d).sparseView();
      Eigen::Map<Mat> zj(Z.col(j).data(), d, d);
      zj.noalias() = blk.P * M;
      Eigen::Map<Mat>(Zt.col(j).data(), d, d) = zj.transpose();
    }
    return Z.transpose() * Zt;
  }

  // Symmetric Ruiz scaling of the lower-stored KKT matrix into kkt_scale_.
  void equilibrate(const SparseMatrix& K) {
    for (int pass = 0; pass < 20; ++pass) {
      Vec mx = Vec::Zero(n_ + m_);
      for (int col = 0; col < K.outerSize(); ++col) {
        for (SparseMatrix::InnerIterator it(K, col); it; ++it) {
          const double v = std::abs(it.value()) * kkt_scale_(it.row()) * kkt_scale_(col);
          mx(it.row()) = std::max(mx(it.row()), v);
          mx(col) = std::max(mx(col), v);
        }
      }
      double spread = 0.0;
      for (int i = 0; i < n_ + m_; ++i) {
        if (mx(i) <= 0.0) continue;
        kkt_scale_(i) /= std::sqrt(mx(i));
        spread = std::max(spread, std::abs(1.0 - mx(i)));
      }
      if (spread < 1e-2) break;
    }
  }

  bool factor_kkt(double reg_boost = 1.0) {
    std::vector<Triplet> trip;
    auto add_h = [&](int i, int j, double v) {
      if (i < j) std::swap(i, j);
      trip.emplace_back(i, j, v);
    };
    for (const auto& row : orthant_rows_) {
      const auto& blk = block_of(row.index);
      const double wi = blk.w(row.index - blk.offset);
      const double d = 1.0 / (wi * wi);
      for (std::size_t a = 0; a < row.entries.size(); ++a) {
        for (std::size_t b = 0; b <= a; ++b) {
          add_h(row.entries[a].first, row.entries[b].first,
                d * row.entries[a].second * row.entries[b].second);
        }
      }
    }
    for (const auto& blk : blocks_) {
      if (blk.cone.kind == ConeKind::nonnegative || blk.cols.empty()) continue;
      const Mat Hb = block_hessian(blk);
      for (int a = 0; a < Hb.rows(); ++a) {
        for (int b = 0; b <= a; ++b) add_h(blk.cols[a], blk.cols[b], 0.5 * (Hb(a, b) + Hb(b, a)));
      }
    }
    for (int col = 0; col < p_.A.outerSize(); ++col) {
      for (SparseMatrix::InnerIterator it(p_.A, col); it; ++it) {
        trip.emplace_back(n_ + it.row(), col, it.value());
      }
    }
    for (int i = 0; i < n_ + m_; ++i) trip.emplace_back(i, i, 0.0);
    SparseMatrix K(n_ + m_, n_ + m_);
    K.setFromTriplets(trip.begin(), trip.end());
    Vec hdiag = K.diagonal().head(n_).cwiseAbs();
    const double hmax = n_ > 0 ? hdiag.maxCoeff() : 0.0;

    kkt_scale_ = Vec::Ones(n_ + m_);
    Vec reg(n_ + m_);
    switch (reg_) {
      case Regularization::global:
        reg.head(n_).setConstant(1e-13 * std::max(1.0, hmax));
        reg.tail(m_).setConstant(-1e-8);
        break;
      case Regularization::per_variable:
        reg.head(n_) = 1e-13 * hdiag.cwiseMax(1.0);
        reg.tail(m_).setConstant(-1e-8);
        break;
      case Regularization::equilibrated:
        equilibrate(K);
        reg.head(n_).setConstant(1e-8);
        reg.tail(m_).setConstant(-1e-8);
        break;
    }
    for (int col = 0; col < K.outerSize(); ++col) {
      for (SparseMatrix::InnerIterator it(K, col); it; ++it) {
        it.valueRef() *= kkt_scale_(it.row()) * kkt_scale_(col);
        if (it.row() == col) it.valueRef() += reg_boost * reg(col);
      }
    }
    if (!pattern_analyzed_) {
      ldlt_.analyzePattern(K);
      pattern_analyzed_ = true;
    }
    ldlt_.factorize(K);
    if (ldlt_.info() != Eigen::Success && reg_boost < 1e4) {
      log::debug("KKT factorization failed; retrying with larger regularization");
      return factor_kkt(reg_boost * 100.0);
    }
    return ldlt_.info() == Eigen::Success;
  }

  // Solves [0 A' G'; A 0 0; G 0 -W'W] [x; y; z] = [bx; by; bz]. Refinement
  // works on the residual of the full system, not the reduced one.
  bool solve_kkt(const Vec& bx, const Vec& by, const Vec& bz, Vec& x, Vec& y, Vec& z) const {
    auto reduced_solve = [&](const Vec& rx, const Vec& ry, const Vec& rz, Vec& ox, Vec& oy,
                             Vec& oz) {
      Vec rhs(n_ + m_);
      rhs.head(n_) = rx + Gt_ * apply(Op::V, rz);
      rhs.tail(m_) = ry;
      const Vec sol = kkt_scale_.cwiseProduct(ldlt_.solve(kkt_scale_.cwiseProduct(rhs)));
      ox = sol.head(n_);
      oy = sol.tail(m_);
      oz = apply(Op::V, p_.G * ox - rz);
    };
    reduced_solve(bx, by, bz, x, y, z);
    if (!x.allFinite() || !y.allFinite() || !z.allFinite()) return false;
    const double scale = std::max({1.0, bx.lpNorm<Eigen::Infinity>(), by.lpNorm<Eigen::Infinity>(),
                                   bz.lpNorm<Eigen::Infinity>()});
    double best = std::numeric_limits<double>::infinity();
    Vec bxs = x, bys = y, bzs = z;
    for (int iter = 0; iter < 20; ++iter) {
      const Vec e1 = bx - At_ * y - Gt_ * z;
      const Vec e2 = by - p_.A * x;
      const Vec e3 = bz - p_.G * x + apply(Op::WtW, z);
      const double err = std::max({e1.lpNorm<Eigen::Infinity>(), e2.lpNorm<Eigen::Infinity>(),
                                   e3.lpNorm<Eigen::Infinity>()});
      if (err < best) {
        best = err;
        bxs = x;
        bys = y;
        bzs = z;
      } else {
        break;
      }
      if (err <= 1e-15 * scale) break;
      Vec cx, cy, cz;
      reduced_solve(e1, e2, e3, cx, cy, cz);
      if (!cx.allFinite() || !cy.allFinite() || !cz.allFinite()) break;
      x += cx;
      y += cy;
      z += cz;
    }
    x = bxs;
    y = bys;
    z = bzs;
    return true;
  }

  const Block& block_of(int row) const {
    auto it = std::upper_bound(blocks_.begin(), blocks_.end(), row,
                               [](int r, const Block& blk) { return r < blk.offset; });
    return *std::prev(it);
  }

  struct OrthantRow {
    int index;
    std::vector<std::pair<int, double>> entries;
  };

  const ConicProblem& p_;
  SolverOptions opt_;
  Regularization reg_;
  int n_ = 0, m_ = 0, k_ = 0, degree_ = 0;
  std::vector<Block> blocks_;
  std::vector<OrthantRow> orthant_rows_;
  SparseMatrix Gt_, At_;
  Vec lambda_;
  Eigen::SimplicialLDLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt_;
  bool pattern_analyzed_ = false;
  Vec kkt_scale_;
};

ConicSolution Solver::run() {
  ConicSolution sol;
  const double tol = opt_.tol;
  // The objective is normalized so that large weights do not swamp the
  // residuals; costs, gap and dual variables are reported unscaled.
  const double cscale = std::max(1.0, p_.c.lpNorm<Eigen::Infinity>());
  const Vec c = p_.c / cscale;
  const Vec& b = p_.b;
  const Vec& h = p_.h;
  const double resx0 = std::max(1.0, c.norm());
  const double resy0 = std::max(1.0, b.norm());
  const double resz0 = std::max(1.0, h.norm());

  auto fail = [&](const std::string& why) {
    sol.status = Status::numerical_failure;
    sol.message = why;
    log::info("conic solver: ", why);
    return sol;
  };

  // Initial point from the identity-scaled KKT system.
  set_identity_scaling();
  if (!factor_kkt()) return fail("initial KKT factorization failed");
  Vec x, y, z, s, xt, yt, zt;
  if (!solve_kkt(Vec::Zero(n_), b, h, x, yt, zt)) return fail("initial primal solve failed");
  s = -zt;
  if (!solve_kkt(-c, Vec::Zero(m_), Vec::Zero(k_), xt, y, z)) return fail("initial dual solve failed");
  const Vec e = identity();
  {
    const double ap = -min_eigenvalue(s);
    if (k_ > 0 && ap >= -1e-8 * std::max(1.0, s.norm())) s += (1.0 + std::max(ap, 0.0)) * e;
    const double ad = -min_eigenvalue(z);
    if (k_ > 0 && ad >= -1e-8 * std::max(1.0, z.norm())) z += (1.0 + std::max(ad, 0.0)) * e;
  }
  double tau = 1.0, kappa = 1.0;

  int stalls = 0;
  for (int iter = 0; iter <= opt_.max_iterations; ++iter) {
    const Vec rx = At_ * y + Gt_ * z + c * tau;
    const Vec ry = p_.A * x - b * tau;
    const Vec rz = p_.G * x + s - h * tau;
    const double cx = c.dot(x), by = b.dot(y), hz = h.dot(z);
    const double rt = kappa + cx + by + hz;

    const double pcost = cscale * cx / tau;
    const double dcost = -cscale * (by + hz) / tau;
    const double gap = cscale * s.dot(z) / (tau * tau);
    double relgap = std::numeric_limits<double>::infinity();
    if (pcost < 0.0) relgap = gap / -pcost;
    else if (dcost > 0.0) relgap = gap / dcost;
    const double pres = std::max(ry.norm() / resy0, rz.norm() / resz0) / tau;
    const double dres = rx.norm() / resx0 / tau;

    sol.iterations = iter;
    sol.primal_residual = pres;
    sol.dual_residual = dres;
    sol.gap = std::min(gap, relgap);
    log::debug("iter ", iter, " pcost ", pcost, " dcost ", dcost, " gap ", gap, " pres ", pres,
               " dres ", dres, " tau ", tau, " kappa ", kappa);

    if (pres <= tol && dres <= tol && (gap <= tol || relgap <= tol)) {
      sol.status = Status::optimal;
      sol.x = x / tau;
      sol.y = cscale * y / tau;
      sol.z = cscale * z / tau;
      sol.s = s / tau;
      sol.primal_objective = pcost + p_.offset;
      sol.dual_objective = dcost + p_.offset;
      return sol;
    }
    if (by + hz < 0.0) {
      const double pinf = (At_ * y + Gt_ * z).norm() / resx0 / -(by + hz);
      if (pinf <= tol) {
        sol.status = Status::infeasible;
        sol.y = y / -(by + hz);
        sol.z = z / -(by + hz);
        sol.message = "primal infeasibility certificate found";
        return sol;
      }
    }
    if (cx < 0.0) {
      const double dinf = std::max((p_.A * x).norm() / resy0, (p_.G * x + s).norm() / resz0) / -cx;
      if (dinf <= tol) {
        sol.status = Status::unbounded;
        sol.x = x / -cx;
        sol.s = s / -cx;
        sol.message = "dual infeasibility certificate found";
        return sol;
      }
    }
    if (iter == opt_.max_iterations) break;

    if (!compute_scaling(s, z)) return fail("iterate left the cone interior");
    if (!factor_kkt()) return fail("KKT factorization failed");

    Vec x2, y2, z2;
    if (!solve_kkt(-c, b, h, x2, y2, z2)) return fail("KKT solve failed");
    const double denom = c.dot(x2) + b.dot(y2) + h.dot(z2) - kappa / tau;

    const double mu = (s.dot(z) + kappa * tau) / (degree_ + 1);
    const Vec ll = jordan(lambda_, lambda_);

    struct Direction {
      Vec dx, dy, dz, ds, ds_scaled, dz_scaled;
      double dtau = 0.0, dkappa = 0.0;
    };
    auto direction = [&](double eta, const Vec& ds, double dk, Direction& out) {
      const Vec lds = jordan_divide(ds);
      Vec x1, y1, z1;
      if (!solve_kkt(-eta * rx, -eta * ry, -eta * rz - apply(Op::WT, lds), x1, y1, z1)) return false;
      out.dtau = (-eta * rt - dk / tau - c.dot(x1) - b.dot(y1) - h.dot(z1)) / denom;
      out.dx = x1 + out.dtau * x2;
      out.dy = y1 + out.dtau * y2;
      out.dz = z1 + out.dtau * z2;
      out.dkappa = (dk - kappa * out.dtau) / tau;
      // The slack step comes from the linearized cone equation so the primal
      // residual decreases exactly; its scaled form gives the step length.
      out.ds = -eta * rz + out.dtau * h - p_.G * out.dx;
      out.dz_scaled = apply(Op::W, out.dz);
      out.ds_scaled = apply(Op::WinvT, out.ds);
      return out.dx.allFinite() && std::isfinite(out.dtau);
    };
    auto step_to_boundary = [&](const Direction& d) {
      double a = std::min(max_step(s, d.ds), max_step(z, d.dz));
      if (d.dtau < 0.0) a = std::min(a, -tau / d.dtau);
      if (d.dkappa < 0.0) a = std::min(a, -kappa / d.dkappa);
      return a;
    };

    Direction aff;
    if (!direction(1.0, -ll, -kappa * tau, aff)) return fail("affine direction failed");
    const double alpha_aff = std::min(1.0, step_to_boundary(aff));
    const double sigma = std::clamp(std::pow(1.0 - alpha_aff, 3.0), 0.0, 1.0);

    const Vec ds = -ll - jordan(aff.ds_scaled, aff.dz_scaled) + sigma * mu * e;
    const double dk = -kappa * tau - aff.dkappa * aff.dtau + sigma * mu;
    Direction cmb;
    if (!direction(1.0 - sigma, ds, dk, cmb)) return fail("combined direction failed");
    const double alpha = std::min(1.0, 0.99 * step_to_boundary(cmb));
    if (!(alpha > 1e-12)) {
      if (++stalls >= 3) break;
    } else {
      stalls = 0;
    }

    x += alpha * cmb.dx;
    y += alpha * cmb.dy;
    z += alpha * cmb.dz;
    s += alpha * cmb.ds;
    tau += alpha * cmb.dtau;
    kappa += alpha * cmb.dkappa;
  }

  sol.x = x / tau;
  sol.y = cscale * y / tau;
  sol.z = cscale * z / tau;
  sol.s = s / tau;
  sol.primal_objective = cscale * c.dot(x) / tau + p_.offset;
  sol.dual_objective = -cscale * (b.dot(y) + h.dot(z)) / tau + p_.offset;
  return fail("tolerance " + std::to_string(tol) + " not reached (pres " +
              std::to_string(sol.primal_residual) + ", dres " + std::to_string(sol.dual_residual) +
              ", gap " + std::to_string(sol.gap) + ")");
}

// Drops linearly dependent equality rows. Returns the reduced problem, or a
// Farkas vector y (A'y = 0, b'y < 0) when the equalities are inconsistent.
struct Presolved {
  ConicProblem problem;
  int dropped = 0;
  std::vector<int> kept_rows;
  std::optional<Vec> farkas;
};

Presolved drop_redundant_rows(const ConicProblem& p) {
  Presolved out{p, 0, {}, std::nullopt};
  const int rows = p.num_equalities();
  if (rows == 0) return out;
  const Mat Ad(p.A);
  Eigen::ColPivHouseholderQR<Mat> qr(Ad.transpose());
  qr.setThreshold(1e-10);
  const int rank = static_cast<int>(qr.rank());
  if (rank == rows) return out;

  Eigen::CompleteOrthogonalDecomposition<Mat> cod(Ad);
  cod.setThreshold(1e-10);
  const Vec xls = cod.solve(p.b);
  const Vec residual = p.b - Ad * xls;
  if (residual.norm() > 1e-9 * std::max(1.0, p.b.norm())) {
    out.farkas = -residual / residual.squaredNorm();
    return out;
  }
  std::vector<int> keep(qr.colsPermutation().indices().data(),
                        qr.colsPermutation().indices().data() + rank);
  std::sort(keep.begin(), keep.end());
  std::vector<Triplet> trip;
  Vec b(rank);
  for (int r = 0; r < rank; ++r) {
    b(r) = p.b(keep[r]);
    for (int col = 0; col < p.num_variables(); ++col) {
      if (Ad(keep[r], col) != 0.0) trip.emplace_back(r, col, Ad(keep[r], col));
    }
  }
  out.problem.A.resize(rank, p.num_variables());
  out.problem.A.setFromTriplets(trip.begin(), trip.end());
  out.problem.b = b;
  out.dropped = rows - rank;
  out.kept_rows = keep;
  log::info("conic presolve: dropped ", out.dropped, " dependent equality rows");
  return out;
}

}  // namespace

ConicSolution solve(const ConicProblem& problem, const SolverOptions& options) {
  problem.validate();
  if (!(options.tol >= 1e-12 && options.tol <= 1e-2)) {
    throw std::invalid_argument("solver tolerance must lie in [1e-12, 1e-2]");
  }
  Presolved pre = drop_redundant_rows(problem);
  if (pre.farkas) {
    ConicSolution sol;
    sol.status = Status::infeasible;
    sol.y = *pre.farkas;
    sol.z = Eigen::VectorXd::Zero(problem.num_cone_rows());
    sol.message = "inconsistent equality constraints";
    return sol;
  }
  ConicSolution sol;
  for (auto reg : {Regularization::global, Regularization::per_variable,
                   Regularization::equilibrated}) {
    try {
      Solver solver(pre.problem, options, reg);
      sol = solver.run();
    } catch (const std::exception& ex) {
      sol = ConicSolution{};
      sol.status = Status::numerical_failure;
      sol.message = ex.what();
    }
    if (sol.status != Status::numerical_failure) break;
    log::info("conic solver: retrying with another KKT regularization");
  }
  sol.dropped_equalities = pre.dropped;
  if (pre.dropped > 0 && sol.y.size() == pre.problem.num_equalities()) {
    // Multipliers in the original row numbering, zero on dropped rows.
    Eigen::VectorXd y = Eigen::VectorXd::Zero(problem.num_equalities());
    for (std::size_t r = 0; r < pre.kept_rows.size(); ++r) y(pre.kept_rows[r]) = sol.y(r);
    sol.y = y;
  }
  return sol;
}

ConicSolution lp_solve(const ConicProblem& problem, const SolverOptions& options) {
  if (!problem.is_linear()) {
    throw std::invalid_argument("lp_solve: problem has second-order or PSD cones");
  }
  return solve(problem, options);
}

}  // namespace optrec::conic
