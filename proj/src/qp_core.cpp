#include "mgcoord/qp_core.hpp"

#include <Eigen/LU>
#include <Eigen/QR>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>
#include <Eigen/SparseQR>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace mgcoord {
namespace {

// Systems up to this many unknowns are factorized densely.
constexpr Index kDenseKKTLimit = 600;

std::string shape(Index r, Index c) {
  return std::to_string(r) + "x" + std::to_string(c);
}

void check_saddle_shapes(Index hr, Index hc, Index jr, Index jc, Index g, Index h) {
  if (hr != hc) throw Error(ErrorKind::DimensionMismatch, "H must be square, got " + shape(hr, hc));
  if (jc != hc && jr > 0)
    throw Error(ErrorKind::DimensionMismatch,
                "J has " + std::to_string(jc) + " columns, H has " + std::to_string(hc));
  if (g != hr) throw Error(ErrorKind::DimensionMismatch, "g length does not match H");
  if (h != jr) throw Error(ErrorKind::DimensionMismatch, "h length does not match J rows");
}

SparseMatrix vstack(const SparseMatrix& top, const SparseMatrix& bottom, Index cols) {
  SparseMatrix out(top.rows() + bottom.rows(), cols);
  std::vector<Triplet> trip;
  trip.reserve(static_cast<std::size_t>(top.nonZeros() + bottom.nonZeros()));
  for (Index k = 0; k < top.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(top, k); it; ++it) trip.emplace_back(it.row(), it.col(), it.value());
  for (Index k = 0; k < bottom.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(bottom, k); it; ++it)
      trip.emplace_back(top.rows() + it.row(), it.col(), it.value());
  out.setFromTriplets(trip.begin(), trip.end());
  return out;
}

KKTSolution pack(const Vector& sol, Index n) {
  KKTSolution out;
  out.primal = sol.head(n);
  out.dual = sol.tail(sol.size() - n);
  return out;
}

}  // namespace

SparseMatrix CoupledQP::constraint_matrix() const {
  return vstack(A, Pi, num_vars());
}

Vector CoupledQP::constraint_rhs() const {
  Vector rhs = Vector::Zero(num_constraints());
  if (A.rows() > 0 && B.cols() > 0) rhs.head(A.rows()) = -(B * d);
  return rhs;
}

void CoupledQP::check_dimensions() const {
  const Index n = Q.rows();
  if (Q.cols() != n) throw Error(ErrorKind::DimensionMismatch, "Q is " + shape(Q.rows(), Q.cols()));
  if (c.size() != n) throw Error(ErrorKind::DimensionMismatch, "c has length " + std::to_string(c.size()));
  if (A.rows() > 0 && A.cols() != n)
    throw Error(ErrorKind::DimensionMismatch, "A is " + shape(A.rows(), A.cols()));
  if (Pi.rows() > 0 && Pi.cols() != n)
    throw Error(ErrorKind::DimensionMismatch, "Pi is " + shape(Pi.rows(), Pi.cols()));
  if (B.rows() != A.rows() && B.size() > 0)
    throw Error(ErrorKind::DimensionMismatch, "B has " + std::to_string(B.rows()) + " rows, A has " +
                                                  std::to_string(A.rows()));
  if (B.cols() != d.size() && B.size() > 0)
    throw Error(ErrorKind::DimensionMismatch, "B has " + std::to_string(B.cols()) + " columns, d has " +
                                                  std::to_string(d.size()));
}

void CoupledQP::check_invariants() const {
  check_dimensions();
  SparseMatrix asym = SparseMatrix(Q.transpose()) - Q;
  if (asym.norm() > 1e-12 * (1.0 + Q.norm())) throw Error(ErrorKind::InvalidArgument, "Q is not symmetric");
  const SparseMatrix abar = constraint_matrix();
  const Index m = abar.rows();
  if (!spd_check(Q)) {
    // Semidefinite Q is accepted when it is definite on the null space of [A; Pi]:
    // for Q >= 0 that holds iff Q + s [A; Pi]'[A; Pi] is definite.
    const double qn = Q.norm();
    SparseMatrix shifted = Q;
    for (Index i = 0; i < Q.rows(); ++i) shifted.coeffRef(i, i) += 1e-10 * (1.0 + qn);
    if (m == 0 || !spd_check(shifted)) throw Error(ErrorKind::InvalidArgument, "Q is not positive definite");
    const double an = abar.norm();
    const SparseMatrix aug = Q + ((1.0 + qn) / (an * an)) * SparseMatrix(abar.transpose() * abar);
    if (!spd_check(aug))
      throw Error(ErrorKind::InvalidArgument, "Q is not positive definite on the null space of [A; Pi]");
  }
  if (m == 0) return;
  if (m > num_vars()) throw Error(ErrorKind::RankDeficient, "more constraints than variables");
  Index rank = 0;
  if (num_vars() <= 2000) {
    Eigen::ColPivHouseholderQR<Matrix> qr(Matrix(abar.transpose()));
    qr.setThreshold(kPivotThreshold);
    rank = qr.rank();
  } else {
    SparseMatrix at = abar.transpose();
    at.makeCompressed();
    Eigen::SparseQR<SparseMatrix, Eigen::COLAMDOrdering<int>> qr;
    qr.setPivotThreshold(kPivotThreshold);
    qr.compute(at);
    rank = qr.rank();
  }
  if (rank < m)
    throw Error(ErrorKind::RankDeficient,
                "[A; Pi] has rank " + std::to_string(rank) + " < " + std::to_string(m) + " rows");
}

double CoupledQP::objective(const Vector& z) const {
  return 0.5 * z.dot(Q * z) - c.dot(z);
}

Vector UnconstrainedQP::minimizer() const {
  Eigen::LLT<Matrix> llt(Q);
  if (llt.info() != Eigen::Success) throw Error(ErrorKind::SingularSystem, "Q is not positive definite");
  return llt.solve(c);
}

double UnconstrainedQP::objective(const Vector& z) const {
  return 0.5 * z.dot(Q * z) - c.dot(z);
}

double saddle_residual(const Matrix& H, const Matrix& J, const Vector& g, const Vector& h,
                       const Vector& x, const Vector& y) {
  if (J.rows() == 0) return (H * x - g).lpNorm<Eigen::Infinity>();
  const double dual_res = (H * x + J.transpose() * y - g).lpNorm<Eigen::Infinity>();
  const double prim_res = (J * x - h).lpNorm<Eigen::Infinity>();
  return std::max(dual_res, prim_res);
}

double saddle_residual(const SparseMatrix& H, const SparseMatrix& J, const Vector& g,
                       const Vector& h, const Vector& x, const Vector& y) {
  if (J.rows() == 0) return (H * x - g).lpNorm<Eigen::Infinity>();
  const double dual_res = (H * x + J.transpose() * y - g).lpNorm<Eigen::Infinity>();
  const double prim_res = (J * x - h).lpNorm<Eigen::Infinity>();
  return std::max(dual_res, prim_res);
}

KKTSolution solve_saddle(const Matrix& H, const Matrix& J, const Vector& g, const Vector& h) {
  check_saddle_shapes(H.rows(), H.cols(), J.rows(), J.cols(), g.size(), h.size());
  const Index n = H.rows();
  const Index m = J.rows();

  Matrix kkt = Matrix::Zero(n + m, n + m);
  kkt.topLeftCorner(n, n) = H;
  if (m > 0) {
    kkt.bottomLeftCorner(m, n) = J;
    kkt.topRightCorner(n, m) = J.transpose();
  }
  Vector rhs(n + m);
  rhs << g, h;

  Eigen::PartialPivLU<Matrix> lu(kkt);
  const Vector pivots = lu.matrixLU().diagonal().cwiseAbs();
  if (n + m > 0) {
    const double largest = pivots.maxCoeff();
    if (!std::isfinite(largest) || largest == 0.0 || pivots.minCoeff() <= kPivotThreshold * largest)
      throw Error(ErrorKind::SingularSystem, "KKT matrix is rank deficient");
  }
  Vector sol = lu.solve(rhs);
  sol += lu.solve(rhs - kkt * sol);

  KKTSolution out = pack(sol, n);
  out.residual_norm = saddle_residual(H, J, g, h, out.primal, out.dual);
  return out;
}

KKTSolution solve_saddle(const SparseMatrix& H, const SparseMatrix& J, const Vector& g,
                         const Vector& h) {
  check_saddle_shapes(H.rows(), H.cols(), J.rows(), J.cols(), g.size(), h.size());
  const Index n = H.rows();
  const Index m = J.rows();
  if (n + m <= kDenseKKTLimit) {
    const Matrix jd = m > 0 ? Matrix(J) : Matrix(0, n);
    return solve_saddle(Matrix(H), jd, g, h);
  }

  std::vector<Triplet> trip;
  trip.reserve(static_cast<std::size_t>(H.nonZeros() + 2 * J.nonZeros()));
  for (Index k = 0; k < H.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(H, k); it; ++it) trip.emplace_back(it.row(), it.col(), it.value());
  for (Index k = 0; k < J.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(J, k); it; ++it) {
      trip.emplace_back(n + it.row(), it.col(), it.value());
      trip.emplace_back(it.col(), n + it.row(), it.value());
    }
  SparseMatrix kkt(n + m, n + m);
  kkt.setFromTriplets(trip.begin(), trip.end());
  kkt.makeCompressed();

  Vector rhs(n + m);
  rhs << g, h;

  Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu;
  lu.analyzePattern(kkt);
  lu.factorize(kkt);
  if (lu.info() != Eigen::Success) throw Error(ErrorKind::SingularSystem, "sparse KKT factorization failed");
  Vector sol = lu.solve(rhs);
  sol += lu.solve(rhs - kkt * sol);
  const double scale = 1.0 + rhs.lpNorm<Eigen::Infinity>();
  const double res = (kkt * sol - rhs).lpNorm<Eigen::Infinity>();
  if (!std::isfinite(res) || res > 1e-6 * scale)
    throw Error(ErrorKind::SingularSystem, "sparse KKT solve is inaccurate (residual " + std::to_string(res) + ")");

  KKTSolution out = pack(sol, n);
  out.residual_norm = saddle_residual(H, J, g, h, out.primal, out.dual);
  return out;
}

KKTSolution solve_centralized(const CoupledQP& p) {
  p.check_dimensions();
  return solve_saddle(p.Q, p.constraint_matrix(), p.c, p.constraint_rhs());
}

Reduction reduce_to_unconstrained(const CoupledQP& p) {
  p.check_dimensions();
  const Index n = p.num_vars();
  const Index m = p.num_constraints();
  const Matrix q = Matrix(p.Q);

  Reduction out;
  if (m == 0) {
    out.qp = UnconstrainedQP{q, p.c};
    out.map = AffineMap{Matrix::Identity(n, n), Vector::Zero(n)};
    return out;
  }
  if (m >= n) throw Error(ErrorKind::RankDeficient, "no degrees of freedom left after elimination");

  const Matrix abar = Matrix(p.constraint_matrix());
  const Vector rhs = p.constraint_rhs();

  // Column pivoting picks a well-conditioned set of basic variables.
  Eigen::ColPivHouseholderQR<Matrix> qr(abar);
  qr.setThreshold(kPivotThreshold);
  if (qr.rank() < m)
    throw Error(ErrorKind::RankDeficient,
                "[A; Pi] has rank " + std::to_string(qr.rank()) + " < " + std::to_string(m));

  const auto& perm = qr.colsPermutation().indices();
  std::vector<Index> basic(perm.data(), perm.data() + m);
  std::vector<Index> free(perm.data() + m, perm.data() + n);
  std::sort(free.begin(), free.end());

  Matrix basic_cols(m, m);
  for (Index j = 0; j < m; ++j) basic_cols.col(j) = abar.col(basic[static_cast<std::size_t>(j)]);
  Matrix free_cols(m, n - m);
  for (Index j = 0; j < n - m; ++j) free_cols.col(j) = abar.col(free[static_cast<std::size_t>(j)]);

  Eigen::PartialPivLU<Matrix> lu(basic_cols);
  const Matrix dependent = -lu.solve(free_cols);
  const Vector basic_offset = lu.solve(rhs);

  Matrix basis = Matrix::Zero(n, n - m);
  Vector offset = Vector::Zero(n);
  for (Index i = 0; i < m; ++i) {
    const Index row = basic[static_cast<std::size_t>(i)];
    basis.row(row) = dependent.row(i);
    offset(row) = basic_offset(i);
  }
  for (Index j = 0; j < n - m; ++j) basis(free[static_cast<std::size_t>(j)], j) = 1.0;

  Matrix reduced_q = basis.transpose() * q * basis;
  reduced_q = 0.5 * (reduced_q + reduced_q.transpose()).eval();
  out.qp = UnconstrainedQP{reduced_q, basis.transpose() * (p.c - q * offset)};
  out.map = AffineMap{std::move(basis), std::move(offset)};
  return out;
}

bool spd_check(const Matrix& M) {
  if (M.rows() != M.cols()) return false;
  if (M.rows() == 0) return true;
  Eigen::LLT<Matrix> llt(M);
  if (llt.info() != Eigen::Success) return false;
  const Vector diag = Matrix(llt.matrixL()).diagonal();
  return diag.minCoeff() > 0.0 && diag.allFinite();
}

bool spd_check(const SparseMatrix& M) {
  if (M.rows() != M.cols()) return false;
  if (M.rows() == 0) return true;
  if (M.rows() <= 2000) return spd_check(Matrix(M));
  Eigen::SimplicialLLT<SparseMatrix> llt(M);
  return llt.info() == Eigen::Success;
}

}  // namespace mgcoord
