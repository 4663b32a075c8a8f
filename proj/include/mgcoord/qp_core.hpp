#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "mgcoord/errors.hpp"

namespace mgcoord {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

/// Pivot magnitude (relative to the largest pivot) below which a factorization
/// is declared rank deficient.
inline constexpr double kPivotThreshold = 1e-12;

/**
 * Convex QP with equality constraints
 *
 *   min  1/2 z'Qz - c'z
 *   s.t. A z + B d = 0   (nu)
 *        Pi z      = 0   (lambda)
 *
 * All matrices are stored sparse; an absent constraint block has zero rows.
 * Q may be singular on variables pinned by the constraints (interface copies).
 */
struct CoupledQP {
  SparseMatrix Q;
  Vector c;
  SparseMatrix A;
  SparseMatrix B;
  SparseMatrix Pi;
  Vector d;

  Index num_vars() const { return Q.rows(); }
  Index num_local_rows() const { return A.rows(); }
  Index num_coupling_rows() const { return Pi.rows(); }
  Index num_constraints() const { return A.rows() + Pi.rows(); }

  /// Stacked constraint matrix [A; Pi].
  SparseMatrix constraint_matrix() const;
  /// Right-hand side of [A; Pi] z = [-B d; 0].
  Vector constraint_rhs() const;

  /// Throws DimensionMismatch when block shapes disagree.
  void check_dimensions() const;
  /// Full invariant check: dimensions, Q symmetric, Q positive definite (or
  /// semidefinite and definite on the null space of [A; Pi]), [A; Pi] full row rank.
  void check_invariants() const;

  double objective(const Vector& z) const;
};

struct UnconstrainedQP {
  Matrix Q;
  Vector c;

  Index size() const { return Q.rows(); }
  /// Unique minimizer Q^{-1} c; throws SingularSystem if Q is not positive definite.
  Vector minimizer() const;
  double objective(const Vector& z) const;
};

struct KKTSolution {
  Vector primal;
  Vector dual;
  double residual_norm = 0.0;
};

/// Solves [H J'; J 0][x; y] = [g; h] with a direct factorization.
KKTSolution solve_saddle(const Matrix& H, const Matrix& J, const Vector& g, const Vector& h);
KKTSolution solve_saddle(const SparseMatrix& H, const SparseMatrix& J, const Vector& g,
                         const Vector& h);

/// Infinity norm of the saddle-point residual of (x, y).
double saddle_residual(const SparseMatrix& H, const SparseMatrix& J, const Vector& g,
                       const Vector& h, const Vector& x, const Vector& y);
double saddle_residual(const Matrix& H, const Matrix& J, const Vector& g, const Vector& h,
                       const Vector& x, const Vector& y);

/// Primal-dual solution of the full problem; dual is stacked (nu, lambda).
KKTSolution solve_centralized(const CoupledQP& p);

/// z = basis * z_reduced + offset
struct AffineMap {
  Matrix basis;
  Vector offset;

  Vector apply(const Vector& reduced) const { return basis * reduced + offset; }
};

struct Reduction {
  UnconstrainedQP qp;
  AffineMap map;
};

/// Eliminates all equality constraints by a null-space (variable elimination) basis.
Reduction reduce_to_unconstrained(const CoupledQP& p);

/// True iff a Cholesky factorization with strictly positive pivots succeeds.
bool spd_check(const Matrix& M);
bool spd_check(const SparseMatrix& M);

}  // namespace mgcoord
