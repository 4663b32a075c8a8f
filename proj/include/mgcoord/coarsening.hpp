#pragma once

#include <functional>
#include <string>
#include <vector>

#include "mgcoord/cases.hpp"
#include "mgcoord/coordination.hpp"

namespace mgcoord {

/**
 * Fine/coarse transfer pair: z = T z_c and (nu, lambda) = U (nu_c, lambda_c).
 * U is block diagonal: its first `fine_local_rows` rows (rows of A) map only
 * to the first `coarse_local_rows` columns, the remaining rows (rows of Pi)
 * only to the remaining columns.
 */
struct GridTransfer {
  SparseMatrix T;
  SparseMatrix U;
  Index fine_local_rows = 0;
  Index coarse_local_rows = 0;
  int fine_level = 0;
  int coarse_level = 0;

  /// Checks shapes, the block structure of U and, for piecewise-constant
  /// transfers, one unit entry per row of T.
  void validate() const;
};

/// M x M_c block of ones replicating each coarse value over M / M_c fine points.
SparseMatrix piecewise_constant(int M, int M_c);

/// Transfer of the temporal case with K partitions from M to M_c points per partition.
GridTransfer build_transfer_temporal(int K, int M, int M_c);
/// Transfer of the spatial case with P x P partitions from M x M to M_c x M_c nodes per partition.
GridTransfer build_transfer_spatial(int P, int M, int M_c);
/// T = I, U = I for a problem.
GridTransfer identity_transfer(const CoupledQP& p);

/// Q_c = T'QT, c_c = T'c, [A_c; Pi_c] = U'[A; Pi]T, B_c = U_A'B (same d).
CoupledQP coarsen_problem(const CoupledQP& p, const GridTransfer& t);

struct FineWarmStart {
  Vector primal;
  Vector dual;
};

FineWarmStart prolong(const GridTransfer& t, const KKTSolution& coarse);

/// Least-squares restrictions (T'T)^{-1} T' z and (U'U)^{-1} U' y.
Vector restrict_primal(const GridTransfer& t, const Vector& z);
Vector restrict_dual(const GridTransfer& t, const Vector& y);

/// Original-space dual (nu, lambda) read from a stacked lifted state.
Vector original_dual(const LiftedProblem& lifted, const Vector& w);

struct CoarseningSchedule {
  std::vector<int> levels;
  int sweeps_per_level = 1;

  /// Levels strictly increasing, each dividing M and at most M.
  void validate(int M) const;
};

/// Coarse level: its transfer and the partitioning of its coarse problem.
struct CoarseLevel {
  GridTransfer transfer;
  Partitioning partitioning;
};
using CoarseLevelFactory = std::function<CoarseLevel(int M_c)>;

/// Factory for the temporal or spatial case described by `meta`.
CoarseLevelFactory case_level_factory(const CaseMetadata& meta);

enum class CoarseSolver { Centralized, GaussSeidel };

struct MultigridOptions {
  GsOptions gs;
  CoarseSolver coarse_solver = CoarseSolver::Centralized;
};

/**
 * Sequential coarsening. Step 0 is `initial`. Each level M_c < M solves the
 * coarse problem, prolongs it into the fine lifted space and runs
 * sweeps_per_level fine sweeps, one trace entry per sweep. A level equal to M
 * contributes nothing. Plain fine sweeps then continue until tol or
 * gs.max_steps total steps.
 */
GsResult run_multigrid(const CoupledQP& p, const Coordinator& coord, int M, const CoarseningSchedule& schedule,
                       const OrderingSchedule& order, const CoarseLevelFactory& factory,
                       const CoordinationState& initial, const MultigridOptions& options = {});

/// Stacked lifted state built from the centralized coarse solution at M_c.
Vector coarse_warm_start(const CoupledQP& p, const LiftedProblem& lifted, const GridTransfer& t);

}  // namespace mgcoord
