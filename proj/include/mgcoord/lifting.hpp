#pragma once

#include <map>
#include <vector>

#include "mgcoord/qp_core.hpp"

namespace mgcoord {

/// Assignment of every variable to exactly one partition (0-based).
struct Partitioning {
  std::vector<int> assignment;
  int num_partitions = 0;
  /// Optional owner partition for each row of Pi. Empty means "partition of
  /// the row's first nonzero".
  std::vector<int> coupling_owner;

  /// K contiguous blocks of (almost) equal size over n variables.
  static Partitioning contiguous(Index n, int K);

  void validate(Index num_vars) const;
  std::vector<Index> members(int k) const;
};

enum class CouplingKind {
  Duplicate,  ///< copy of a foreign variable created by lifting a cross term of Q
  Explicit,   ///< row of Pi spanning several partitions
};

struct CouplingRow {
  CouplingKind kind = CouplingKind::Duplicate;
  /// Duplicate: original index of the copied variable. Explicit: row of Pi.
  Index source = 0;
};

/**
 * Partition k of a lifted problem. Local variable order is owned variables
 * (ascending original index) followed by duplicated foreign variables
 * (ascending). The partition-local KKT system is
 *
 *   [ Q        local_A'  Pi_kk' ] [z     ]   [ c - sum_j Pi_jk' lambda_j ]
 *   [ local_A                   ] [nu    ] = [ local_rhs                 ]
 *   [ Pi_kk                     ] [lambda]   [ - sum_j Pi_kj z_j         ]
 */
struct PartitionBlock {
  std::vector<Index> owned;
  std::vector<Index> duplicates;

  Matrix Q;
  Vector c;

  Matrix local_A;
  Vector local_rhs;
  /// Row of the stacked constraint matrix [A; Pi] each local row came from.
  std::vector<Index> local_rows;

  Matrix coupling_self;                   ///< Pi_kk
  std::map<int, Matrix> coupling_other;   ///< Pi_kk' keyed by k'
  std::vector<CouplingRow> coupling_rows;

  Index num_vars() const { return static_cast<Index>(owned.size() + duplicates.size()); }
  Index num_owned() const { return static_cast<Index>(owned.size()); }
  Index num_local() const { return local_A.rows(); }
  Index num_coupling() const { return coupling_self.rows(); }
  /// Size of x_k = (z_k, nu_k, lambda_k).
  Index state_size() const { return num_vars() + num_local() + num_coupling(); }
  /// Original variable index behind a local lifted variable.
  Index original_index(Index local) const;
};

/**
 * Lifted problem
 *
 *   min  sum_k 1/2 z_k'Q_k z_k - c_k'z_k
 *   s.t. local_A_k z_k = local_rhs_k                 (nu_k)
 *        Pi_kk z_k + sum_{k'!=k} Pi_kk' z_k' = 0      (lambda_k)
 *
 * The stacked state is w = [x_0; ...; x_{K-1}], x_k = [z_k; nu_k; lambda_k].
 */
struct LiftedProblem {
  std::vector<PartitionBlock> blocks;
  Index num_original_vars = 0;
  /// Rows of [A; Pi] in the problem this was lifted from (0 for an unconstrained source).
  Index num_original_rows = 0;
  Index num_original_pi_offset = 0;
  double split_weight = 0.5;

  int num_partitions() const { return static_cast<int>(blocks.size()); }
  Index state_dim() const;
  std::vector<Index> state_offsets() const;
  /// True if k and k' share a coupling row in either direction.
  bool coupled(int k, int kp) const;
  /// Symmetric neighbour lists of the coupling graph.
  std::vector<std::vector<int>> neighbors() const;

  /// Original-space primal read from the owned coordinates of a stacked state.
  Vector owned_primal(const Vector& w) const;
  /// Largest |copy - owner| over all duplicated variables in a stacked state.
  double duplicate_mismatch(const Vector& w) const;
  /// Routes an original-space primal-dual pair into a stacked state. Duals of
  /// duplicate-consistency rows have no original counterpart; they are read
  /// off the stationarity row of the copy.
  Vector stacked_from_original(const Vector& primal, const Vector& dual) const;
};

/// Stacked solution w* of the lifted KKT system, solved as one centralized system.
struct LiftedSolution {
  Vector w;
  double residual_norm = 0.0;
};
LiftedSolution solve_lifted(const LiftedProblem& lifted);

/// Nodes outside partition k coupled to it through nonzero entries of Q, ascending.
std::vector<Index> coupled_neighbors(const UnconstrainedQP& q, const Partitioning& part, int k);
std::vector<Index> coupled_neighbors(const SparseMatrix& Q, const Partitioning& part, int k);

/// Lifts an implicitly coupled QP. Cross terms Q_ij between partitions k < k'
/// go with weight `weight` to k and 1 - weight to k'.
LiftedProblem build_lifted(const UnconstrainedQP& q, const Partitioning& part, double weight = 0.5);

/// Lifts a QP with explicit constraints. Rows of A must be partition-local;
/// rows of Pi spanning partitions become coupling rows of their owner.
LiftedProblem lift_explicit(const CoupledQP& p, const Partitioning& part, double weight = 0.5);

struct LiftReport {
  double primal_discrepancy = 0.0;
  double duplicate_mismatch = 0.0;
  double threshold = 1e-8;
  bool loosened = false;  ///< ill-conditioned Q, threshold relaxed to 1e-6
  bool passed = false;
};

LiftReport verify_lift(const UnconstrainedQP& q, const LiftedProblem& lifted);
LiftReport verify_lift(const CoupledQP& p, const LiftedProblem& lifted);

}  // namespace mgcoord
