#pragma once

#include <array>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "mgcoord/lifting.hpp"
#include "mgcoord/ordering.hpp"

namespace mgcoord {

/// Storage-planning problem over K partitions of M time points each:
///   min sum x(i)^2 + u(i)^2
///   s.t. x(i+1) = x(i) + delta (u(i+1) + d(i+1)),  x(0) = 0
/// with d(i) = a1 sin(w1 i / N) + a2 sin(w2 i / N).
struct TemporalCaseSpec {
  int K = 10;
  int M = 100;
  double delta = 0.1;
  double a1 = 4.0;
  double a2 = 1.0;
  double w1 = 4.0 * std::numbers::pi;
  double w2 = 24.0 * std::numbers::pi;
  /// Scales the disturbance; 0 gives the trivial instance.
  double disturbance_scale = 1.0;
  /// When set, d(i) is drawn uniformly from [-1, 1] instead (random chain).
  std::optional<std::uint64_t> random_seed;

  int N() const { return K * M; }
  void validate() const;
};

/// Diffusion network on a (P M) x (P M) mesh split into P x P partitions.
struct SpatialCaseSpec {
  int P = 10;
  int M = 10;
  double D = 1.0;
  double X = 1.0;
  double Y = 1.0;
  double sin_amplitude = 2.0;
  double gauss_amplitude = 3.0;
  /// Gaussian centre and width relative to the domain size.
  double gauss_x0 = 2.0 / 3.0;
  double gauss_y0 = 2.0 / 3.0;
  double gauss_sigma = 1.0 / 8.0;
  double disturbance_scale = 1.0;

  int L() const { return P * M; }
  Index N() const { return static_cast<Index>(L()) * L(); }
  void validate() const;
};

/**
 * Variable layout of the temporal case. Partition k holds, in order, the copy
 * x_k(0) of the previous partition's last state (k >= 1) followed by
 * (x(t), u(t)) for its M time points. Dynamics row t-1 belongs to time t;
 * coupling row k-1 ties x_k(0) to x_{k-1}(M). Copies carry no cost, so Q is
 * only positive definite on the feasible subspace.
 */
struct TemporalLayout {
  int K = 0;
  int M = 0;

  Index num_vars() const { return 2 * static_cast<Index>(K) * M + K - 1; }
  Index partition_offset(int k) const { return 2 * static_cast<Index>(M) * k + (k > 0 ? k - 1 : 0); }
  /// t = 1..N
  Index x(int t) const;
  Index u(int t) const { return x(t) + 1; }
  /// k = 1..K-1
  Index copy(int k) const { return partition_offset(k); }
};

/**
 * Variable layout of the spatial case. Partition (n, m) holds (p, u) for its
 * M x M nodes (local row-major), then ghost copies of neighbouring boundary
 * potentials side by side (west, east, south, north), M per existing side.
 * Ghosts carry no cost; one coupling row per ghost ties it to its source.
 */
struct SpatialLayout {
  enum Side { West = 0, East = 1, South = 2, North = 3 };

  SpatialLayout(int P, int M);

  int P = 0;
  int M = 0;

  Index num_vars() const { return var_offset_.back(); }
  Index num_coupling_rows() const { return ghost_row_offset_.back(); }
  int partition_of(int i, int j) const { return ((i - 1) / M) * P + (j - 1) / M; }
  bool has_side(int n, int m, Side side) const;
  /// Mesh indices i, j = 1..P M.
  Index p(int i, int j) const;
  Index u(int i, int j) const { return p(i, j) + 1; }
  /// Balance row of node (i, j).
  Index balance_row(int i, int j) const;
  /// Ghost s = 1..M on `side` of partition (n, m); -1 when the side is a domain boundary.
  Index ghost(int n, int m, Side side, int s) const;
  Index ghost_row(int n, int m, Side side, int s) const;
  /// Mesh node a ghost copies.
  std::array<int, 2> ghost_source(int n, int m, Side side, int s) const;

private:
  std::vector<Index> var_offset_;
  std::vector<Index> ghost_row_offset_;
  std::vector<std::array<Index, 4>> side_slot_;  // ghost block position per side, -1 if absent
};

struct CaseMetadata {
  std::string kind;
  int K = 0;
  int M = 0;
  int P = 0;
  PartitionStructure structure;
  /// L1 norm of the disturbance over each partition's nodes.
  std::vector<double> partition_disturbance_l1;
  /// State (x or p) and control variable per mesh node, node order.
  std::vector<Index> state_index;
  std::vector<Index> control_index;

  /// (state, control) interleaved per node, the node-space primal.
  std::vector<Index> node_primal_index() const;
};

struct CaseInstance {
  CoupledQP qp;
  Partitioning partitioning;
  CaseMetadata metadata;
};

CaseInstance build_temporal(const TemporalCaseSpec& spec);
CaseInstance build_spatial(const SpatialCaseSpec& spec);

/// d(i) for i = 0..N (closed-form signal; ignores random_seed).
double temporal_disturbance(const TemporalCaseSpec& spec, int i);
/// d(1..N) as used by build_temporal.
Vector temporal_disturbance_vector(const TemporalCaseSpec& spec);
/// Load field at a point of the domain.
double spatial_disturbance(const SpatialCaseSpec& spec, double x, double y);
/// Load at mesh node (i, j), i, j = 1..P M, located at (i X/(L+1), j Y/(L+1)).
double spatial_disturbance(const SpatialCaseSpec& spec, int i, int j);

/// Directed flows D (p(i,j) - p(nb)) to the neighbours (i,j+1), (i,j-1),
/// (i+1,j), (i-1,j). `potential` is indexed [i-1][j-1]; outside nodes are 0.
std::array<double, 4> flow_from_potentials(const Matrix& potential, int i, int j, double D);

/// Potential field (L x L) read from a primal vector of the spatial case.
Matrix potential_field(const CaseMetadata& meta, const Vector& primal);

}  // namespace mgcoord
