#pragma once

#include <span>
#include <string>
#include <vector>

#include "mgcoord/lifting.hpp"

namespace mgcoord {

/**
 * Coordination order: groups are visited in sequence, partitions inside one
 * group are mutually uncoupled and may be solved concurrently. The
 * concatenation of the groups is the update sequence sigma. A partition may
 * appear more than once per sweep (forward-backward).
 */
struct OrderingSchedule {
  std::string name;
  std::vector<std::vector<int>> groups;

  std::vector<int> sigma() const;
  /// Checks coverage of 0..K-1, no repeats inside a group and, when a lifted
  /// problem is given, the no-intra-group-coupling rule.
  void validate(int K) const;
  void validate(const LiftedProblem& lifted) const;
};

/// Layout of the partitions, used to 2-colour them.
struct PartitionStructure {
  enum class Kind { Chain, Grid };
  Kind kind = Kind::Chain;
  int size = 0;  ///< K for a chain, P for a P x P grid

  static PartitionStructure chain(int K) { return {Kind::Chain, K}; }
  static PartitionStructure grid(int P) { return {Kind::Grid, P}; }
  int num_partitions() const { return kind == Kind::Chain ? size : size * size; }
};

OrderingSchedule lexicographic(int K);
OrderingSchedule reverse_lexicographic(int K);
/// Sweep 0..K-1 followed by K-1..0, counted as one coordination step.
OrderingSchedule forward_backward(int K);
/// Chain: odd partitions (1-based) then even ones. Grid: checkerboard on (n, m).
OrderingSchedule red_black(const LiftedProblem& lifted, const PartitionStructure& structure);
/// Descending per-partition disturbance magnitude, ties by ascending index.
OrderingSchedule by_disturbance_magnitude(std::span<const double> magnitudes);
/// Clockwise inward spiral over a P x P grid starting at (0, 0).
OrderingSchedule spiral(int P);

/// Grid partition (n, m) -> linear index n * P + m.
inline int grid_index(int n, int m, int P) { return n * P + m; }

}  // namespace mgcoord
