#include "mgcoord/ordering.hpp"

#include <algorithm>
#include <numeric>
#include <set>

namespace mgcoord {
namespace {

OrderingSchedule singletons(std::string name, const std::vector<int>& seq) {
  OrderingSchedule s;
  s.name = std::move(name);
  for (int k : seq) s.groups.push_back({k});
  return s;
}

}  // namespace

std::vector<int> OrderingSchedule::sigma() const {
  std::vector<int> seq;
  for (const auto& g : groups) seq.insert(seq.end(), g.begin(), g.end());
  return seq;
}

void OrderingSchedule::validate(int K) const {
  std::vector<int> seen(static_cast<std::size_t>(K), 0);
  for (const auto& g : groups) {
    if (g.empty()) throw Error(ErrorKind::InvalidArgument, "ordering '" + name + "' has an empty group");
    std::set<int> in_group;
    for (int k : g) {
      if (k < 0 || k >= K) throw Error(ErrorKind::UnknownPartition, "ordering references partition " + std::to_string(k));
      if (!in_group.insert(k).second)
        throw Error(ErrorKind::InvalidArgument, "partition " + std::to_string(k) + " repeated inside a group");
      ++seen[static_cast<std::size_t>(k)];
    }
  }
  for (int k = 0; k < K; ++k)
    if (seen[static_cast<std::size_t>(k)] == 0)
      throw Error(ErrorKind::InvalidArgument, "ordering '" + name + "' never visits partition " + std::to_string(k));
}

void OrderingSchedule::validate(const LiftedProblem& lifted) const {
  validate(lifted.num_partitions());
  for (const auto& g : groups)
    for (std::size_t a = 0; a < g.size(); ++a)
      for (std::size_t b = a + 1; b < g.size(); ++b)
        if (lifted.coupled(g[a], g[b]))
          throw Error(ErrorKind::NotTwoColorable, "partitions " + std::to_string(g[a]) + " and " +
                                                      std::to_string(g[b]) + " share a group but are coupled");
}

OrderingSchedule lexicographic(int K) {
  if (K < 1) throw Error(ErrorKind::InvalidArgument, "K must be positive");
  std::vector<int> seq(static_cast<std::size_t>(K));
  std::iota(seq.begin(), seq.end(), 0);
  return singletons("lexicographic", seq);
}

OrderingSchedule reverse_lexicographic(int K) {
  if (K < 1) throw Error(ErrorKind::InvalidArgument, "K must be positive");
  std::vector<int> seq(static_cast<std::size_t>(K));
  std::iota(seq.rbegin(), seq.rend(), 0);
  return singletons("reverse_lexicographic", seq);
}

OrderingSchedule forward_backward(int K) {
  if (K < 2) throw Error(ErrorKind::InvalidArgument, "forward-backward needs K >= 2");
  std::vector<int> seq;
  for (int k = 0; k < K; ++k) seq.push_back(k);
  for (int k = K - 1; k >= 0; --k) seq.push_back(k);
  return singletons("forward_backward", seq);
}

OrderingSchedule red_black(const LiftedProblem& lifted, const PartitionStructure& structure) {
  const int K = structure.num_partitions();
  if (K != lifted.num_partitions())
    throw Error(ErrorKind::DimensionMismatch, "structure has " + std::to_string(K) + " partitions, lifted problem " +
                                                  std::to_string(lifted.num_partitions()));
  OrderingSchedule s;
  s.name = "red_black";
  std::vector<int> red;
  std::vector<int> black;
  if (structure.kind == PartitionStructure::Kind::Chain) {
    // sigma(i) = 2i - 1 for i <= K/2, 2i - K otherwise (1-based)
    for (int k = 0; k < K; ++k) (k % 2 == 0 ? red : black).push_back(k);
  } else {
    const int P = structure.size;
    for (int n = 0; n < P; ++n)
      for (int m = 0; m < P; ++m) ((n + m) % 2 == 0 ? red : black).push_back(grid_index(n, m, P));
  }
  for (auto* g : {&red, &black}) {
    std::sort(g->begin(), g->end());
    if (!g->empty()) s.groups.push_back(*g);
  }
  s.validate(lifted);
  return s;
}

OrderingSchedule by_disturbance_magnitude(std::span<const double> magnitudes) {
  if (magnitudes.empty()) throw Error(ErrorKind::MissingMetadata, "no per-partition disturbance magnitudes");
  std::vector<int> seq(magnitudes.size());
  std::iota(seq.begin(), seq.end(), 0);
  std::stable_sort(seq.begin(), seq.end(), [&](int a, int b) {
    return magnitudes[static_cast<std::size_t>(a)] > magnitudes[static_cast<std::size_t>(b)];
  });
  return singletons("disturbance_magnitude", seq);
}

OrderingSchedule spiral(int P) {
  if (P < 1) throw Error(ErrorKind::InvalidArgument, "P must be positive");
  std::vector<int> seq;
  int top = 0, bottom = P - 1, left = 0, right = P - 1;
  while (top <= bottom && left <= right) {
    for (int m = left; m <= right; ++m) seq.push_back(grid_index(top, m, P));
    ++top;
    for (int n = top; n <= bottom; ++n) seq.push_back(grid_index(n, right, P));
    --right;
    if (top <= bottom) {
      for (int m = right; m >= left; --m) seq.push_back(grid_index(bottom, m, P));
      --bottom;
    }
    if (left <= right) {
      for (int n = bottom; n >= top; --n) seq.push_back(grid_index(n, left, P));
      ++left;
    }
  }
  return singletons("spiral", seq);
}

}  // namespace mgcoord
