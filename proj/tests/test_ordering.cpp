#include <doctest.h>

#include "support.hpp"

using namespace mgcoord;
using namespace mgtest;

using Groups = std::vector<std::vector<int>>;

TEST_CASE("lexicographic and reverse") {
  CHECK(lexicographic(1).groups == Groups{{0}});
  CHECK(lexicographic(4).groups == Groups{{0}, {1}, {2}, {3}});
  CHECK(reverse_lexicographic(2).sigma() == std::vector<int>{1, 0});
  CHECK(reverse_lexicographic(10).sigma() == std::vector<int>{9, 8, 7, 6, 5, 4, 3, 2, 1, 0});
  CHECK_THROWS_AS(lexicographic(0), Error);
}

TEST_CASE("forward_backward") {
  CHECK(forward_backward(2).sigma() == std::vector<int>{0, 1, 1, 0});
  CHECK(forward_backward(4).sigma() == std::vector<int>{0, 1, 2, 3, 3, 2, 1, 0});
  CHECK_THROWS_AS(forward_backward(1), Error);
}

TEST_CASE("red_black on a chain") {
  const auto inst = temporal_toy(4, 3);
  const auto lifted = lift_explicit(inst.qp, inst.partitioning);
  const auto rb = red_black(lifted, PartitionStructure::chain(4));
  CHECK(rb.groups == Groups{{0, 2}, {1, 3}});
  // sigma(i) = 2i - 1 for i <= K/2, 2i - K otherwise (1-based)
  std::vector<int> expect;
  for (int i = 1; i <= 4; ++i) expect.push_back((i <= 2 ? 2 * i - 1 : 2 * i - 4) - 1);
  CHECK(rb.sigma() == expect);
  CHECK_NOTHROW(rb.validate(lifted));

  const auto two = temporal_toy(2, 3);
  CHECK(red_black(lift_explicit(two.qp, two.partitioning), PartitionStructure::chain(2)).groups == Groups{{0}, {1}});
}

TEST_CASE("red_black on a partition grid") {
  const auto inst = spatial_toy(2, 2);
  const auto lifted = lift_explicit(inst.qp, inst.partitioning);
  const auto rb = red_black(lifted, PartitionStructure::grid(2));
  CHECK(rb.groups == Groups{{grid_index(0, 0, 2), grid_index(1, 1, 2)}, {grid_index(0, 1, 2), grid_index(1, 0, 2)}});
  for (const auto& g : rb.groups)
    for (int a : g)
      for (int b : g)
        if (a != b) CHECK_FALSE(lifted.coupled(a, b));
}

TEST_CASE("coupled partitions in one group are rejected") {
  const auto inst = temporal_toy(3, 2);
  const auto lifted = lift_explicit(inst.qp, inst.partitioning);
  OrderingSchedule bad{"bad", {{0, 1}, {2}}};
  try {
    bad.validate(lifted);
    FAIL("expected NotTwoColorable");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NotTwoColorable);
  }
  OrderingSchedule missing{"missing", {{0}, {2}}};
  CHECK_THROWS_AS(missing.validate(3), Error);
}

TEST_CASE("by_disturbance_magnitude") {
  const std::vector<double> uniform(4, 1.0);
  CHECK(by_disturbance_magnitude(uniform).sigma() == std::vector<int>{0, 1, 2, 3});
  const std::vector<double> zero(4, 0.0);
  CHECK(by_disturbance_magnitude(zero).sigma() == std::vector<int>{0, 1, 2, 3});
  const std::vector<double> mags{1.0, 3.0, 2.0, 3.0};
  CHECK(by_disturbance_magnitude(mags).sigma() == std::vector<int>{1, 3, 2, 0});
  try {
    by_disturbance_magnitude(std::vector<double>{});
    FAIL("expected MissingMetadata");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::MissingMetadata);
  }
}

TEST_CASE("by_disturbance_magnitude: Gaussian peak partition goes first") {
  SpatialCaseSpec spec;
  spec.P = 5;
  spec.M = 4;
  spec.sin_amplitude = 0.0;
  spec.gauss_x0 = spec.gauss_y0 = 0.5;
  const auto inst = build_spatial(spec);
  // recompute the per-partition L1 sums from the field itself
  std::vector<double> sums(25, 0.0);
  for (int i = 1; i <= spec.L(); ++i)
    for (int j = 1; j <= spec.L(); ++j)
      sums[static_cast<std::size_t>(((i - 1) / 4) * 5 + (j - 1) / 4)] += std::abs(spatial_disturbance(spec, i, j));
  for (std::size_t k = 0; k < sums.size(); ++k)
    CHECK(inst.metadata.partition_disturbance_l1[k] == doctest::Approx(sums[k]).epsilon(1e-12));
  CHECK(by_disturbance_magnitude(inst.metadata.partition_disturbance_l1).sigma().front() == grid_index(2, 2, 5));
}

TEST_CASE("spiral") {
  CHECK(spiral(1).sigma() == std::vector<int>{0});
  CHECK(spiral(2).sigma() == std::vector<int>{grid_index(0, 0, 2), grid_index(0, 1, 2), grid_index(1, 1, 2),
                                              grid_index(1, 0, 2)});
  const auto s3 = spiral(3).sigma();
  CHECK(s3 == std::vector<int>{0, 1, 2, 5, 8, 7, 6, 3, 4});
  CHECK(s3.back() == grid_index(1, 1, 3));
}
