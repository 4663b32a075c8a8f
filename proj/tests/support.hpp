#pragma once

#include <random>

#include "mgcoord/cases.hpp"
#include "mgcoord/coordination.hpp"

namespace mgtest {

using namespace mgcoord;

/// Random symmetric banded Q with a dominant diagonal, plus a random cost.
inline UnconstrainedQP random_banded(Index n, int bandwidth, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> off(-1.0, 1.0);
  std::uniform_real_distribution<double> extra(0.5, 2.0);
  UnconstrainedQP q;
  q.Q = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n && j <= i + bandwidth; ++j) q.Q(i, j) = q.Q(j, i) = off(rng);
  for (Index i = 0; i < n; ++i) q.Q(i, i) = q.Q.row(i).cwiseAbs().sum() + extra(rng);
  q.c = Vector::NullaryExpr(n, [&] { return off(rng); });
  return q;
}

/// Temporal layout with a seeded random disturbance.
inline CaseInstance random_chain(int K, int M, std::uint64_t seed) {
  TemporalCaseSpec spec;
  spec.K = K;
  spec.M = M;
  spec.random_seed = seed;
  return build_temporal(spec);
}

inline CaseInstance temporal_toy(int K, int M, double scale = 1.0) {
  TemporalCaseSpec spec;
  spec.K = K;
  spec.M = M;
  spec.disturbance_scale = scale;
  return build_temporal(spec);
}

inline CaseInstance spatial_toy(int P, int M, double scale = 1.0) {
  SpatialCaseSpec spec;
  spec.P = P;
  spec.M = M;
  spec.disturbance_scale = scale;
  return build_spatial(spec);
}

/// Runs GS to a tight tolerance against the lifted oracle.
inline GsResult converge(const Coordinator& coord, const OrderingSchedule& order, std::size_t max_steps = 5000,
                         Execution exec = Execution::Sequential) {
  GsOptions opt;
  opt.tol = 1e-11;
  opt.max_steps = max_steps;
  opt.oracle = solve_lifted(coord.lifted()).w;
  opt.execution = exec;
  return run_gs(coord, CoordinationState::zeros(coord.lifted()), order, opt);
}

inline Vector random_vector(Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  return Vector::NullaryExpr(n, [&] { return g(rng); });
}

}  // namespace mgtest
