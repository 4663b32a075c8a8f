#include <doctest.h>

#include "support.hpp"

using namespace mgcoord;
using namespace mgtest;

namespace {

struct Fixture {
  CaseInstance inst;
  Coordinator coord;
  explicit Fixture(CaseInstance i) : inst(std::move(i)), coord(lift_explicit(inst.qp, inst.partitioning)) {}
};

}  // namespace

TEST_CASE("partition_solve: zero data gives zero") {
  const Fixture f(temporal_toy(3, 4, 0.0));
  const auto st = CoordinationState::zeros(f.coord.lifted());
  for (int k = 0; k < 3; ++k) {
    const auto up = f.coord.partition_solve(st, k);
    CHECK(up.z.lpNorm<Eigen::Infinity>() == 0.0);
    CHECK(up.lambda.size() == (k == 0 ? 0 : 1));
  }
  CHECK_THROWS_AS(f.coord.partition_solve(st, 3), Error);
}

TEST_CASE("partition_solve: interface value is imposed") {
  const Fixture f(temporal_toy(3, 4));
  auto st = CoordinationState::zeros(f.coord.lifted());
  const TemporalLayout lay{3, 4};
  // x_0(M) is the last state of partition 0; its local index
  const Index x_end = lay.x(4) - lay.partition_offset(0);
  st.z[0](x_end) = 0.5;
  const auto up = f.coord.partition_solve(st, 1);
  CHECK(up.z(0) == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("partition_solve: two-partition step matches a direct solve") {
  std::mt19937_64 rng(41);
  const UnconstrainedQP q = random_banded(8, 2, rng);
  const Coordinator coord(build_lifted(q, Partitioning::contiguous(8, 2)));
  auto st = CoordinationState::zeros(coord.lifted());
  st.z[1] = random_vector(st.z[1].size(), rng);
  st.lambda[1] = random_vector(st.lambda[1].size(), rng);
  const auto up = coord.partition_solve(st, 0);

  // Assemble partition 0's KKT system by hand.
  const auto& b0 = coord.lifted().blocks[0];
  const auto& b1 = coord.lifted().blocks[1];
  const Index n = b0.num_vars();
  const Index c = b0.num_coupling();
  Matrix K = Matrix::Zero(n + c, n + c);
  K.topLeftCorner(n, n) = b0.Q;
  K.topRightCorner(n, c) = b0.coupling_self.transpose();
  K.bottomLeftCorner(c, n) = b0.coupling_self;
  Vector rhs(n + c);
  rhs.head(n) = b0.c - b1.coupling_other.at(0).transpose() * st.lambda[1];
  rhs.tail(c) = -b0.coupling_other.at(1) * st.z[1];
  const Vector x = K.fullPivLu().solve(rhs);
  CHECK((up.z - x.head(n)).lpNorm<Eigen::Infinity>() <= 1e-12);
  CHECK((up.lambda - x.tail(c)).lpNorm<Eigen::Infinity>() <= 1e-12);
}

TEST_CASE("sweep: fixed point is preserved") {
  const Fixture f(temporal_toy(3, 4));
  const Vector ws = solve_lifted(f.coord.lifted()).w;
  const auto st = CoordinationState::from_stacked(f.coord.lifted(), ws);
  const auto next = f.coord.sweep(st, lexicographic(3));
  CHECK((next.stacked() - ws).lpNorm<Eigen::Infinity>() <= 1e-12 * (1.0 + ws.lpNorm<Eigen::Infinity>()));
  CHECK(next.step == 1);
}

TEST_CASE("sweep equals S w + r") {
  std::mt19937_64 rng(43);
  const Fixture f(random_chain(3, 4, 5));
  const auto order = lexicographic(3);
  const auto op = build_iteration_operator(f.coord, order);
  for (int t = 0; t < 20; ++t) {
    const Vector w = random_vector(f.coord.lifted().state_dim(), rng);
    const Vector swept = f.coord.sweep(CoordinationState::from_stacked(f.coord.lifted(), w), order).stacked();
    CHECK((swept - (op.S * w + op.r)).lpNorm<Eigen::Infinity>() <= 1e-10);
  }
}

TEST_CASE("iteration operator: single partition") {
  std::mt19937_64 rng(47);
  const UnconstrainedQP q = random_banded(5, 2, rng);
  const Coordinator coord(build_lifted(q, Partitioning::contiguous(5, 1)));
  const auto op = build_iteration_operator(coord, lexicographic(1));
  CHECK(op.S.isZero(0.0));
  CHECK((op.r - q.minimizer()).lpNorm<Eigen::Infinity>() <= 1e-12);
  const auto cert = certify(coord, lexicographic(1));
  CHECK(cert.spectral_radius == 0.0);
  CHECK(cert.converges);
}

TEST_CASE("iteration operator: two partitions against the block formula") {
  std::mt19937_64 rng(53);
  const UnconstrainedQP q = random_banded(6, 1, rng);
  const Coordinator coord(build_lifted(q, Partitioning::contiguous(6, 2)));
  const auto& L = coord.lifted();
  const auto op = build_iteration_operator(coord, lexicographic(2));

  // x_1 = K_1^{-1}(b_1 - C_12 x_2^l), x_2 = K_2^{-1}(b_2 - C_21 x_1^{l+1})
  std::vector<Matrix> Kinv(2);
  std::vector<Matrix> C(4);  // C[k*2+j]: effect of x_j on partition k's right-hand side
  const auto off = L.state_offsets();
  for (int k = 0; k < 2; ++k) {
    const auto& b = L.blocks[static_cast<std::size_t>(k)];
    const Index n = b.num_vars(), c = b.num_coupling();
    Matrix K = Matrix::Zero(n + c, n + c);
    K.topLeftCorner(n, n) = b.Q;
    K.topRightCorner(n, c) = b.coupling_self.transpose();
    K.bottomLeftCorner(c, n) = b.coupling_self;
    Kinv[static_cast<std::size_t>(k)] = K.inverse();
    const int j = 1 - k;
    const auto& bj = L.blocks[static_cast<std::size_t>(j)];
    Matrix Ckj = Matrix::Zero(n + c, bj.state_size());
    Ckj.topRightCorner(n, bj.num_coupling()) = bj.coupling_other.at(k).transpose();
    Ckj.bottomLeftCorner(c, bj.num_vars()) = b.coupling_other.at(j);
    C[static_cast<std::size_t>(k * 2 + j)] = Ckj;
  }
  const Index d0 = L.blocks[0].state_size(), d1 = L.blocks[1].state_size();
  Matrix S = Matrix::Zero(d0 + d1, d0 + d1);
  S.block(0, d0, d0, d1) = -Kinv[0] * C[1];
  S.block(d0, d0, d1, d1) = Kinv[1] * C[2] * Kinv[0] * C[1];
  CHECK((op.S - S).lpNorm<Eigen::Infinity>() <= 1e-10);
  CHECK(off[1] == d0);

  // reversed order: another S, same fixed point
  const auto rev = build_iteration_operator(coord, reverse_lexicographic(2));
  const Matrix I = Matrix::Identity(d0 + d1, d0 + d1);
  const Vector fp = (I - op.S).lu().solve(op.r);
  const Vector fpr = (I - rev.S).lu().solve(rev.r);
  CHECK((fp - fpr).lpNorm<Eigen::Infinity>() <= 1e-10);
  CHECK((op.S - rev.S).norm() > 0.0);
}

TEST_CASE("certify: temporal case is contractive for one-way orderings") {
  const Fixture f(temporal_toy(4, 6));
  for (const auto& order : {lexicographic(4), reverse_lexicographic(4),
                            red_black(f.coord.lifted(), PartitionStructure::chain(4))}) {
    const auto cert = certify(f.coord, order);
    CHECK(cert.eigen_method == EigenMethod::DenseEig);
    CHECK(cert.converges);
    CHECK(cert.spectral_radius < 1.0);
  }
}

TEST_CASE("forward-backward is the composition of the two one-way sweeps") {
  // The double solve of the last partition is idempotent, so S_fb = S_rev S_lex.
  const Fixture f(temporal_toy(4, 6));
  const auto lex = build_iteration_operator(f.coord, lexicographic(4));
  const auto rev = build_iteration_operator(f.coord, reverse_lexicographic(4));
  const auto fb = build_iteration_operator(f.coord, forward_backward(4));
  CHECK((fb.S - rev.S * lex.S).lpNorm<Eigen::Infinity>() <= 1e-10);
  CHECK((fb.r - (rev.S * lex.r + rev.r)).lpNorm<Eigen::Infinity>() <= 1e-10);
  const Matrix I = Matrix::Identity(fb.S.rows(), fb.S.cols());
  const Vector fp = (I - fb.S).lu().solve(fb.r);
  CHECK((fp - solve_lifted(f.coord.lifted()).w).lpNorm<Eigen::Infinity>() <= 1e-9);
  // a product of two contractions need not contract
  CHECK(certify(f.coord, forward_backward(4)).spectral_radius > 1.0);
  CHECK(certify(f.coord, forward_backward(4)).spectral_radius ==
        doctest::Approx(Eigen::EigenSolver<Matrix>(rev.S * lex.S, false).eigenvalues().cwiseAbs().maxCoeff()));
}

TEST_CASE("certify: power iteration agrees with the dense radius") {
  const Fixture f(random_chain(3, 5, 9));
  const auto dense = certify(f.coord, lexicographic(3));
  CertifyOptions opt;
  opt.dense_cap = 1;
  opt.power_iterations = 400;
  const auto power = certify(f.coord, lexicographic(3), opt);
  CHECK(power.eigen_method == EigenMethod::PowerIteration);
  CHECK(power.spectral_radius == doctest::Approx(dense.spectral_radius).epsilon(1e-4));
  CHECK_THROWS_AS(build_iteration_operator(f.coord, lexicographic(3), 1), Error);
}

TEST_CASE("run_gs: start at the solution") {
  const Fixture f(temporal_toy(3, 4));
  GsOptions opt;
  opt.oracle = solve_lifted(f.coord.lifted()).w;
  const auto res = run_gs(f.coord, CoordinationState::from_stacked(f.coord.lifted(), *opt.oracle), lexicographic(3), opt);
  CHECK(res.converged);
  CHECK(res.trace.front().error_w == 0.0);
  CHECK(res.trace.size() == 2);
}

TEST_CASE("run_gs: limit equals the centralized solution and does not depend on the order") {
  const Fixture f(temporal_toy(4, 6));
  const Vector central = solve_centralized(f.inst.qp).primal;
  std::vector<Vector> limits;
  for (const auto& order : {lexicographic(4), reverse_lexicographic(4),
                            red_black(f.coord.lifted(), PartitionStructure::chain(4))}) {
    const auto res = converge(f.coord, order);
    REQUIRE(res.converged);
    limits.push_back(res.state.stacked());
    CHECK((f.coord.lifted().owned_primal(limits.back()) - central).lpNorm<Eigen::Infinity>() <= 1e-7);
  }
  CHECK((limits[0] - limits[1]).lpNorm<Eigen::Infinity>() <= 1e-7);
  CHECK((limits[0] - limits[2]).lpNorm<Eigen::Infinity>() <= 1e-7);

  // forward-backward where it contracts
  const Fixture g(temporal_toy(3, 4));
  REQUIRE(certify(g.coord, forward_backward(3)).converges);
  const auto fb = converge(g.coord, forward_backward(3));
  const auto lx = converge(g.coord, lexicographic(3));
  REQUIRE(fb.converged);
  CHECK((fb.state.stacked() - lx.state.stacked()).lpNorm<Eigen::Infinity>() <= 1e-7);
}

TEST_CASE("run_gs: parallel red-black is bit-identical to sequential") {
  const Fixture f(temporal_toy(4, 5));
  const auto rb = red_black(f.coord.lifted(), PartitionStructure::chain(4));
  const auto seq = converge(f.coord, rb, 200, Execution::Sequential);
  const auto par = converge(f.coord, rb, 200, Execution::Parallel);
  REQUIRE(seq.trace.size() == par.trace.size());
  CHECK(seq.state.stacked() == par.state.stacked());
  for (std::size_t i = 0; i < seq.trace.size(); ++i) CHECK(seq.trace[i].error_w == par.trace[i].error_w);
}

TEST_CASE("run_gs: trace obeys the rate bound") {
  const Fixture f(random_chain(3, 5, 13));
  const auto order = lexicographic(3);
  const auto cert = certify(f.coord, order);
  const auto res = converge(f.coord, order);
  CHECK(fit_rate_constant(res.trace, cert.spectral_radius) <= 1e3);
}

TEST_CASE("run_gs: without an oracle the trace holds step differences") {
  const Fixture f(temporal_toy(2, 3));
  GsOptions opt;
  opt.max_steps = 5;
  opt.tol = 1e-300;
  const auto res = run_gs(f.coord, CoordinationState::zeros(f.coord.lifted()), lexicographic(2), opt);
  CHECK_FALSE(res.converged);
  REQUIRE(res.trace.size() == 6);
  for (std::size_t i = 1; i < res.trace.size(); ++i) {
    CHECK(res.trace[i].step == i);
    CHECK(res.trace[i].error_w == res.trace[i].step_difference);
  }
  opt.tol = 0.0;
  CHECK_THROWS_AS(run_gs(f.coord, CoordinationState::zeros(f.coord.lifted()), lexicographic(2), opt), Error);
}
