#include "mgcoord/coarsening.hpp"

#include <chrono>
#include <cmath>
#include <limits>

namespace mgcoord {
namespace {

std::string dims(const SparseMatrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void check_divides(int M, int M_c) {
  if (M < 1 || M_c < 1 || M_c > M || M % M_c != 0)
    throw Error(ErrorKind::NonDivisor, "coarse resolution " + std::to_string(M_c) + " does not divide " + std::to_string(M));
}

SparseMatrix from_triplets(Index rows, Index cols, const std::vector<Triplet>& trip) {
  SparseMatrix m(rows, cols);
  m.setFromTriplets(trip.begin(), trip.end());
  return m;
}

SparseMatrix identity(Index n) {
  SparseMatrix m(n, n);
  m.setIdentity();
  return m;
}

// (X'X)^{-1} X' v for a 0/1 matrix with orthogonal columns.
Vector normal_restrict(const SparseMatrix& X, const Vector& v) {
  const Vector num = X.transpose() * v;
  Vector counts = X.transpose() * Vector::Ones(X.rows());
  for (Index i = 0; i < counts.size(); ++i)
    if (counts(i) == 0.0) throw Error(ErrorKind::RankDeficient, "transfer has an empty column");
  return num.cwiseQuotient(counts);
}

}  // namespace

void GridTransfer::validate() const {
  if (U.rows() < fine_local_rows || U.cols() < coarse_local_rows)
    throw Error(ErrorKind::DimensionMismatch, "U is " + dims(U) + ", smaller than its local blocks");
  for (Index col = 0; col < U.outerSize(); ++col)
    for (SparseMatrix::InnerIterator it(U, col); it; ++it)
      if ((it.row() < fine_local_rows) != (it.col() < coarse_local_rows))
        throw Error(ErrorKind::InvalidArgument, "U mixes local and coupling rows");
  std::vector<int> per_row(static_cast<std::size_t>(T.rows()), 0);
  for (Index col = 0; col < T.outerSize(); ++col)
    for (SparseMatrix::InnerIterator it(T, col); it; ++it) {
      if (it.value() != 1.0) return;  // not piecewise constant, nothing more to check
      ++per_row[static_cast<std::size_t>(it.row())];
    }
  for (std::size_t r = 0; r < per_row.size(); ++r)
    if (per_row[r] != 1)
      throw Error(ErrorKind::InvalidArgument, "row " + std::to_string(r) + " of T has " + std::to_string(per_row[r]) + " entries");
}

SparseMatrix piecewise_constant(int M, int M_c) {
  check_divides(M, M_c);
  const int r = M / M_c;
  std::vector<Triplet> trip;
  for (int i = 0; i < M; ++i) trip.emplace_back(i, i / r, 1.0);
  return from_triplets(M, M_c, trip);
}

GridTransfer build_transfer_temporal(int K, int M, int M_c) {
  check_divides(M, M_c);
  if (K < 1) throw Error(ErrorKind::InvalidArgument, "K must be positive");
  const int r = M / M_c;
  const TemporalLayout fine{K, M};
  const TemporalLayout coarse{K, M_c};
  const int N = K * M;

  std::vector<Triplet> t;
  std::vector<Triplet> u;
  for (int tf = 1; tf <= N; ++tf) {
    const int k = (tf - 1) / M;
    const int tc = k * M_c + (tf - 1 - k * M) / r + 1;
    t.emplace_back(fine.x(tf), coarse.x(tc), 1.0);
    t.emplace_back(fine.u(tf), coarse.u(tc), 1.0);
    u.emplace_back(tf - 1, tc - 1, 1.0);
  }
  for (int k = 1; k < K; ++k) {
    t.emplace_back(fine.copy(k), coarse.copy(k), 1.0);
    u.emplace_back(N + k - 1, K * M_c + k - 1, 1.0);
  }
  GridTransfer g;
  g.T = from_triplets(fine.num_vars(), coarse.num_vars(), t);
  g.U = from_triplets(N + K - 1, K * M_c + K - 1, u);
  g.fine_local_rows = N;
  g.coarse_local_rows = static_cast<Index>(K) * M_c;
  g.fine_level = M;
  g.coarse_level = M_c;
  return g;
}

GridTransfer build_transfer_spatial(int P, int M, int M_c) {
  using Side = SpatialLayout::Side;
  check_divides(M, M_c);
  if (P < 1) throw Error(ErrorKind::InvalidArgument, "P must be positive");
  const int r = M / M_c;
  const SpatialLayout fine(P, M);
  const SpatialLayout coarse(P, M_c);
  const int L = P * M;
  const Index fine_nodes = static_cast<Index>(L) * L;
  const Index coarse_nodes = static_cast<Index>(P * M_c) * (P * M_c);
  auto to_coarse = [&](int i) {
    const int n = (i - 1) / M;
    return n * M_c + (i - 1 - n * M) / r + 1;
  };

  std::vector<Triplet> t;
  std::vector<Triplet> u;
  for (int i = 1; i <= L; ++i)
    for (int j = 1; j <= L; ++j) {
      const int ic = to_coarse(i);
      const int jc = to_coarse(j);
      t.emplace_back(fine.p(i, j), coarse.p(ic, jc), 1.0);
      t.emplace_back(fine.u(i, j), coarse.u(ic, jc), 1.0);
      u.emplace_back(fine.balance_row(i, j), coarse.balance_row(ic, jc), 1.0);
    }
  for (int n = 0; n < P; ++n)
    for (int m = 0; m < P; ++m)
      for (int side = 0; side < 4; ++side) {
        const auto sd = static_cast<Side>(side);
        if (!fine.has_side(n, m, sd)) continue;
        for (int s = 1; s <= M; ++s) {
          const int sc = (s - 1) / r + 1;
          t.emplace_back(fine.ghost(n, m, sd, s), coarse.ghost(n, m, sd, sc), 1.0);
          u.emplace_back(fine_nodes + fine.ghost_row(n, m, sd, s), coarse_nodes + coarse.ghost_row(n, m, sd, sc), 1.0);
        }
      }
  GridTransfer g;
  g.T = from_triplets(fine.num_vars(), coarse.num_vars(), t);
  g.U = from_triplets(fine_nodes + fine.num_coupling_rows(), coarse_nodes + coarse.num_coupling_rows(), u);
  g.fine_local_rows = fine_nodes;
  g.coarse_local_rows = coarse_nodes;
  g.fine_level = M;
  g.coarse_level = M_c;
  return g;
}

GridTransfer identity_transfer(const CoupledQP& p) {
  GridTransfer g;
  g.T = identity(p.num_vars());
  g.U = identity(p.num_constraints());
  g.fine_local_rows = g.coarse_local_rows = p.num_local_rows();
  return g;
}

CoupledQP coarsen_problem(const CoupledQP& p, const GridTransfer& t) {
  p.check_dimensions();
  if (t.T.rows() != p.num_vars())
    throw Error(ErrorKind::DimensionMismatch, "T is " + dims(t.T) + " but the problem has " + std::to_string(p.num_vars()) + " variables");
  if (t.U.rows() != p.num_constraints() || t.fine_local_rows != p.num_local_rows())
    throw Error(ErrorKind::DimensionMismatch, "U is " + dims(t.U) + " but the problem has " +
                                                  std::to_string(p.num_local_rows()) + " + " +
                                                  std::to_string(p.num_coupling_rows()) + " constraints");
  t.validate();
  const Index cl = t.coarse_local_rows;
  const Index cc = t.U.cols() - cl;
  const SparseMatrix UA = t.U.topLeftCorner(p.num_local_rows(), cl);
  const SparseMatrix UP = t.U.bottomRightCorner(p.num_coupling_rows(), cc);

  CoupledQP c;
  c.Q = SparseMatrix(t.T.transpose() * p.Q * t.T);
  c.c = t.T.transpose() * p.c;
  c.A = SparseMatrix(UA.transpose() * p.A * t.T);
  c.B = SparseMatrix(UA.transpose() * p.B);
  c.Pi = SparseMatrix(UP.transpose() * p.Pi * t.T);
  c.d = p.d;
  try {
    c.check_invariants();
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::RankDeficient) throw Error(ErrorKind::InfeasibleCoarse, e.what());
    throw;
  }
  return c;
}

FineWarmStart prolong(const GridTransfer& t, const KKTSolution& coarse) {
  if (coarse.primal.size() != t.T.cols())
    throw Error(ErrorKind::DimensionMismatch, "coarse primal has length " + std::to_string(coarse.primal.size()) +
                                                  ", T has " + std::to_string(t.T.cols()) + " columns");
  if (coarse.dual.size() != t.U.cols())
    throw Error(ErrorKind::DimensionMismatch, "coarse dual has length " + std::to_string(coarse.dual.size()) +
                                                  ", U has " + std::to_string(t.U.cols()) + " columns");
  return {t.T * coarse.primal, t.U * coarse.dual};
}

Vector restrict_primal(const GridTransfer& t, const Vector& z) {
  if (z.size() != t.T.rows()) throw Error(ErrorKind::DimensionMismatch, "primal does not match T");
  return normal_restrict(t.T, z);
}

Vector restrict_dual(const GridTransfer& t, const Vector& y) {
  if (y.size() != t.U.rows()) throw Error(ErrorKind::DimensionMismatch, "dual does not match U");
  return normal_restrict(t.U, y);
}

Vector original_dual(const LiftedProblem& lifted, const Vector& w) {
  if (w.size() != lifted.state_dim()) throw Error(ErrorKind::DimensionMismatch, "stacked state has the wrong length");
  Vector dual = Vector::Zero(lifted.num_original_rows);
  const auto off = lifted.state_offsets();
  for (std::size_t k = 0; k < lifted.blocks.size(); ++k) {
    const auto& b = lifted.blocks[k];
    Index pos = off[k] + b.num_vars();
    for (Index row : b.local_rows) dual(row) = w(pos++);
    for (const auto& cr : b.coupling_rows) {
      if (cr.kind == CouplingKind::Explicit) dual(lifted.num_original_pi_offset + cr.source) = w(pos);
      ++pos;
    }
  }
  return dual;
}

void CoarseningSchedule::validate(int M) const {
  if (sweeps_per_level < 1) throw Error(ErrorKind::InvalidArgument, "sweeps_per_level must be positive");
  for (std::size_t i = 0; i < levels.size(); ++i) {
    check_divides(M, levels[i]);
    if (i > 0 && levels[i] <= levels[i - 1])
      throw Error(ErrorKind::InvalidArgument, "coarsening levels must be strictly increasing");
  }
}

CoarseLevelFactory case_level_factory(const CaseMetadata& meta) {
  if (meta.kind == "temporal") {
    const int K = meta.K;
    const int M = meta.M;
    return [K, M](int M_c) {
      TemporalCaseSpec spec;
      spec.K = K;
      spec.M = M_c;
      spec.disturbance_scale = 0.0;
      return CoarseLevel{build_transfer_temporal(K, M, M_c), build_temporal(spec).partitioning};
    };
  }
  if (meta.kind == "spatial") {
    const int P = meta.P;
    const int M = meta.M;
    return [P, M](int M_c) {
      SpatialCaseSpec spec;
      spec.P = P;
      spec.M = M_c;
      spec.disturbance_scale = 0.0;
      return CoarseLevel{build_transfer_spatial(P, M, M_c), build_spatial(spec).partitioning};
    };
  }
  throw Error(ErrorKind::MissingMetadata, "no coarsening rule for case kind '" + meta.kind + "'");
}

Vector coarse_warm_start(const CoupledQP& p, const LiftedProblem& lifted, const GridTransfer& t) {
  const CoupledQP coarse = coarsen_problem(p, t);
  const FineWarmStart fine = prolong(t, solve_centralized(coarse));
  return lifted.stacked_from_original(fine.primal, fine.dual);
}

GsResult run_multigrid(const CoupledQP& p, const Coordinator& coord, int M, const CoarseningSchedule& schedule,
                       const OrderingSchedule& order, const CoarseLevelFactory& factory,
                       const CoordinationState& initial, const MultigridOptions& options) {
  schedule.validate(M);
  const GsOptions& gs = options.gs;
  if (!(gs.tol > 0.0)) throw Error(ErrorKind::InvalidArgument, "tol must be positive");
  const LiftedProblem& lifted = coord.lifted();
  order.validate(lifted);
  std::optional<Vector> oracle_primal;
  if (gs.oracle) {
    if (gs.oracle->size() != lifted.state_dim()) throw Error(ErrorKind::DimensionMismatch, "oracle has the wrong dimension");
    oracle_primal = lifted.owned_primal(*gs.oracle);
  }
  const auto t0 = std::chrono::steady_clock::now();

  GsResult res;
  res.state = initial;
  Vector w = initial.stacked();
  auto record = [&](const Vector& cur, double diff) {
    TraceEntry e;
    e.step = res.trace.size();
    e.step_difference = diff;
    if (gs.oracle) {
      e.error_w = (cur - *gs.oracle).norm();
      e.error_primal_owned = (lifted.owned_primal(cur) - *oracle_primal).norm();
    } else {
      e.error_w = diff;
      e.error_primal_owned = std::numeric_limits<double>::quiet_NaN();
    }
    e.wall_time_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    res.trace.push_back(e);
  };
  record(w, 0.0);

  for (int M_c : schedule.levels) {
    if (M_c == M) continue;
    if (res.trace.size() > gs.max_steps) break;
    const CoarseLevel level = factory(M_c);
    const CoupledQP coarse = coarsen_problem(p, level.transfer);
    KKTSolution coarse_sol;
    if (options.coarse_solver == CoarseSolver::Centralized) {
      coarse_sol = solve_centralized(coarse);
    } else {
      // one coarse sweep started from the restricted running iterate
      const Coordinator coarse_coord(lift_explicit(coarse, level.partitioning, lifted.split_weight));
      const LiftedProblem& cl = coarse_coord.lifted();
      const Vector zc = restrict_primal(level.transfer, lifted.owned_primal(w));
      const Vector yc = restrict_dual(level.transfer, original_dual(lifted, w));
      const auto start = CoordinationState::from_stacked(cl, cl.stacked_from_original(zc, yc));
      const Vector wc = coarse_coord.sweep(start, order).stacked();
      coarse_sol.primal = cl.owned_primal(wc);
      coarse_sol.dual = original_dual(cl, wc);
    }
    const FineWarmStart fine = prolong(level.transfer, coarse_sol);
    res.state = CoordinationState::from_stacked(lifted, lifted.stacked_from_original(fine.primal, fine.dual));
    for (int s = 0; s < schedule.sweeps_per_level && res.trace.size() <= gs.max_steps; ++s) {
      res.state = coord.sweep(res.state, order, gs.execution);
      Vector next = res.state.stacked();
      const double diff = (next - w).lpNorm<Eigen::Infinity>();
      w = std::move(next);
      record(w, diff);
    }
  }

  while (res.trace.size() <= gs.max_steps) {
    res.state = coord.sweep(res.state, order, gs.execution);
    Vector next = res.state.stacked();
    const double diff = (next - w).lpNorm<Eigen::Infinity>();
    w = std::move(next);
    record(w, diff);
    if (diff <= gs.tol) {
      res.converged = true;
      break;
    }
  }

  if (gs.spectral_radius) {
    const double e0 = res.trace.front().error_w;
    for (auto& e : res.trace) e.rho_bound = e0 * std::pow(*gs.spectral_radius, static_cast<double>(e.step));
  }
  res.state.step = res.trace.back().step;
  return res;
}

}  // namespace mgcoord
