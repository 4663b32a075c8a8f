#include "mgcoord/lifting.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

namespace mgcoord {
namespace {

void add_dense(std::vector<Triplet>& trip, const Matrix& m, Index row0, Index col0) {
  for (Index j = 0; j < m.cols(); ++j)
    for (Index i = 0; i < m.rows(); ++i)
      if (m(i, j) != 0.0) trip.emplace_back(row0 + i, col0 + j, m(i, j));
}

// Position of every original variable inside its owning partition.
std::vector<Index> owned_positions(const Partitioning& part) {
  std::vector<Index> pos(part.assignment.size());
  std::vector<Index> count(static_cast<std::size_t>(part.num_partitions), 0);
  for (std::size_t i = 0; i < part.assignment.size(); ++i)
    pos[i] = count[static_cast<std::size_t>(part.assignment[i])]++;
  return pos;
}

Index local_dup_index(const PartitionBlock& b, Index original) {
  auto it = std::lower_bound(b.duplicates.begin(), b.duplicates.end(), original);
  return b.num_owned() + static_cast<Index>(it - b.duplicates.begin());
}

}  // namespace

Partitioning Partitioning::contiguous(Index n, int K) {
  if (K < 1 || n < K) throw Error(ErrorKind::InvalidArgument, "need 1 <= K <= n");
  Partitioning part;
  part.num_partitions = K;
  part.assignment.resize(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) part.assignment[static_cast<std::size_t>(i)] = static_cast<int>((i * K) / n);
  return part;
}

void Partitioning::validate(Index num_vars) const {
  if (num_partitions < 1) throw Error(ErrorKind::InvalidArgument, "partitioning has no partitions");
  if (static_cast<Index>(assignment.size()) != num_vars)
    throw Error(ErrorKind::DimensionMismatch, "partitioning covers " + std::to_string(assignment.size()) +
                                                  " variables, problem has " + std::to_string(num_vars));
  std::vector<int> count(static_cast<std::size_t>(num_partitions), 0);
  for (int a : assignment) {
    if (a < 0 || a >= num_partitions)
      throw Error(ErrorKind::UnknownPartition, "assignment to partition " + std::to_string(a));
    ++count[static_cast<std::size_t>(a)];
  }
  for (int k = 0; k < num_partitions; ++k)
    if (count[static_cast<std::size_t>(k)] == 0)
      throw Error(ErrorKind::InvalidArgument, "partition " + std::to_string(k) + " is empty");
  for (int o : coupling_owner)
    if (o < 0 || o >= num_partitions)
      throw Error(ErrorKind::UnknownPartition, "coupling row owner " + std::to_string(o));
}

std::vector<Index> Partitioning::members(int k) const {
  if (k < 0 || k >= num_partitions) throw Error(ErrorKind::UnknownPartition, "partition " + std::to_string(k));
  std::vector<Index> out;
  for (std::size_t i = 0; i < assignment.size(); ++i)
    if (assignment[i] == k) out.push_back(static_cast<Index>(i));
  return out;
}

Index PartitionBlock::original_index(Index local) const {
  if (local < num_owned()) return owned[static_cast<std::size_t>(local)];
  return duplicates[static_cast<std::size_t>(local - num_owned())];
}

Index LiftedProblem::state_dim() const {
  Index n = 0;
  for (const auto& b : blocks) n += b.state_size();
  return n;
}

std::vector<Index> LiftedProblem::state_offsets() const {
  std::vector<Index> off(blocks.size() + 1, 0);
  for (std::size_t k = 0; k < blocks.size(); ++k) off[k + 1] = off[k] + blocks[k].state_size();
  return off;
}

bool LiftedProblem::coupled(int k, int kp) const {
  const auto& a = blocks[static_cast<std::size_t>(k)].coupling_other;
  const auto& b = blocks[static_cast<std::size_t>(kp)].coupling_other;
  return a.count(kp) > 0 || b.count(k) > 0;
}

std::vector<std::vector<int>> LiftedProblem::neighbors() const {
  std::vector<std::set<int>> sets(blocks.size());
  for (std::size_t k = 0; k < blocks.size(); ++k)
    for (const auto& [kp, m] : blocks[k].coupling_other) {
      sets[k].insert(kp);
      sets[static_cast<std::size_t>(kp)].insert(static_cast<int>(k));
    }
  std::vector<std::vector<int>> out;
  for (auto& s : sets) out.emplace_back(s.begin(), s.end());
  return out;
}

Vector LiftedProblem::owned_primal(const Vector& w) const {
  Vector z(num_original_vars);
  const auto off = state_offsets();
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    const auto& b = blocks[k];
    for (Index i = 0; i < b.num_owned(); ++i) z(b.owned[static_cast<std::size_t>(i)]) = w(off[k] + i);
  }
  return z;
}

double LiftedProblem::duplicate_mismatch(const Vector& w) const {
  const Vector z = owned_primal(w);
  const auto off = state_offsets();
  double worst = 0.0;
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    const auto& b = blocks[k];
    for (std::size_t d = 0; d < b.duplicates.size(); ++d)
      worst = std::max(worst, std::abs(w(off[k] + b.num_owned() + static_cast<Index>(d)) - z(b.duplicates[d])));
  }
  return worst;
}

Vector LiftedProblem::stacked_from_original(const Vector& primal, const Vector& dual) const {
  if (primal.size() != num_original_vars)
    throw Error(ErrorKind::DimensionMismatch, "primal length does not match the lifted problem");
  if (dual.size() != num_original_rows)
    throw Error(ErrorKind::DimensionMismatch, "dual length does not match the lifted problem");
  Vector w = Vector::Zero(state_dim());
  const auto off = state_offsets();
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    const auto& b = blocks[k];
    Index pos = off[k];
    Vector z(b.num_vars());
    for (Index i = 0; i < b.num_vars(); ++i) z(i) = w(pos++) = primal(b.original_index(i));
    Vector nu(b.num_local());
    for (std::size_t r = 0; r < b.local_rows.size(); ++r) nu(static_cast<Index>(r)) = w(pos++) = dual(b.local_rows[r]);
    // A copy's only coupling row is its own, so its stationarity row fixes that dual.
    const Vector grad = b.c - b.Q * z - b.local_A.transpose() * nu;
    for (const auto& cr : b.coupling_rows) {
      if (cr.kind == CouplingKind::Explicit) {
        w(pos++) = dual(num_original_pi_offset + cr.source);
      } else {
        w(pos++) = grad(local_dup_index(b, cr.source));
      }
    }
  }
  return w;
}

LiftedSolution solve_lifted(const LiftedProblem& lifted) {
  const std::size_t K = lifted.blocks.size();
  std::vector<Index> zoff(K + 1, 0);
  std::vector<Index> roff(K + 1, 0);
  for (std::size_t k = 0; k < K; ++k) {
    zoff[k + 1] = zoff[k] + lifted.blocks[k].num_vars();
    roff[k + 1] = roff[k] + lifted.blocks[k].num_local() + lifted.blocks[k].num_coupling();
  }
  const Index n = zoff[K];
  const Index m = roff[K];

  std::vector<Triplet> htrip;
  std::vector<Triplet> jtrip;
  Vector g(n);
  Vector h = Vector::Zero(m);
  for (std::size_t k = 0; k < K; ++k) {
    const auto& b = lifted.blocks[k];
    add_dense(htrip, b.Q, zoff[k], zoff[k]);
    g.segment(zoff[k], b.num_vars()) = b.c;
    add_dense(jtrip, b.local_A, roff[k], zoff[k]);
    h.segment(roff[k], b.num_local()) = b.local_rhs;
    const Index crow = roff[k] + b.num_local();
    add_dense(jtrip, b.coupling_self, crow, zoff[k]);
    for (const auto& [kp, pm] : b.coupling_other) add_dense(jtrip, pm, crow, zoff[static_cast<std::size_t>(kp)]);
  }
  SparseMatrix H(n, n);
  H.setFromTriplets(htrip.begin(), htrip.end());
  SparseMatrix J(m, n);
  J.setFromTriplets(jtrip.begin(), jtrip.end());

  const KKTSolution sol = solve_saddle(H, J, g, h);

  LiftedSolution out;
  out.residual_norm = sol.residual_norm;
  out.w.resize(lifted.state_dim());
  Index pos = 0;
  for (std::size_t k = 0; k < K; ++k) {
    const auto& b = lifted.blocks[k];
    out.w.segment(pos, b.num_vars()) = sol.primal.segment(zoff[k], b.num_vars());
    pos += b.num_vars();
    const Index rows = b.num_local() + b.num_coupling();
    out.w.segment(pos, rows) = sol.dual.segment(roff[k], rows);
    pos += rows;
  }
  return out;
}

std::vector<Index> coupled_neighbors(const SparseMatrix& Q, const Partitioning& part, int k) {
  if (k < 0 || k >= part.num_partitions) throw Error(ErrorKind::UnknownPartition, "partition " + std::to_string(k));
  if (static_cast<Index>(part.assignment.size()) != Q.rows())
    throw Error(ErrorKind::DimensionMismatch, "partitioning does not cover Q");
  std::set<Index> out;
  for (Index col = 0; col < Q.outerSize(); ++col)
    for (SparseMatrix::InnerIterator it(Q, col); it; ++it) {
      if (it.value() == 0.0) continue;
      const int pr = part.assignment[static_cast<std::size_t>(it.row())];
      const int pc = part.assignment[static_cast<std::size_t>(it.col())];
      if (pr == k && pc != k) out.insert(it.col());
      if (pc == k && pr != k) out.insert(it.row());
    }
  return {out.begin(), out.end()};
}

std::vector<Index> coupled_neighbors(const UnconstrainedQP& q, const Partitioning& part, int k) {
  return coupled_neighbors(SparseMatrix(q.Q.sparseView(0.0, 0.0)), part, k);
}

LiftedProblem lift_explicit(const CoupledQP& p, const Partitioning& part, double weight) {
  p.check_dimensions();
  part.validate(p.num_vars());
  if (!(weight >= 0.0 && weight <= 1.0)) throw Error(ErrorKind::InvalidArgument, "split weight must lie in [0, 1]");
  if (!part.coupling_owner.empty() && static_cast<Index>(part.coupling_owner.size()) != p.Pi.rows())
    throw Error(ErrorKind::DimensionMismatch, "coupling_owner must list one partition per row of Pi");

  const int K = part.num_partitions;
  const auto& asg = part.assignment;
  const std::vector<Index> pos = owned_positions(part);

  LiftedProblem lifted;
  lifted.num_original_vars = p.num_vars();
  lifted.num_original_rows = p.num_constraints();
  lifted.num_original_pi_offset = p.A.rows();
  lifted.split_weight = weight;
  lifted.blocks.resize(static_cast<std::size_t>(K));

  for (int k = 0; k < K; ++k) {
    auto& b = lifted.blocks[static_cast<std::size_t>(k)];
    b.owned = part.members(k);
    b.duplicates = coupled_neighbors(p.Q, part, k);
  }

  // Row-major copies make per-row scans cheap.
  using RowMajor = Eigen::SparseMatrix<double, Eigen::RowMajor>;
  const RowMajor q_rows(p.Q);
  const RowMajor a_rows(p.A);
  const RowMajor pi_rows(p.Pi);
  const Vector rhs = p.constraint_rhs();

  // Quadratic blocks with the weighted split of cross terms.
  for (int k = 0; k < K; ++k) {
    auto& b = lifted.blocks[static_cast<std::size_t>(k)];
    b.Q = Matrix::Zero(b.num_vars(), b.num_vars());
    b.c = Vector::Zero(b.num_vars());
    for (Index li = 0; li < b.num_owned(); ++li) {
      const Index i = b.owned[static_cast<std::size_t>(li)];
      b.c(li) = p.c(i);
      for (RowMajor::InnerIterator it(q_rows, i); it; ++it) {
        const Index j = it.col();
        const int kj = asg[static_cast<std::size_t>(j)];
        if (kj == k) {
          b.Q(li, pos[static_cast<std::size_t>(j)]) = it.value();
        } else {
          const double share = k < kj ? weight : 1.0 - weight;
          const Index lj = local_dup_index(b, j);
          b.Q(li, lj) = share * it.value();
          b.Q(lj, li) = share * it.value();
        }
      }
    }
  }

  // Partition-local constraints (rows of A, single-partition rows of Pi) and
  // coupling rows (multi-partition rows of Pi).
  std::vector<std::vector<std::pair<Index, std::vector<std::pair<Index, double>>>>> local(
      static_cast<std::size_t>(K));
  struct PendingCoupling {
    Index pi_row;
    std::vector<std::pair<Index, double>> entries;
  };
  std::vector<std::vector<PendingCoupling>> explicit_rows(static_cast<std::size_t>(K));

  for (Index r = 0; r < a_rows.rows(); ++r) {
    std::vector<std::pair<Index, double>> entries;
    std::set<int> touched;
    for (RowMajor::InnerIterator it(a_rows, r); it; ++it) {
      if (it.value() == 0.0) continue;
      entries.emplace_back(it.col(), it.value());
      touched.insert(asg[static_cast<std::size_t>(it.col())]);
    }
    if (touched.empty()) throw Error(ErrorKind::InvalidArgument, "row " + std::to_string(r) + " of A is empty");
    if (touched.size() > 1)
      throw Error(ErrorKind::NonSeparableConstraint,
                  "row " + std::to_string(r) + " of A spans partitions " + std::to_string(*touched.begin()) +
                      " and " + std::to_string(*std::next(touched.begin())));
    local[static_cast<std::size_t>(*touched.begin())].emplace_back(r, std::move(entries));
  }
  for (Index r = 0; r < pi_rows.rows(); ++r) {
    std::vector<std::pair<Index, double>> entries;
    std::set<int> touched;
    int first = -1;
    for (RowMajor::InnerIterator it(pi_rows, r); it; ++it) {
      if (it.value() == 0.0) continue;
      entries.emplace_back(it.col(), it.value());
      const int kp = asg[static_cast<std::size_t>(it.col())];
      touched.insert(kp);
      if (first < 0) first = kp;
    }
    if (touched.empty()) throw Error(ErrorKind::InvalidArgument, "row " + std::to_string(r) + " of Pi is empty");
    if (touched.size() == 1) {
      local[static_cast<std::size_t>(first)].emplace_back(p.A.rows() + r, std::move(entries));
      continue;
    }
    const int owner = part.coupling_owner.empty() ? first : part.coupling_owner[static_cast<std::size_t>(r)];
    if (touched.count(owner) == 0)
      throw Error(ErrorKind::InvalidArgument,
                  "owner " + std::to_string(owner) + " of Pi row " + std::to_string(r) + " has no entry in it");
    explicit_rows[static_cast<std::size_t>(owner)].push_back({r, std::move(entries)});
  }

  for (int k = 0; k < K; ++k) {
    auto& b = lifted.blocks[static_cast<std::size_t>(k)];
    const auto& rows = local[static_cast<std::size_t>(k)];
    b.local_A = Matrix::Zero(static_cast<Index>(rows.size()), b.num_vars());
    b.local_rhs = Vector::Zero(static_cast<Index>(rows.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const Index rr = static_cast<Index>(r);
      b.local_rows.push_back(rows[r].first);
      b.local_rhs(rr) = rhs(rows[r].first);
      for (const auto& [col, v] : rows[r].second) b.local_A(rr, pos[static_cast<std::size_t>(col)]) += v;
    }

    const auto& ex = explicit_rows[static_cast<std::size_t>(k)];
    const Index ncoup = static_cast<Index>(ex.size() + b.duplicates.size());
    b.coupling_self = Matrix::Zero(ncoup, b.num_vars());
    auto other = [&](int kp) -> Matrix& {
      auto it = b.coupling_other.find(kp);
      if (it == b.coupling_other.end())
        it = b.coupling_other
                 .emplace(kp, Matrix::Zero(ncoup, lifted.blocks[static_cast<std::size_t>(kp)].num_vars()))
                 .first;
      return it->second;
    };
    Index row = 0;
    for (const auto& pc : ex) {
      for (const auto& [col, v] : pc.entries) {
        const int kc = asg[static_cast<std::size_t>(col)];
        if (kc == k)
          b.coupling_self(row, pos[static_cast<std::size_t>(col)]) += v;
        else
          other(kc)(row, pos[static_cast<std::size_t>(col)]) += v;
      }
      b.coupling_rows.push_back({CouplingKind::Explicit, pc.pi_row});
      ++row;
    }
    for (std::size_t d = 0; d < b.duplicates.size(); ++d) {
      const Index j = b.duplicates[d];
      b.coupling_self(row, b.num_owned() + static_cast<Index>(d)) = 1.0;
      other(asg[static_cast<std::size_t>(j)])(row, pos[static_cast<std::size_t>(j)]) = -1.0;
      b.coupling_rows.push_back({CouplingKind::Duplicate, j});
      ++row;
    }
  }
  return lifted;
}

LiftedProblem build_lifted(const UnconstrainedQP& q, const Partitioning& part, double weight) {
  CoupledQP p;
  p.Q = q.Q.sparseView(0.0, 0.0);
  p.c = q.c;
  p.A.resize(0, q.size());
  p.B.resize(0, 0);
  p.Pi.resize(0, q.size());
  p.d.resize(0);
  return lift_explicit(p, part, weight);
}

namespace {

LiftReport compare(const Vector& reference, const LiftedProblem& lifted, double threshold, bool loosened) {
  const LiftedSolution sol = solve_lifted(lifted);
  LiftReport report;
  report.threshold = threshold;
  report.loosened = loosened;
  report.primal_discrepancy = (lifted.owned_primal(sol.w) - reference).lpNorm<Eigen::Infinity>();
  report.duplicate_mismatch = lifted.duplicate_mismatch(sol.w);
  report.passed = report.primal_discrepancy <= threshold && report.duplicate_mismatch <= threshold;
  return report;
}

// Relative eigenvalue spread below which the default threshold is relaxed.
constexpr double kIllConditioned = 1e-4;

bool ill_conditioned(const Matrix& Q) {
  if (Q.rows() == 0 || Q.rows() > 2000) return false;
  Eigen::SelfAdjointEigenSolver<Matrix> es(Q, Eigen::EigenvaluesOnly);
  const Vector ev = es.eigenvalues();
  return ev.minCoeff() < kIllConditioned * ev.cwiseAbs().maxCoeff();
}

}  // namespace

LiftReport verify_lift(const UnconstrainedQP& q, const LiftedProblem& lifted) {
  const bool loose = ill_conditioned(q.Q);
  // same direct solver as the lifted system, so K = 1 reproduces it bit for bit
  const SparseMatrix none(0, q.size());
  const Vector reference = solve_saddle(SparseMatrix(q.Q.sparseView(0.0, 0.0)), none, q.c, Vector()).primal;
  return compare(reference, lifted, loose ? 1e-6 : 1e-8, loose);
}

LiftReport verify_lift(const CoupledQP& p, const LiftedProblem& lifted) {
  // conditioning of the curvature on the feasible subspace
  const bool loose = p.num_vars() <= 2000 && ill_conditioned(reduce_to_unconstrained(p).qp.Q);
  return compare(solve_centralized(p).primal, lifted, loose ? 1e-6 : 1e-8, loose);
}

}  // namespace mgcoord
