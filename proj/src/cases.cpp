#include "mgcoord/cases.hpp"

#include <cmath>
#include <random>

namespace mgcoord {

void TemporalCaseSpec::validate() const {
  if (K < 1 || M < 1) throw Error(ErrorKind::InvalidArgument, "temporal case needs K >= 1 and M >= 1");
  if (!(delta > 0.0)) throw Error(ErrorKind::InvalidArgument, "temporal case needs delta > 0");
}

void SpatialCaseSpec::validate() const {
  if (P < 1 || M < 1) throw Error(ErrorKind::InvalidArgument, "spatial case needs P >= 1 and M >= 1");
  if (!(D > 0.0)) throw Error(ErrorKind::InvalidArgument, "spatial case needs D > 0");
  if (!(X > 0.0) || !(Y > 0.0)) throw Error(ErrorKind::InvalidArgument, "spatial domain must have positive size");
  if (!(gauss_sigma > 0.0)) throw Error(ErrorKind::InvalidArgument, "Gaussian width must be positive");
}

Index TemporalLayout::x(int t) const {
  const int k = (t - 1) / M;
  return partition_offset(k) + (k > 0 ? 1 : 0) + 2 * static_cast<Index>(t - 1 - k * M);
}

SpatialLayout::SpatialLayout(int P_, int M_) : P(P_), M(M_) {
  const int parts = P * P;
  var_offset_.assign(static_cast<std::size_t>(parts) + 1, 0);
  ghost_row_offset_.assign(static_cast<std::size_t>(parts) + 1, 0);
  side_slot_.assign(static_cast<std::size_t>(parts), {-1, -1, -1, -1});
  for (int n = 0; n < P; ++n)
    for (int m = 0; m < P; ++m) {
      const auto q = static_cast<std::size_t>(grid_index(n, m, P));
      Index ghosts = 0;
      for (int side = 0; side < 4; ++side)
        if (has_side(n, m, static_cast<Side>(side))) {
          side_slot_[q][static_cast<std::size_t>(side)] = ghosts;
          ghosts += M;
        }
      var_offset_[q + 1] = var_offset_[q] + 2 * static_cast<Index>(M) * M + ghosts;
      ghost_row_offset_[q + 1] = ghost_row_offset_[q] + ghosts;
    }
}

bool SpatialLayout::has_side(int n, int m, Side side) const {
  switch (side) {
    case West: return n > 0;
    case East: return n < P - 1;
    case South: return m > 0;
    case North: return m < P - 1;
  }
  return false;
}

Index SpatialLayout::p(int i, int j) const {
  const int a = (i - 1) % M;
  const int b = (j - 1) % M;
  return var_offset_[static_cast<std::size_t>(partition_of(i, j))] + 2 * static_cast<Index>(a * M + b);
}

Index SpatialLayout::balance_row(int i, int j) const {
  const int a = (i - 1) % M;
  const int b = (j - 1) % M;
  return static_cast<Index>(partition_of(i, j)) * M * M + a * M + b;
}

Index SpatialLayout::ghost(int n, int m, Side side, int s) const {
  const auto q = static_cast<std::size_t>(grid_index(n, m, P));
  const Index slot = side_slot_[q][static_cast<std::size_t>(side)];
  if (slot < 0) return -1;
  return var_offset_[q] + 2 * static_cast<Index>(M) * M + slot + s - 1;
}

Index SpatialLayout::ghost_row(int n, int m, Side side, int s) const {
  const auto q = static_cast<std::size_t>(grid_index(n, m, P));
  const Index slot = side_slot_[q][static_cast<std::size_t>(side)];
  if (slot < 0) return -1;
  return ghost_row_offset_[q] + slot + s - 1;
}

std::array<int, 2> SpatialLayout::ghost_source(int n, int m, Side side, int s) const {
  switch (side) {
    case West: return {n * M, m * M + s};
    case East: return {(n + 1) * M + 1, m * M + s};
    case South: return {n * M + s, m * M};
    case North: return {n * M + s, (m + 1) * M + 1};
  }
  return {0, 0};
}

std::vector<Index> CaseMetadata::node_primal_index() const {
  std::vector<Index> out;
  out.reserve(2 * state_index.size());
  for (std::size_t i = 0; i < state_index.size(); ++i) {
    out.push_back(state_index[i]);
    out.push_back(control_index[i]);
  }
  return out;
}

double temporal_disturbance(const TemporalCaseSpec& spec, int i) {
  const double N = spec.N();
  return spec.disturbance_scale * (spec.a1 * std::sin(spec.w1 * i / N) + spec.a2 * std::sin(spec.w2 * i / N));
}

Vector temporal_disturbance_vector(const TemporalCaseSpec& spec) {
  const int N = spec.N();
  Vector d(N);
  if (spec.random_seed) {
    std::mt19937_64 rng(*spec.random_seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    for (int t = 0; t < N; ++t) d(t) = spec.disturbance_scale * dist(rng);
  } else {
    for (int t = 1; t <= N; ++t) d(t - 1) = temporal_disturbance(spec, t);
  }
  return d;
}

CaseInstance build_temporal(const TemporalCaseSpec& spec) {
  spec.validate();
  const int K = spec.K;
  const int M = spec.M;
  const int N = spec.N();
  const TemporalLayout lay{K, M};
  const Index n = lay.num_vars();

  CaseInstance inst;
  CoupledQP& qp = inst.qp;
  qp.d = temporal_disturbance_vector(spec);
  qp.c = Vector::Zero(n);

  std::vector<Triplet> q;
  std::vector<Triplet> a;
  std::vector<Triplet> b;
  std::vector<Triplet> pi;
  for (int t = 1; t <= N; ++t) {
    q.emplace_back(lay.x(t), lay.x(t), 2.0);
    q.emplace_back(lay.u(t), lay.u(t), 2.0);

    const Index row = t - 1;
    a.emplace_back(row, lay.x(t), 1.0);
    if (t > 1) {
      const bool first_of_partition = (t - 1) % M == 0;
      a.emplace_back(row, first_of_partition ? lay.copy((t - 1) / M) : lay.x(t - 1), -1.0);
    }
    a.emplace_back(row, lay.u(t), -spec.delta);
    b.emplace_back(row, row, -spec.delta);
  }
  for (int k = 1; k < K; ++k) {
    pi.emplace_back(k - 1, lay.copy(k), 1.0);
    pi.emplace_back(k - 1, lay.x(k * M), -1.0);
  }
  qp.Q.resize(n, n);
  qp.Q.setFromTriplets(q.begin(), q.end());
  qp.A.resize(N, n);
  qp.A.setFromTriplets(a.begin(), a.end());
  qp.B.resize(N, N);
  qp.B.setFromTriplets(b.begin(), b.end());
  qp.Pi.resize(K - 1, n);
  qp.Pi.setFromTriplets(pi.begin(), pi.end());

  Partitioning& part = inst.partitioning;
  part.num_partitions = K;
  part.assignment.resize(static_cast<std::size_t>(n));
  for (int k = 0; k < K; ++k) {
    const Index end = k + 1 < K ? lay.partition_offset(k + 1) : n;
    for (Index v = lay.partition_offset(k); v < end; ++v) part.assignment[static_cast<std::size_t>(v)] = k;
  }
  for (int k = 1; k < K; ++k) part.coupling_owner.push_back(k);

  CaseMetadata& meta = inst.metadata;
  meta.kind = "temporal";
  meta.K = K;
  meta.M = M;
  meta.structure = PartitionStructure::chain(K);
  meta.partition_disturbance_l1.assign(static_cast<std::size_t>(K), 0.0);
  for (int t = 1; t <= N; ++t) {
    meta.partition_disturbance_l1[static_cast<std::size_t>((t - 1) / M)] += std::abs(qp.d(t - 1));
    meta.state_index.push_back(lay.x(t));
    meta.control_index.push_back(lay.u(t));
  }
  return inst;
}

double spatial_disturbance(const SpatialCaseSpec& spec, double x, double y) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  const double dx = x - spec.gauss_x0 * spec.X;
  const double dy = y - spec.gauss_y0 * spec.Y;
  const double sigma = spec.gauss_sigma * spec.X;
  const double wave = spec.sin_amplitude * std::sin(two_pi * x / spec.X) * std::sin(two_pi * y / spec.Y);
  const double bump = spec.gauss_amplitude * std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
  return spec.disturbance_scale * (wave + bump);
}

double spatial_disturbance(const SpatialCaseSpec& spec, int i, int j) {
  const double h = 1.0 / (spec.L() + 1);
  return spatial_disturbance(spec, i * h * spec.X, j * h * spec.Y);
}

CaseInstance build_spatial(const SpatialCaseSpec& spec) {
  spec.validate();
  using Side = SpatialLayout::Side;
  const int P = spec.P;
  const int M = spec.M;
  const int L = spec.L();
  const SpatialLayout lay(P, M);
  const Index n = lay.num_vars();
  const Index N = spec.N();
  auto node = [L](int i, int j) { return static_cast<Index>(i - 1) * L + (j - 1); };

  CaseInstance inst;
  CoupledQP& qp = inst.qp;
  qp.c = Vector::Zero(n);
  qp.d.resize(N);

  std::vector<Triplet> q;
  std::vector<Triplet> a;
  std::vector<Triplet> b;
  std::vector<Triplet> pi;
  std::vector<int> owner(static_cast<std::size_t>(lay.num_coupling_rows()), 0);

  for (int i = 1; i <= L; ++i)
    for (int j = 1; j <= L; ++j) {
      qp.d(node(i, j)) = spatial_disturbance(spec, i, j);
      q.emplace_back(lay.p(i, j), lay.p(i, j), 2.0);
      q.emplace_back(lay.u(i, j), lay.u(i, j), 2.0);

      const int pn = (i - 1) / M;
      const int pm = (j - 1) / M;
      const Index row = lay.balance_row(i, j);
      a.emplace_back(row, lay.p(i, j), 4.0 * spec.D);
      auto neighbour = [&](int ni, int nj, Side side, int s) {
        if (ni < 1 || ni > L || nj < 1 || nj > L) return;
        const Index v = lay.partition_of(ni, nj) == lay.partition_of(i, j) ? lay.p(ni, nj) : lay.ghost(pn, pm, side, s);
        a.emplace_back(row, v, -spec.D);
      };
      const int la = (i - 1) % M + 1;
      const int lb = (j - 1) % M + 1;
      neighbour(i - 1, j, Side::West, lb);
      neighbour(i + 1, j, Side::East, lb);
      neighbour(i, j - 1, Side::South, la);
      neighbour(i, j + 1, Side::North, la);
      a.emplace_back(row, lay.u(i, j), -1.0);
      b.emplace_back(row, node(i, j), -1.0);
    }

  for (int pn = 0; pn < P; ++pn)
    for (int pm = 0; pm < P; ++pm)
      for (int side = 0; side < 4; ++side) {
        const auto sd = static_cast<Side>(side);
        if (!lay.has_side(pn, pm, sd)) continue;
        for (int s = 1; s <= M; ++s) {
          const auto [si, sj] = lay.ghost_source(pn, pm, sd, s);
          const Index g = lay.ghost(pn, pm, sd, s);
          const Index row = lay.ghost_row(pn, pm, sd, s);
          pi.emplace_back(row, g, 1.0);
          pi.emplace_back(row, lay.p(si, sj), -1.0);
          owner[static_cast<std::size_t>(row)] = grid_index(pn, pm, P);
        }
      }

  qp.Q.resize(n, n);
  qp.Q.setFromTriplets(q.begin(), q.end());
  qp.A.resize(N, n);
  qp.A.setFromTriplets(a.begin(), a.end());
  qp.B.resize(N, N);
  qp.B.setFromTriplets(b.begin(), b.end());
  qp.Pi.resize(lay.num_coupling_rows(), n);
  qp.Pi.setFromTriplets(pi.begin(), pi.end());

  Partitioning& part = inst.partitioning;
  part.num_partitions = P * P;
  part.assignment.assign(static_cast<std::size_t>(n), 0);
  for (int pn = 0; pn < P; ++pn)
    for (int pm = 0; pm < P; ++pm) {
      const int k = grid_index(pn, pm, P);
      const Index begin = lay.p(pn * M + 1, pm * M + 1);
      const Index end = k + 1 < P * P ? lay.p(((k + 1) / P) * M + 1, ((k + 1) % P) * M + 1) : n;
      for (Index v = begin; v < end; ++v) part.assignment[static_cast<std::size_t>(v)] = k;
    }
  part.coupling_owner = std::move(owner);

  CaseMetadata& meta = inst.metadata;
  meta.kind = "spatial";
  meta.K = P * P;
  meta.M = M;
  meta.P = P;
  meta.structure = PartitionStructure::grid(P);
  meta.partition_disturbance_l1.assign(static_cast<std::size_t>(P * P), 0.0);
  for (int i = 1; i <= L; ++i)
    for (int j = 1; j <= L; ++j) {
      meta.partition_disturbance_l1[static_cast<std::size_t>(lay.partition_of(i, j))] += std::abs(qp.d(node(i, j)));
      meta.state_index.push_back(lay.p(i, j));
      meta.control_index.push_back(lay.u(i, j));
    }
  return inst;
}

std::array<double, 4> flow_from_potentials(const Matrix& potential, int i, int j, double D) {
  auto at = [&](int r, int c) {
    if (r < 1 || c < 1 || r > potential.rows() || c > potential.cols()) return 0.0;
    return potential(r - 1, c - 1);
  };
  const double p = at(i, j);
  return {D * (p - at(i, j + 1)), D * (p - at(i, j - 1)), D * (p - at(i + 1, j)), D * (p - at(i - 1, j))};
}

Matrix potential_field(const CaseMetadata& meta, const Vector& primal) {
  const int L = meta.P * meta.M;
  if (static_cast<Index>(meta.state_index.size()) != static_cast<Index>(L) * L)
    throw Error(ErrorKind::MissingMetadata, "metadata does not describe a spatial mesh");
  Matrix field(L, L);
  for (int i = 0; i < L; ++i)
    for (int j = 0; j < L; ++j)
      field(i, j) = primal(meta.state_index[static_cast<std::size_t>(i) * L + j]);
  return field;
}

}  // namespace mgcoord
