#include "mgcoord/coordination.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <random>
#include <set>
#include <string>
#include <thread>

namespace mgcoord {

Index default_dense_cap() {
  if (const char* env = std::getenv("MGCOORD_DENSE_CAP")) {
    char* end = nullptr;
    const long long v = std::strtoll(env, &end, 10);
    if (end != env && v > 0) return static_cast<Index>(v);
  }
  return 5000;
}

CoordinationState CoordinationState::zeros(const LiftedProblem& lifted) {
  CoordinationState s;
  for (const auto& b : lifted.blocks) {
    s.z.push_back(Vector::Zero(b.num_vars()));
    s.nu.push_back(Vector::Zero(b.num_local()));
    s.lambda.push_back(Vector::Zero(b.num_coupling()));
  }
  return s;
}

CoordinationState CoordinationState::from_stacked(const LiftedProblem& lifted, const Vector& w, std::size_t step) {
  if (w.size() != lifted.state_dim())
    throw Error(ErrorKind::DimensionMismatch, "stacked state has length " + std::to_string(w.size()) +
                                                  ", expected " + std::to_string(lifted.state_dim()));
  CoordinationState s;
  s.step = step;
  Index pos = 0;
  for (const auto& b : lifted.blocks) {
    s.z.push_back(w.segment(pos, b.num_vars()));
    pos += b.num_vars();
    s.nu.push_back(w.segment(pos, b.num_local()));
    pos += b.num_local();
    s.lambda.push_back(w.segment(pos, b.num_coupling()));
    pos += b.num_coupling();
  }
  return s;
}

Vector CoordinationState::stacked() const {
  Index n = 0;
  for (std::size_t k = 0; k < z.size(); ++k) n += z[k].size() + nu[k].size() + lambda[k].size();
  Vector w(n);
  Index pos = 0;
  for (std::size_t k = 0; k < z.size(); ++k) {
    for (const Vector* v : {&z[k], &nu[k], &lambda[k]}) {
      w.segment(pos, v->size()) = *v;
      pos += v->size();
    }
  }
  return w;
}

Coordinator::Coordinator(LiftedProblem lifted) : lifted_(std::move(lifted)) {
  const int K = lifted_.num_partitions();
  incoming_.resize(static_cast<std::size_t>(K));
  factors_.reserve(static_cast<std::size_t>(K));
  for (int k = 0; k < K; ++k) {
    const auto& b = lifted_.blocks[static_cast<std::size_t>(k)];
    const Index n = b.num_vars();
    const Index l = b.num_local();
    const Index c = b.num_coupling();
    Matrix kkt = Matrix::Zero(n + l + c, n + l + c);
    kkt.topLeftCorner(n, n) = b.Q;
    kkt.block(n, 0, l, n) = b.local_A;
    kkt.block(0, n, n, l) = b.local_A.transpose();
    kkt.block(n + l, 0, c, n) = b.coupling_self;
    kkt.block(0, n + l, n, c) = b.coupling_self.transpose();
    factors_.emplace_back(kkt);
    const Vector piv = factors_.back().matrixLU().diagonal().cwiseAbs();
    if (piv.size() > 0 && (!piv.allFinite() || piv.minCoeff() <= kPivotThreshold * piv.maxCoeff()))
      throw Error(ErrorKind::SingularPartition, "KKT matrix of partition " + std::to_string(k) + " is singular");
    for (const auto& [kp, m] : b.coupling_other) incoming_[static_cast<std::size_t>(kp)].push_back(k);
  }

  // Interface coordinates read by neighbours.
  const auto off = lifted_.state_offsets();
  std::set<Index> active;
  for (int k = 0; k < K; ++k) {
    const auto& b = lifted_.blocks[static_cast<std::size_t>(k)];
    const Index lam0 = off[static_cast<std::size_t>(k)] + b.num_vars() + b.num_local();
    for (const auto& [kp, m] : b.coupling_other) {
      for (Index col = 0; col < m.cols(); ++col)
        if (!m.col(col).isZero(0.0)) active.insert(off[static_cast<std::size_t>(kp)] + col);
      for (Index row = 0; row < m.rows(); ++row)
        if (!m.row(row).isZero(0.0)) active.insert(lam0 + row);
    }
  }
  active_.assign(active.begin(), active.end());
}

PartitionUpdate Coordinator::partition_solve(const CoordinationState& state, int k, bool homogeneous) const {
  if (k < 0 || k >= lifted_.num_partitions())
    throw Error(ErrorKind::UnknownPartition, "partition " + std::to_string(k));
  const auto& b = lifted_.blocks[static_cast<std::size_t>(k)];
  const Index n = b.num_vars();
  const Index l = b.num_local();
  const Index c = b.num_coupling();

  Vector rhs = Vector::Zero(n + l + c);
  if (!homogeneous) {
    rhs.head(n) = b.c;
    rhs.segment(n, l) = b.local_rhs;
  }
  // Prices from neighbours enter the gradient.
  for (int j : incoming_[static_cast<std::size_t>(k)]) {
    const Matrix& pjk = lifted_.blocks[static_cast<std::size_t>(j)].coupling_other.at(k);
    rhs.head(n).noalias() -= pjk.transpose() * state.lambda[static_cast<std::size_t>(j)];
  }
  // Neighbour primal values enter the coupling right-hand side.
  for (const auto& [kp, pkk] : b.coupling_other)
    rhs.tail(c).noalias() -= pkk * state.z[static_cast<std::size_t>(kp)];

  const Vector sol = factors_[static_cast<std::size_t>(k)].solve(rhs);
  return {sol.head(n), sol.segment(n, l), sol.tail(c)};
}

CoordinationState Coordinator::sweep(const CoordinationState& state, const OrderingSchedule& order, Execution exec,
                                     bool homogeneous) const {
  CoordinationState next = state;
  std::vector<PartitionUpdate> results;
  for (const auto& group : order.groups) {
    results.assign(group.size(), {});
    const bool threaded = exec == Execution::Parallel && group.size() > 1;
    if (!threaded) {
      for (std::size_t i = 0; i < group.size(); ++i) results[i] = partition_solve(next, group[i], homogeneous);
    } else {
      const std::size_t workers =
          std::min<std::size_t>(group.size(), std::max<std::size_t>(2, std::thread::hardware_concurrency()));
      std::vector<std::exception_ptr> errors(workers);
      std::vector<std::thread> pool;
      pool.reserve(workers);
      for (std::size_t t = 0; t < workers; ++t) {
        pool.emplace_back([&, t] {
          try {
            for (std::size_t i = t; i < group.size(); i += workers)
              results[i] = partition_solve(next, group[i], homogeneous);
          } catch (...) {
            errors[t] = std::current_exception();
          }
        });
      }
      for (auto& th : pool) th.join();
      for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    }
    // Commit the whole group at once; members only read pre-group values.
    for (std::size_t i = 0; i < group.size(); ++i) {
      const auto k = static_cast<std::size_t>(group[i]);
      next.z[k] = std::move(results[i].z);
      next.nu[k] = std::move(results[i].nu);
      next.lambda[k] = std::move(results[i].lambda);
    }
  }
  next.step = state.step + 1;
  return next;
}

Vector Coordinator::apply_S(const Vector& w, const OrderingSchedule& order) const {
  return sweep(CoordinationState::from_stacked(lifted_, w), order, Execution::Sequential, true).stacked();
}

Vector Coordinator::offset(const OrderingSchedule& order) const {
  return sweep(CoordinationState::zeros(lifted_), order).stacked();
}

IterationOperator build_iteration_operator(const Coordinator& coord, const OrderingSchedule& order,
                                           Index dense_cap) {
  order.validate(coord.lifted());
  const Index dim = coord.lifted().state_dim();
  if (dim > dense_cap)
    throw Error(ErrorKind::DimensionCap,
                "state dimension " + std::to_string(dim) + " exceeds dense cap " + std::to_string(dense_cap));
  IterationOperator op;
  op.ordering = order;
  op.S = Matrix::Zero(dim, dim);
  Vector e = Vector::Zero(dim);
  for (Index col : coord.active_coordinates()) {
    e(col) = 1.0;
    op.S.col(col) = coord.apply_S(e, order);
    e(col) = 0.0;
  }
  op.r = coord.offset(order);
  return op;
}

namespace {

double dense_radius(const Coordinator& coord, const OrderingSchedule& order) {
  const auto& act = coord.active_coordinates();
  const Index n = static_cast<Index>(act.size());
  if (n == 0) return 0.0;
  const Index dim = coord.lifted().state_dim();
  // S = S E E' with E selecting the active columns, so the nonzero spectrum of
  // S equals that of E'SE.
  Matrix compressed(n, n);
  Vector e = Vector::Zero(dim);
  for (Index j = 0; j < n; ++j) {
    e(act[static_cast<std::size_t>(j)]) = 1.0;
    const Vector col = coord.apply_S(e, order);
    e(act[static_cast<std::size_t>(j)]) = 0.0;
    for (Index i = 0; i < n; ++i) compressed(i, j) = col(act[static_cast<std::size_t>(i)]);
  }
  Eigen::EigenSolver<Matrix> es(compressed, false);
  if (es.info() != Eigen::Success) throw Error(ErrorKind::SingularSystem, "eigenvalue iteration failed");
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

constexpr int kArnoldiDim = 30;
constexpr double kStallSpread = 1e-6;

/**
 * Explicitly restarted Arnoldi on w -> S w. Each cycle builds an orthonormal
 * Krylov basis of dimension kArnoldiDim, takes the largest-modulus Ritz value
 * and restarts from its Ritz vector. The budget is power_iterations
 * applications of S; the last two cycle estimates must agree to kStallSpread.
 */
double power_radius(const Coordinator& coord, const OrderingSchedule& order, const CertifyOptions& opt) {
  const Index dim = coord.lifted().state_dim();
  std::mt19937_64 rng(opt.seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  Vector v(dim);
  for (Index i = 0; i < dim; ++i) v(i) = unif(rng);
  v.normalize();

  const Index m = std::min<Index>(kArnoldiDim, dim);
  const int cycles = std::max(2, (opt.power_iterations + static_cast<int>(m) - 1) / static_cast<int>(m));
  std::vector<double> estimates;
  for (int cycle = 0; cycle < cycles; ++cycle) {
    Matrix V(dim, m + 1);
    Matrix H = Matrix::Zero(m + 1, m);
    V.col(0) = v;
    Index built = m;
    bool invariant = false;
    for (Index j = 0; j < m; ++j) {
      Vector w = coord.apply_S(V.col(j), order);
      const double scale = w.norm();
      for (int pass = 0; pass < 2; ++pass) {
        const Vector h = V.leftCols(j + 1).transpose() * w;
        w.noalias() -= V.leftCols(j + 1) * h;
        H.col(j).head(j + 1) += h;
      }
      H(j + 1, j) = w.norm();
      if (H(j + 1, j) <= 1e-12 * std::max(scale, 1e-300)) {
        built = j + 1;
        invariant = true;
        break;
      }
      V.col(j + 1) = w / H(j + 1, j);
    }
    const Matrix Hm = H.topLeftCorner(built, built);
    if (Hm.cwiseAbs().maxCoeff() == 0.0) return 0.0;  // S v vanished
    Eigen::EigenSolver<Matrix> es(Hm, true);
    Index top = 0;
    estimates.push_back(es.eigenvalues().cwiseAbs().maxCoeff(&top));
    if (invariant) return estimates.back();
    const Eigen::VectorXcd y = V.leftCols(built) * es.eigenvectors().col(top);
    v = y.real() + y.imag();
    if (!(v.norm() > 0.0)) v = y.real();
    v.normalize();
  }
  const double spread = std::abs(estimates[estimates.size() - 1] - estimates[estimates.size() - 2]);
  if (spread > kStallSpread)
    throw Error(ErrorKind::PowerIterationStall,
                "spectral radius estimates differ by " + std::to_string(spread) + " between the last two restarts (last estimate " +
                    std::to_string(estimates.back()) + ")");
  return estimates.back();
}

}  // namespace

ConvergenceCertificate certify(const Coordinator& coord, const OrderingSchedule& order,
                               const CertifyOptions& options) {
  order.validate(coord.lifted());
  ConvergenceCertificate cert;
  cert.ordering = order.name;
  if (coord.lifted().state_dim() <= options.dense_cap) {
    cert.eigen_method = EigenMethod::DenseEig;
    cert.spectral_radius = dense_radius(coord, order);
  } else {
    cert.eigen_method = EigenMethod::PowerIteration;
    cert.spectral_radius = power_radius(coord, order, options);
  }
  cert.converges = cert.spectral_radius < 1.0 - 1e-12;
  return cert;
}

GsResult run_gs(const Coordinator& coord, const CoordinationState& initial, const OrderingSchedule& order,
                const GsOptions& options) {
  if (!(options.tol > 0.0)) throw Error(ErrorKind::InvalidArgument, "tol must be positive");
  order.validate(coord.lifted());
  const LiftedProblem& lifted = coord.lifted();
  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed_ms = [&] {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  };

  std::optional<Vector> oracle_primal;
  if (options.oracle) {
    if (options.oracle->size() != lifted.state_dim())
      throw Error(ErrorKind::DimensionMismatch, "oracle has the wrong dimension");
    oracle_primal = lifted.owned_primal(*options.oracle);
  }

  GsResult res;
  res.state = initial;
  Vector w = initial.stacked();

  auto record = [&](std::size_t step, const Vector& cur, double diff) {
    TraceEntry e;
    e.step = step;
    e.step_difference = diff;
    if (options.oracle) {
      e.error_w = (cur - *options.oracle).norm();
      e.error_primal_owned = (lifted.owned_primal(cur) - *oracle_primal).norm();
    } else {
      e.error_w = diff;
      e.error_primal_owned = std::numeric_limits<double>::quiet_NaN();
    }
    if (options.spectral_radius) {
      const double e0 = res.trace.empty() ? e.error_w : res.trace.front().error_w;
      e.rho_bound = e0 * std::pow(*options.spectral_radius, static_cast<double>(step));
    }
    e.wall_time_ms = elapsed_ms();
    res.trace.push_back(e);
  };

  record(0, w, 0.0);
  for (std::size_t l = 1; l <= options.max_steps; ++l) {
    res.state = coord.sweep(res.state, order, options.execution);
    Vector next = res.state.stacked();
    const double diff = (next - w).lpNorm<Eigen::Infinity>();
    w = std::move(next);
    record(l, w, diff);
    if (diff <= options.tol) {
      res.converged = true;
      break;
    }
  }
  return res;
}

namespace {
constexpr double kRoundoffFloor = 1e-11;
}

double fit_rate_constant(const std::vector<TraceEntry>& trace, double rho, double delta) {
  if (trace.empty() || trace.front().error_w == 0.0) return 0.0;
  const double base = rho + delta;
  const double e0 = trace.front().error_w;
  double kappa = 0.0;
  for (const auto& e : trace) {
    if (e.error_w <= kRoundoffFloor * e0) break;  // round-off regime
    kappa = std::max(kappa, e.error_w / (std::pow(base, static_cast<double>(e.step)) * e0));
  }
  return kappa;
}

}  // namespace mgcoord
