#pragma once

#include <Eigen/LU>

#include <cstdint>
#include <optional>
#include <vector>

#include "mgcoord/lifting.hpp"
#include "mgcoord/ordering.hpp"

namespace mgcoord {

/// Per-partition primal and dual iterates at coordination step `step`.
struct CoordinationState {
  std::vector<Vector> z;
  std::vector<Vector> nu;
  std::vector<Vector> lambda;
  std::size_t step = 0;

  static CoordinationState zeros(const LiftedProblem& lifted);
  static CoordinationState from_stacked(const LiftedProblem& lifted, const Vector& w, std::size_t step = 0);
  Vector stacked() const;
};

struct PartitionUpdate {
  Vector z;
  Vector nu;
  Vector lambda;
};

enum class Execution { Sequential, Parallel };

/// w^{l+1} = S w^l + r
struct IterationOperator {
  Matrix S;
  Vector r;
  OrderingSchedule ordering;
};

enum class EigenMethod { DenseEig, PowerIteration };

struct ConvergenceCertificate {
  double spectral_radius = 0.0;
  bool converges = true;
  EigenMethod eigen_method = EigenMethod::DenseEig;
  std::string ordering;
};

/// Default cap on the stacked dimension for dense iteration operators.
/// MGCOORD_DENSE_CAP overrides it.
Index default_dense_cap();

struct CertifyOptions {
  Index dense_cap = default_dense_cap();
  /// Budget of S applications for the matrix-free (restarted Arnoldi) estimate.
  int power_iterations = 200;
  std::uint64_t seed = 0;
};

struct TraceEntry {
  std::size_t step = 0;
  double error_w = 0.0;
  double error_primal_owned = 0.0;
  std::optional<double> rho_bound;
  double step_difference = 0.0;
  double wall_time_ms = 0.0;
};

struct GsOptions {
  double tol = 1e-8;
  std::size_t max_steps = 1000;
  /// Stacked lifted solution w*; when absent the trace records step differences.
  std::optional<Vector> oracle;
  /// Spectral radius used for the rho_bound column.
  std::optional<double> spectral_radius;
  Execution execution = Execution::Sequential;
};

struct GsResult {
  CoordinationState state;
  std::vector<TraceEntry> trace;
  bool converged = false;
};

/**
 * Decentralized Gauss-Seidel coordinator over a lifted problem. Partition KKT
 * matrices are factorized once at construction; a sweep only changes
 * right-hand sides.
 */
class Coordinator {
public:
  explicit Coordinator(LiftedProblem lifted);

  const LiftedProblem& lifted() const { return lifted_; }

  /// Solves partition k's subproblem against the neighbour values held in
  /// `state` (already-updated partitions carry step l+1 values). With
  /// `homogeneous` the cost vector and local right-hand side are dropped,
  /// which yields the action of S.
  PartitionUpdate partition_solve(const CoordinationState& state, int k, bool homogeneous = false) const;

  CoordinationState sweep(const CoordinationState& state, const OrderingSchedule& order,
                          Execution exec = Execution::Sequential, bool homogeneous = false) const;

  /// S w (matrix-free, one homogeneous sweep).
  Vector apply_S(const Vector& w, const OrderingSchedule& order) const;
  /// r = one sweep from the zero state.
  Vector offset(const OrderingSchedule& order) const;

  /// Stacked coordinates that neighbours read (interface z and lambda). All
  /// other columns of S vanish.
  const std::vector<Index>& active_coordinates() const { return active_; }

private:
  LiftedProblem lifted_;
  std::vector<Eigen::PartialPivLU<Matrix>> factors_;
  std::vector<std::vector<int>> incoming_;  // j with Pi_jk != 0, per k
  std::vector<Index> active_;
};

IterationOperator build_iteration_operator(const Coordinator& coord, const OrderingSchedule& order,
                                           Index dense_cap = default_dense_cap());

ConvergenceCertificate certify(const Coordinator& coord, const OrderingSchedule& order,
                               const CertifyOptions& options = {});

GsResult run_gs(const Coordinator& coord, const CoordinationState& initial, const OrderingSchedule& order,
                const GsOptions& options = {});

/// Smallest kappa with error[l] <= kappa (rho + delta)^l error[0] over the trace,
/// stopping at the first entry below 1e-11 error[0] (round-off floor).
double fit_rate_constant(const std::vector<TraceEntry>& trace, double rho, double delta = 0.05);

}  // namespace mgcoord
