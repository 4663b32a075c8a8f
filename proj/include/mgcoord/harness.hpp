#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mgcoord/coarsening.hpp"
#include "mgcoord/serialization.hpp"

namespace mgcoord {

/// Ordering by name ("lexicographic", "reverse_lexicographic",
/// "forward_backward", "red_black", "spiral", "disturbance_magnitude") or an
/// explicit schedule.
struct OrderingConfig {
  std::string name = "lexicographic";
  std::optional<OrderingSchedule> custom;
};

struct VariantConfig {
  std::string name;
  OrderingConfig ordering;
  std::optional<CoarseningSchedule> schedule;
  bool warm_start = false;
};

/**
 * One JSON document drives every command:
 *
 *   {"case": "temporal" | "spatial" | "chain" | "custom",
 *    "temporal": {...}, "spatial": {...}, "custom": {"problem": {...}, "partitioning": {...}},
 *    "ordering": "lexicographic" | {"name": ..., "groups": [[...], ...]},
 *    "schedule": {"levels": [...], "sweeps_per_level": 1},
 *    "warm_start": false, "warm_start_level": 4, "coarse_solver": "central" | "gs",
 *    "tol": 1e-8, "max_steps": 1000, "seed": 0, "parallel": false, "timing": false,
 *    "split_weight": 0.5, "power_iterations": 200, "orderings": [...], "variants": [...],
 *    "output": path, "plot": path}
 *
 * "chain" is the temporal layout with a random disturbance drawn from `seed`.
 */
struct ExperimentConfig {
  std::string case_kind = "temporal";
  TemporalCaseSpec temporal;
  SpatialCaseSpec spatial;
  std::optional<CoupledQP> custom_problem;
  std::optional<Partitioning> custom_partitioning;

  OrderingConfig ordering;
  std::optional<CoarseningSchedule> schedule;
  bool warm_start = false;
  int warm_start_level = 4;
  CoarseSolver coarse_solver = CoarseSolver::Centralized;

  double tol = 1e-8;
  std::size_t max_steps = 1000;
  std::uint64_t seed = 0;
  bool parallel = false;
  bool timing = false;
  double split_weight = 0.5;
  /// Budget of S applications for the matrix-free spectral radius.
  int power_iterations = 200;

  /// Orderings certified by the spectrum command; empty means `ordering`.
  std::vector<OrderingConfig> orderings;
  std::optional<std::vector<VariantConfig>> variants;

  std::string output;
  std::string plot;
};

/// Throws Error(Config) on malformed or unknown fields.
ExperimentConfig parse_config(const Json& j);
ExperimentConfig load_config(const std::string& path);
/// Merges `patch` into `base` key by key (objects recursively).
void merge_config(Json& base, const Json& patch);

struct CaseBundle {
  CoupledQP qp;
  Partitioning partitioning;
  std::optional<CaseMetadata> metadata;
  /// Coarsening resolution of the fine problem (M), 0 when not coarsenable.
  int resolution = 0;
};

CaseBundle build_case(const ExperimentConfig& config);
OrderingSchedule make_ordering(const OrderingConfig& config, const LiftedProblem& lifted, const CaseBundle& bundle);

/// Commands write their product to `out` and diagnostics to `err`, and return
/// the process exit code: 0 success, 1 numerical failure, 2 config error.
int cmd_solve(const ExperimentConfig& config, std::ostream& out, std::ostream& err);
int cmd_gs(const ExperimentConfig& config, std::ostream& out, std::ostream& err);
int cmd_spectrum(const ExperimentConfig& config, std::ostream& out, std::ostream& err);
/// CSV to `out`; the SVG chart goes to config.plot when set.
int cmd_experiment(const ExperimentConfig& config, std::ostream& out, std::ostream& err);

/// Exit code for an error kind.
int exit_code_for(ErrorKind kind);
/// {"error": "<snake_case kind>", "message": ...}
Json error_json(const Error& e);

}  // namespace mgcoord
