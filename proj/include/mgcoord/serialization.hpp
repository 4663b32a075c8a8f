#pragma once

#include <json.hpp>

#include <iosfwd>
#include <string>
#include <vector>

#include "mgcoord/coarsening.hpp"
#include "mgcoord/coordination.hpp"

namespace mgcoord {

using Json = nlohmann::json;

/// Matrices up to this many entries are written as nested row arrays, larger
/// ones as {"rows", "cols", "entries": [[i, j, v], ...]}.
inline constexpr Index kDenseJsonLimit = 250000;

Json matrix_to_json(const SparseMatrix& m);
SparseMatrix matrix_from_json(const Json& j);
Json vector_to_json(const Vector& v);
Vector vector_from_json(const Json& j);

/// {"Q", "c", "A", "B", "Pi", "d"}; absent blocks read as empty.
Json to_json(const CoupledQP& p);
CoupledQP coupled_qp_from_json(const Json& j);

Json to_json(const Partitioning& part);
Partitioning partitioning_from_json(const Json& j);

/// Per-partition sizes and index maps (no matrices).
Json to_json(const LiftedProblem& lifted);

/// {"name", "sigma", "groups"}
Json to_json(const OrderingSchedule& s);
OrderingSchedule ordering_from_json(const Json& j);

Json to_json(const ConvergenceCertificate& c);

/// {"levels", "sweeps_per_level"}
Json to_json(const CoarseningSchedule& s);
CoarseningSchedule schedule_from_json(const Json& j);

/// Shortest round-trip decimal form, independent of the locale. NaN is "nan".
std::string format_number(double v);

struct TraceRow {
  std::string variant;
  TraceEntry entry;
};

struct CsvOptions {
  bool variant_column = false;
  bool timing = false;
};

/// Header, one row per entry, then "# status=<status>".
void write_trace_csv(std::ostream& out, const std::vector<TraceRow>& rows, const CsvOptions& options,
                     const std::string& status);

}  // namespace mgcoord
