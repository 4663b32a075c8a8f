#include "mgcoord/serialization.hpp"

#include <charconv>
#include <cmath>
#include <ostream>

namespace mgcoord {
namespace {

Index as_index(const Json& j, const char* what) {
  if (!j.is_number_integer() && !j.is_number_unsigned())
    throw Error(ErrorKind::Config, std::string(what) + " must be an integer");
  const auto v = j.get<long long>();
  if (v < 0) throw Error(ErrorKind::Config, std::string(what) + " must be non-negative");
  return static_cast<Index>(v);
}

double as_number(const Json& j) {
  if (!j.is_number()) throw Error(ErrorKind::Config, "expected a number, got " + j.dump());
  return j.get<double>();
}

}  // namespace

Json matrix_to_json(const SparseMatrix& m) {
  if (m.rows() * m.cols() > kDenseJsonLimit) {
    Json entries = Json::array();
    for (Index col = 0; col < m.outerSize(); ++col)
      for (SparseMatrix::InnerIterator it(m, col); it; ++it)
        entries.push_back(Json::array({it.row(), it.col(), it.value()}));
    return {{"rows", m.rows()}, {"cols", m.cols()}, {"entries", std::move(entries)}};
  }
  const Matrix dense(m);
  Json rows = Json::array();
  for (Index i = 0; i < dense.rows(); ++i) {
    Json row = Json::array();
    for (Index k = 0; k < dense.cols(); ++k) row.push_back(dense(i, k));
    rows.push_back(std::move(row));
  }
  return rows;
}

SparseMatrix matrix_from_json(const Json& j) {
  std::vector<Triplet> trip;
  if (j.is_object()) {
    if (!j.contains("rows") || !j.contains("cols"))
      throw Error(ErrorKind::Config, "sparse matrix needs \"rows\" and \"cols\"");
    const Index rows = as_index(j.at("rows"), "rows");
    const Index cols = as_index(j.at("cols"), "cols");
    for (const auto& e : j.value("entries", Json::array())) {
      if (!e.is_array() || e.size() != 3) throw Error(ErrorKind::Config, "sparse entry must be [i, j, v]");
      const Index r = as_index(e[0], "entry row");
      const Index c = as_index(e[1], "entry column");
      if (r >= rows || c >= cols) throw Error(ErrorKind::Config, "sparse entry out of range");
      trip.emplace_back(r, c, as_number(e[2]));
    }
    SparseMatrix m(rows, cols);
    m.setFromTriplets(trip.begin(), trip.end());
    return m;
  }
  if (!j.is_array()) throw Error(ErrorKind::Config, "matrix must be an array of rows or a sparse object");
  const auto rows = static_cast<Index>(j.size());
  Index cols = -1;
  for (Index i = 0; i < rows; ++i) {
    const Json& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array()) throw Error(ErrorKind::Config, "matrix row must be an array");
    if (cols < 0) cols = static_cast<Index>(row.size());
    if (static_cast<Index>(row.size()) != cols) throw Error(ErrorKind::Config, "ragged matrix rows");
    for (Index k = 0; k < cols; ++k) {
      const double v = as_number(row[static_cast<std::size_t>(k)]);
      if (v != 0.0) trip.emplace_back(i, k, v);
    }
  }
  SparseMatrix m(rows, std::max<Index>(cols, 0));
  m.setFromTriplets(trip.begin(), trip.end());
  return m;
}

Json vector_to_json(const Vector& v) {
  Json out = Json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Vector vector_from_json(const Json& j) {
  if (!j.is_array()) throw Error(ErrorKind::Config, "vector must be an array");
  Vector v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Index>(i)) = as_number(j[i]);
  return v;
}

Json to_json(const CoupledQP& p) {
  return {{"Q", matrix_to_json(p.Q)},   {"c", vector_to_json(p.c)},   {"A", matrix_to_json(p.A)},
          {"B", matrix_to_json(p.B)},   {"Pi", matrix_to_json(p.Pi)}, {"d", vector_to_json(p.d)}};
}

CoupledQP coupled_qp_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("Q")) throw Error(ErrorKind::Config, "problem needs at least \"Q\"");
  CoupledQP p;
  p.Q = matrix_from_json(j.at("Q"));
  const Index n = p.Q.rows();
  p.c = j.contains("c") ? vector_from_json(j.at("c")) : Vector::Zero(n);
  auto block = [&](const char* key) {
    if (!j.contains(key)) return SparseMatrix(0, n);
    SparseMatrix m = matrix_from_json(j.at(key));
    if (m.rows() == 0) m.resize(0, n);
    return m;
  };
  p.A = block("A");
  p.Pi = block("Pi");
  p.d = j.contains("d") ? vector_from_json(j.at("d")) : Vector::Zero(0);
  p.B = j.contains("B") ? matrix_from_json(j.at("B")) : SparseMatrix(p.A.rows(), p.d.size());
  if (p.B.rows() == 0 && p.B.cols() == 0) p.B.resize(p.A.rows(), p.d.size());
  try {
    p.check_dimensions();
  } catch (const Error& e) {
    throw Error(ErrorKind::Config, e.what());
  }
  return p;
}

Json to_json(const Partitioning& part) {
  Json j = {{"num_partitions", part.num_partitions}, {"assignment", part.assignment}};
  if (!part.coupling_owner.empty()) j["coupling_owner"] = part.coupling_owner;
  return j;
}

Partitioning partitioning_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("assignment")) throw Error(ErrorKind::Config, "partitioning needs \"assignment\"");
  Partitioning part;
  try {
    part.assignment = j.at("assignment").get<std::vector<int>>();
    part.coupling_owner = j.value("coupling_owner", std::vector<int>{});
    int max_k = -1;
    for (int k : part.assignment) max_k = std::max(max_k, k);
    part.num_partitions = j.value("num_partitions", max_k + 1);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Config, std::string("partitioning: ") + e.what());
  }
  return part;
}

Json to_json(const LiftedProblem& lifted) {
  Json parts = Json::array();
  for (const auto& b : lifted.blocks) {
    Json coupling = Json::array();
    for (const auto& cr : b.coupling_rows)
      coupling.push_back({{"kind", cr.kind == CouplingKind::Duplicate ? "duplicate" : "explicit"}, {"source", cr.source}});
    Json neighbours = Json::array();
    for (const auto& [kp, m] : b.coupling_other) neighbours.push_back(kp);
    parts.push_back({{"owned", b.owned},
                     {"duplicates", b.duplicates},
                     {"local_rows", b.local_rows},
                     {"coupling_rows", std::move(coupling)},
                     {"coupled_to", std::move(neighbours)},
                     {"state_size", b.state_size()}});
  }
  return {{"num_original_vars", lifted.num_original_vars},
          {"split_weight", lifted.split_weight},
          {"state_dim", lifted.state_dim()},
          {"partitions", std::move(parts)}};
}

Json to_json(const OrderingSchedule& s) {
  return {{"name", s.name}, {"sigma", s.sigma()}, {"groups", s.groups}};
}

OrderingSchedule ordering_from_json(const Json& j) {
  OrderingSchedule s;
  try {
    s.name = j.value("name", std::string("custom"));
    if (j.contains("groups")) {
      s.groups = j.at("groups").get<std::vector<std::vector<int>>>();
    } else if (j.contains("sigma")) {
      for (int k : j.at("sigma").get<std::vector<int>>()) s.groups.push_back({k});
    } else {
      throw Error(ErrorKind::Config, "ordering needs \"groups\" or \"sigma\"");
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Config, std::string("ordering: ") + e.what());
  }
  return s;
}

Json to_json(const ConvergenceCertificate& c) {
  return {{"ordering", c.ordering},
          {"spectral_radius", c.spectral_radius},
          {"converges", c.converges},
          {"eigen_method", c.eigen_method == EigenMethod::DenseEig ? "dense_eig" : "power_iteration"}};
}

Json to_json(const CoarseningSchedule& s) {
  return {{"levels", s.levels}, {"sweeps_per_level", s.sweeps_per_level}};
}

CoarseningSchedule schedule_from_json(const Json& j) {
  CoarseningSchedule s;
  try {
    if (j.is_array()) {
      s.levels = j.get<std::vector<int>>();
    } else {
      s.levels = j.at("levels").get<std::vector<int>>();
      s.sweeps_per_level = j.value("sweeps_per_level", 1);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Config, std::string("schedule: ") + e.what());
  }
  return s;
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void write_trace_csv(std::ostream& out, const std::vector<TraceRow>& rows, const CsvOptions& options,
                     const std::string& status) {
  if (options.variant_column) out << "variant,";
  out << "step,error_w,error_primal_owned,rho_bound";
  if (options.timing) out << ",wall_time_ms";
  out << '\n';
  for (const auto& r : rows) {
    const TraceEntry& e = r.entry;
    if (options.variant_column) out << r.variant << ',';
    out << e.step << ',' << format_number(e.error_w) << ',' << format_number(e.error_primal_owned) << ',';
    if (e.rho_bound) out << format_number(*e.rho_bound);
    if (options.timing) out << ',' << format_number(e.wall_time_ms);
    out << '\n';
  }
  out << "# status=" << status << '\n';
}

}  // namespace mgcoord
