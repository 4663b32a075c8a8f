#include "mgcoord/harness.hpp"

#include <cctype>
#include <fstream>
#include <future>
#include <ostream>
#include <set>
#include <sstream>

#include "mgcoord/plot.hpp"

namespace mgcoord {
namespace {

[[noreturn]] void config_error(const std::string& msg) {
  throw Error(ErrorKind::Config, msg);
}

void check_keys(const Json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) config_error(where + " must be an object");
  for (const auto& [key, value] : obj.items())
    if (!allowed.contains(key)) config_error("unknown field '" + key + "' in " + where);
}

double number(const Json& obj, const char* key, double fallback) {
  if (!obj.contains(key)) return fallback;
  const Json& v = obj.at(key);
  if (!v.is_number()) config_error(std::string("'") + key + "' must be a number");
  return v.get<double>();
}

int integer(const Json& obj, const char* key, int fallback) {
  if (!obj.contains(key)) return fallback;
  const Json& v = obj.at(key);
  if (!v.is_number_integer() && !v.is_number_unsigned()) config_error(std::string("'") + key + "' must be an integer");
  return v.get<int>();
}

bool boolean(const Json& obj, const char* key, bool fallback) {
  if (!obj.contains(key)) return fallback;
  const Json& v = obj.at(key);
  if (!v.is_boolean()) config_error(std::string("'") + key + "' must be true or false");
  return v.get<bool>();
}

std::string text(const Json& obj, const char* key, const std::string& fallback) {
  if (!obj.contains(key)) return fallback;
  const Json& v = obj.at(key);
  if (!v.is_string()) config_error(std::string("'") + key + "' must be a string");
  return v.get<std::string>();
}

const std::set<std::string> kOrderingNames = {"lexicographic", "reverse_lexicographic", "forward_backward",
                                              "red_black",     "spiral",                "disturbance_magnitude"};

OrderingConfig parse_ordering(const Json& j) {
  OrderingConfig oc;
  if (j.is_string()) {
    oc.name = j.get<std::string>();
    if (oc.name == "by_disturbance_magnitude") oc.name = "disturbance_magnitude";
    if (!kOrderingNames.contains(oc.name)) config_error("unknown ordering '" + oc.name + "'");
    return oc;
  }
  if (!j.is_object()) config_error("ordering must be a name or an object");
  if (j.contains("groups") || j.contains("sigma")) {
    oc.custom = ordering_from_json(j);
    oc.name = oc.custom->name;
    return oc;
  }
  return parse_ordering(j.value("name", Json("lexicographic")));
}

CoarseningSchedule parse_schedule(const Json& j) {
  if (j.is_object()) check_keys(j, {"levels", "sweeps_per_level"}, "schedule");
  return schedule_from_json(j);
}

TemporalCaseSpec parse_temporal(const Json& j) {
  check_keys(j, {"K", "M", "delta", "a1", "a2", "w1", "w2", "disturbance_scale"}, "temporal");
  TemporalCaseSpec s;
  s.K = integer(j, "K", s.K);
  s.M = integer(j, "M", s.M);
  s.delta = number(j, "delta", s.delta);
  s.a1 = number(j, "a1", s.a1);
  s.a2 = number(j, "a2", s.a2);
  s.w1 = number(j, "w1", s.w1);
  s.w2 = number(j, "w2", s.w2);
  s.disturbance_scale = number(j, "disturbance_scale", s.disturbance_scale);
  return s;
}

SpatialCaseSpec parse_spatial(const Json& j) {
  check_keys(j,
             {"P", "M", "D", "X", "Y", "sin_amplitude", "gauss_amplitude", "gauss_x0", "gauss_y0", "gauss_sigma",
              "disturbance_scale"},
             "spatial");
  SpatialCaseSpec s;
  s.P = integer(j, "P", s.P);
  s.M = integer(j, "M", s.M);
  s.D = number(j, "D", s.D);
  s.X = number(j, "X", s.X);
  s.Y = number(j, "Y", s.Y);
  s.sin_amplitude = number(j, "sin_amplitude", s.sin_amplitude);
  s.gauss_amplitude = number(j, "gauss_amplitude", s.gauss_amplitude);
  s.gauss_x0 = number(j, "gauss_x0", s.gauss_x0);
  s.gauss_y0 = number(j, "gauss_y0", s.gauss_y0);
  s.gauss_sigma = number(j, "gauss_sigma", s.gauss_sigma);
  s.disturbance_scale = number(j, "disturbance_scale", s.disturbance_scale);
  return s;
}

std::string snake_case(std::string_view name) {
  std::string out;
  for (char ch : name) {
    if (std::isupper(static_cast<unsigned char>(ch))) {
      if (!out.empty()) out += '_';
      out += static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    } else {
      out += ch;
    }
  }
  return out;
}

template <typename F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const Error& e) {
    err << error_json(e).dump() << '\n';
    return exit_code_for(e.kind());
  } catch (const nlohmann::json::exception& e) {
    err << error_json(Error(ErrorKind::Config, e.what())).dump() << '\n';
    return 2;
  }
}

struct Setup {
  CaseBundle bundle;
  std::unique_ptr<Coordinator> coord;
  Vector oracle;
};

Setup prepare(const ExperimentConfig& config) {
  Setup s;
  s.bundle = build_case(config);
  s.coord = std::make_unique<Coordinator>(lift_explicit(s.bundle.qp, s.bundle.partitioning, config.split_weight));
  s.oracle = solve_lifted(s.coord->lifted()).w;
  return s;
}

std::optional<double> radius_or_none(const Coordinator& coord, const OrderingSchedule& order,
                                     const ExperimentConfig& config) {
  try {
    CertifyOptions opt;
    opt.power_iterations = config.power_iterations;
    opt.seed = config.seed;
    return certify(coord, order, opt).spectral_radius;
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::PowerIterationStall || e.kind() == ErrorKind::DimensionCap) return std::nullopt;
    throw;
  }
}

// One trace: plain GS, warm-started GS, or sequential coarsening.
GsResult run_variant(const ExperimentConfig& config, const Setup& s, const OrderingSchedule& order,
                     const std::optional<CoarseningSchedule>& schedule, bool warm_start) {
  const Coordinator& coord = *s.coord;
  const LiftedProblem& lifted = coord.lifted();
  GsOptions opt;
  opt.tol = config.tol;
  opt.max_steps = config.max_steps;
  opt.oracle = s.oracle;
  opt.spectral_radius = radius_or_none(coord, order, config);
  opt.execution = config.parallel ? Execution::Parallel : Execution::Sequential;

  const bool needs_levels = schedule.has_value() || warm_start;
  if (needs_levels && (s.bundle.resolution == 0 || !s.bundle.metadata))
    throw Error(ErrorKind::MissingMetadata, "coarsening needs a temporal or spatial case");

  if (schedule) {
    MultigridOptions mg;
    mg.gs = opt;
    mg.coarse_solver = config.coarse_solver;
    return run_multigrid(s.bundle.qp, coord, s.bundle.resolution, *schedule, order,
                         case_level_factory(*s.bundle.metadata), CoordinationState::zeros(lifted), mg);
  }
  CoordinationState initial = CoordinationState::zeros(lifted);
  if (warm_start) {
    const int M = s.bundle.resolution;
    if (config.warm_start_level < 1 || M % config.warm_start_level != 0)
      throw Error(ErrorKind::NonDivisor, "warm-start level " + std::to_string(config.warm_start_level) +
                                             " does not divide " + std::to_string(M));
    const CoarseLevel level = case_level_factory(*s.bundle.metadata)(config.warm_start_level);
    initial = CoordinationState::from_stacked(lifted, coarse_warm_start(s.bundle.qp, lifted, level.transfer));
  }
  return run_gs(coord, initial, order, opt);
}

std::vector<TraceRow> rows_of(const std::string& variant, const GsResult& r) {
  std::vector<TraceRow> rows;
  for (const auto& e : r.trace) rows.push_back({variant, e});
  return rows;
}

}  // namespace

void merge_config(Json& base, const Json& patch) {
  if (!base.is_object() || !patch.is_object()) {
    base = patch;
    return;
  }
  for (const auto& [key, value] : patch.items()) {
    if (base.contains(key) && base[key].is_object() && value.is_object())
      merge_config(base[key], value);
    else
      base[key] = value;
  }
}

ExperimentConfig parse_config(const Json& j) {
  check_keys(j,
             {"case", "temporal", "spatial", "custom", "ordering", "schedule", "warm_start", "warm_start_level",
              "coarse_solver", "tol", "max_steps", "seed", "parallel", "timing", "split_weight", "power_iterations", "orderings",
              "variants", "output", "plot"},
             "config");
  ExperimentConfig c;
  c.case_kind = text(j, "case", c.case_kind);
  if (c.case_kind != "temporal" && c.case_kind != "spatial" && c.case_kind != "chain" && c.case_kind != "custom")
    config_error("unknown case '" + c.case_kind + "'");
  if (j.contains("temporal")) c.temporal = parse_temporal(j.at("temporal"));
  if (j.contains("spatial")) c.spatial = parse_spatial(j.at("spatial"));
  if (c.case_kind == "custom") {
    if (!j.contains("custom")) config_error("case 'custom' needs a \"custom\" object");
    const Json& cj = j.at("custom");
    check_keys(cj, {"problem", "partitioning"}, "custom");
    if (!cj.contains("problem") || !cj.contains("partitioning"))
      config_error("custom case needs \"problem\" and \"partitioning\"");
    c.custom_problem = coupled_qp_from_json(cj.at("problem"));
    c.custom_partitioning = partitioning_from_json(cj.at("partitioning"));
  }
  if (j.contains("ordering")) c.ordering = parse_ordering(j.at("ordering"));
  if (j.contains("schedule") && !j.at("schedule").is_null()) c.schedule = parse_schedule(j.at("schedule"));
  c.warm_start = boolean(j, "warm_start", c.warm_start);
  c.warm_start_level = integer(j, "warm_start_level", c.warm_start_level);
  const std::string solver = text(j, "coarse_solver", "central");
  if (solver == "central")
    c.coarse_solver = CoarseSolver::Centralized;
  else if (solver == "gs")
    c.coarse_solver = CoarseSolver::GaussSeidel;
  else
    config_error("coarse_solver must be \"central\" or \"gs\"");

  c.tol = number(j, "tol", c.tol);
  if (!(c.tol > 0.0)) config_error("tol must be positive");
  const int steps = integer(j, "max_steps", static_cast<int>(c.max_steps));
  if (steps < 0) config_error("max_steps must be non-negative");
  c.max_steps = static_cast<std::size_t>(steps);
  if (j.contains("seed")) {
    if (!j.at("seed").is_number_integer() && !j.at("seed").is_number_unsigned()) config_error("'seed' must be an integer");
    c.seed = j.at("seed").get<std::uint64_t>();
  }
  c.parallel = boolean(j, "parallel", c.parallel);
  c.timing = boolean(j, "timing", c.timing);
  c.split_weight = number(j, "split_weight", c.split_weight);
  if (!(c.split_weight > 0.0 && c.split_weight < 1.0)) config_error("split_weight must lie in (0, 1)");
  c.power_iterations = integer(j, "power_iterations", c.power_iterations);
  if (c.power_iterations < 1) config_error("power_iterations must be positive");

  if (j.contains("orderings")) {
    if (!j.at("orderings").is_array()) config_error("'orderings' must be an array");
    for (const auto& o : j.at("orderings")) c.orderings.push_back(parse_ordering(o));
  }
  if (j.contains("variants")) {
    if (!j.at("variants").is_array()) config_error("'variants' must be an array");
    c.variants.emplace();
    for (const auto& v : j.at("variants")) {
      check_keys(v, {"name", "ordering", "schedule", "warm_start"}, "variant");
      VariantConfig vc;
      vc.ordering = v.contains("ordering") ? parse_ordering(v.at("ordering")) : c.ordering;
      if (v.contains("schedule") && !v.at("schedule").is_null()) vc.schedule = parse_schedule(v.at("schedule"));
      vc.warm_start = boolean(v, "warm_start", false);
      std::string fallback = vc.schedule ? "coarsening" : (vc.warm_start ? "warm_start" : vc.ordering.name);
      vc.name = text(v, "name", fallback);
      c.variants->push_back(std::move(vc));
    }
  }
  c.output = text(j, "output", "");
  c.plot = text(j, "plot", "");
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) config_error("cannot open config file '" + path + "'");
  Json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    config_error("malformed config '" + path + "': " + e.what());
  }
  return parse_config(j);
}

CaseBundle build_case(const ExperimentConfig& config) {
  CaseBundle b;
  if (config.case_kind == "temporal" || config.case_kind == "chain") {
    TemporalCaseSpec spec = config.temporal;
    if (config.case_kind == "chain") spec.random_seed = config.seed;
    CaseInstance inst = build_temporal(spec);
    b.qp = std::move(inst.qp);
    b.partitioning = std::move(inst.partitioning);
    b.metadata = std::move(inst.metadata);
    b.resolution = spec.M;
  } else if (config.case_kind == "spatial") {
    CaseInstance inst = build_spatial(config.spatial);
    b.qp = std::move(inst.qp);
    b.partitioning = std::move(inst.partitioning);
    b.metadata = std::move(inst.metadata);
    b.resolution = config.spatial.M;
  } else {
    if (!config.custom_problem || !config.custom_partitioning) config_error("custom case has no problem");
    b.qp = *config.custom_problem;
    b.partitioning = *config.custom_partitioning;
  }
  return b;
}

OrderingSchedule make_ordering(const OrderingConfig& config, const LiftedProblem& lifted, const CaseBundle& bundle) {
  const int K = lifted.num_partitions();
  OrderingSchedule s;
  if (config.custom) {
    s = *config.custom;
  } else if (config.name == "lexicographic") {
    s = lexicographic(K);
  } else if (config.name == "reverse_lexicographic") {
    s = reverse_lexicographic(K);
  } else if (config.name == "forward_backward") {
    s = forward_backward(K);
  } else if (config.name == "red_black") {
    const PartitionStructure st = bundle.metadata ? bundle.metadata->structure : PartitionStructure::chain(K);
    s = red_black(lifted, st);
  } else if (config.name == "spiral") {
    if (!bundle.metadata || bundle.metadata->structure.kind != PartitionStructure::Kind::Grid)
      throw Error(ErrorKind::MissingMetadata, "spiral ordering needs a grid of partitions");
    s = spiral(bundle.metadata->structure.size);
  } else if (config.name == "disturbance_magnitude") {
    if (!bundle.metadata) throw Error(ErrorKind::MissingMetadata, "no per-partition disturbance magnitudes");
    s = by_disturbance_magnitude(bundle.metadata->partition_disturbance_l1);
  } else {
    config_error("unknown ordering '" + config.name + "'");
  }
  s.validate(lifted);
  return s;
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Config:
    case ErrorKind::InvalidArgument:
    case ErrorKind::UnknownPartition:
    case ErrorKind::NonDivisor:
    case ErrorKind::MissingMetadata:
    case ErrorKind::DimensionMismatch:
    case ErrorKind::NotTwoColorable:
    case ErrorKind::NonSeparableConstraint:
      return 2;
    default:
      return 1;
  }
}

Json error_json(const Error& e) {
  std::string message = e.what();
  const std::string prefix = std::string(to_string(e.kind())) + ": ";
  if (message.starts_with(prefix)) message.erase(0, prefix.size());
  return {{"error", snake_case(to_string(e.kind()))}, {"message", message}};
}

int cmd_solve(const ExperimentConfig& config, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const CaseBundle b = build_case(config);
    b.qp.check_invariants();
    const KKTSolution sol = solve_centralized(b.qp);
    Vector primal = sol.primal;
    if (b.metadata) {
      const auto idx = b.metadata->node_primal_index();
      primal.resize(static_cast<Index>(idx.size()));
      for (std::size_t i = 0; i < idx.size(); ++i) primal(static_cast<Index>(i)) = sol.primal(idx[i]);
    }
    const Vector feas = b.qp.constraint_matrix() * sol.primal - b.qp.constraint_rhs();
    Json j = {{"case", config.case_kind},
              {"num_vars", b.qp.num_vars()},
              {"primal", vector_to_json(primal)},
              {"primal_full", vector_to_json(sol.primal)},
              {"dual", vector_to_json(sol.dual)},
              {"objective", b.qp.objective(sol.primal)},
              {"residual_norm", sol.residual_norm},
              {"constraint_residual", feas.size() ? feas.lpNorm<Eigen::Infinity>() : 0.0}};
    out << j.dump(2) << '\n';
    return 0;
  });
}

int cmd_gs(const ExperimentConfig& config, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const Setup s = prepare(config);
    const OrderingSchedule order = make_ordering(config.ordering, s.coord->lifted(), s.bundle);
    const GsResult r = run_variant(config, s, order, config.schedule, config.warm_start);
    write_trace_csv(out, rows_of(order.name, r), {false, config.timing}, r.converged ? "converged" : "not_converged");
    return 0;
  });
}

int cmd_spectrum(const ExperimentConfig& config, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const CaseBundle b = build_case(config);
    const Coordinator coord(lift_explicit(b.qp, b.partitioning, config.split_weight));
    std::vector<OrderingConfig> orders = config.orderings;
    if (orders.empty()) orders.push_back(config.ordering);
    CertifyOptions opt;
    opt.power_iterations = config.power_iterations;
    opt.seed = config.seed;
    Json certs = Json::array();
    for (const auto& oc : orders) certs.push_back(to_json(certify(coord, make_ordering(oc, coord.lifted(), b), opt)));
    out << (certs.size() == 1 ? certs[0] : certs).dump(2) << '\n';
    return 0;
  });
}

int cmd_experiment(const ExperimentConfig& config, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (!config.variants || config.variants->empty()) config_error("experiment needs a non-empty \"variants\" list");
    const Setup s = prepare(config);
    const auto& variants = *config.variants;

    struct Outcome {
      std::optional<GsResult> result;
      std::optional<Error> error;
    };
    std::vector<std::future<Outcome>> jobs;
    for (const auto& v : variants)
      jobs.push_back(std::async(std::launch::async, [&config, &s, &v] {
        Outcome o;
        try {
          const OrderingSchedule order = make_ordering(v.ordering, s.coord->lifted(), s.bundle);
          o.result = run_variant(config, s, order, v.schedule, v.warm_start);
        } catch (const Error& e) {
          o.error = e;
        }
        return o;
      }));

    std::vector<TraceRow> rows;
    std::vector<Series> series;
    std::ostringstream failures;
    bool all_converged = true;
    int failed = 0;
    for (std::size_t i = 0; i < jobs.size(); ++i) {
      const Outcome o = jobs[i].get();
      const std::string& name = variants[i].name;
      if (o.error) {
        ++failed;
        failures << "# failed variant=" << name << ' ' << error_json(*o.error).dump() << '\n';
        continue;
      }
      all_converged = all_converged && o.result->converged;
      auto vr = rows_of(name, *o.result);
      Series line{name, {}};
      for (const auto& row : vr) line.points.emplace_back(static_cast<double>(row.entry.step), row.entry.error_w);
      series.push_back(std::move(line));
      rows.insert(rows.end(), vr.begin(), vr.end());
    }
    const std::string status = failed ? "failed" : (all_converged ? "converged" : "not_converged");
    std::ostringstream csv;
    write_trace_csv(csv, rows, {true, config.timing}, status);
    std::string text = csv.str();
    // failures sit above the status footer
    const auto footer = text.rfind("# status=");
    text.insert(footer, failures.str());
    out << text;

    if (!config.plot.empty()) {
      std::ofstream svg(config.plot);
      if (!svg) config_error("cannot write plot '" + config.plot + "'");
      ChartOptions co;
      co.title = config.case_kind + " case";
      co.y_label = "error_w";
      svg << render_log_chart(series, co);
    }
    return failed ? 1 : 0;
  });
}

}  // namespace mgcoord
