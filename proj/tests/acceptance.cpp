// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <string>

#include "mgcoord/coarsening.hpp"
#include "support.hpp"

using namespace mgcoord;
using namespace mgtest;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int failures = 0;

void report(const std::string& id, bool ok, const std::string& detail) {
  std::printf("%s %s: %s\n", ok ? "PASS" : "FAIL", id.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

void guarded(const std::string& id, const std::function<void()>& body) {
  try {
    body();
  } catch (const std::exception& e) {
    report(id, false, std::string("exception: ") + e.what());
  }
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

CoupledQP as_coupled(const UnconstrainedQP& q) {
  CoupledQP p;
  p.Q = q.Q.sparseView();
  p.c = q.c;
  p.A.resize(0, q.size());
  p.B.resize(0, 0);
  p.d.resize(0);
  p.Pi.resize(0, q.size());
  return p;
}

struct Instance {
  CoupledQP qp;
  Partitioning part;
};

/// Alternates random banded unconstrained problems and random chains, N <= 60.
Instance random_instance(int i, std::mt19937_64& rng) {
  const int Ks[] = {2, 3, 5};
  const int K = Ks[i % 3];
  if (i % 2 == 0) {
    std::uniform_int_distribution<int> size(std::max(K, 10), 60);
    const Index n = size(rng);
    const UnconstrainedQP q = random_banded(n, 1 + (i / 2) % 3, rng);
    return {as_coupled(q), Partitioning::contiguous(n, K)};
  }
  // 2 K M + K - 1 <= 60
  const int Mmax = (61 - K) / (2 * K);
  std::uniform_int_distribution<int> msize(1, Mmax);
  auto inst = random_chain(K, msize(rng), rng());
  return {inst.qp, inst.partitioning};
}

struct Temporal {
  CaseInstance inst;
  Coordinator coord;
  Vector oracle;
  Temporal() : inst(build_temporal(TemporalCaseSpec{})), coord(lift_explicit(inst.qp, inst.partitioning)) {
    oracle = solve_lifted(coord.lifted()).w;
  }
  GsResult run(const OrderingSchedule& order, std::size_t steps, double tol = 1e-300) const {
    GsOptions opt;
    opt.tol = tol;
    opt.max_steps = steps;
    opt.oracle = oracle;
    return run_gs(coord, CoordinationState::zeros(coord.lifted()), order, opt);
  }
};

/// Sum of squares of the 5-point Laplacian of an L x L field with zero boundary.
double laplacian_energy(const Matrix& e) {
  const Index L = e.rows();
  auto at = [&](Index i, Index j) { return (i < 0 || j < 0 || i >= L || j >= L) ? 0.0 : e(i, j); };
  double s = 0.0;
  for (Index i = 0; i < L; ++i)
    for (Index j = 0; j < L; ++j) {
      const double lap = 4.0 * e(i, j) - at(i - 1, j) - at(i + 1, j) - at(i, j - 1) - at(i, j + 1);
      s += lap * lap;
    }
  return s;
}

}  // namespace

int main() {
  const auto start = Clock::now();

  // 1 and 3 share the randomized instances.
  double worst_kappa = 0.0;
  guarded("criterion 1 (oracle equivalence)", [&] {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(2024);
    int certified = 0, tried = 0, agree = 0;
    double worst = 0.0;
    while (certified < 100 && tried < 400) {
      const Instance in = random_instance(tried++, rng);
      const Coordinator coord(lift_explicit(in.qp, in.part));
      const int K = in.part.num_partitions;
      const auto cert = certify(coord, lexicographic(K));
      if (!cert.converges) continue;
      ++certified;
      const auto res = converge(coord, lexicographic(K), 20000);
      const double err =
          (coord.lifted().owned_primal(res.state.stacked()) - solve_centralized(in.qp).primal).lpNorm<Eigen::Infinity>();
      worst = std::max(worst, err);
      if (res.converged && err <= 1e-7) ++agree;
      worst_kappa = std::max(worst_kappa, fit_rate_constant(res.trace, cert.spectral_radius));
    }
    const double secs = seconds_since(t0);
    report("criterion 1 (oracle equivalence)", certified >= 100 && agree == certified && secs < 60.0,
           std::to_string(agree) + "/" + std::to_string(certified) + " certified instances agree (" +
               std::to_string(tried) + " drawn), max owned-primal error " + fmt("%.2e", worst) + ", " +
               fmt("%.1f s", secs));
  });

  guarded("criterion 2 (one-sweep identity)", [&] {
    std::mt19937_64 rng(7);
    double worst = 0.0;
    for (int K : {2, 5}) {
      const auto inst = random_chain(K, 4, 100 + K);
      const Coordinator coord(lift_explicit(inst.qp, inst.partitioning));
      const auto order = lexicographic(K);
      const auto op = build_iteration_operator(coord, order);
      for (int t = 0; t < 20; ++t) {
        const Vector w = random_vector(coord.lifted().state_dim(), rng);
        const Vector next = coord.sweep(CoordinationState::from_stacked(coord.lifted(), w), order).stacked();
        worst = std::max(worst, (next - (op.S * w + op.r)).lpNorm<Eigen::Infinity>());
      }
    }
    report("criterion 2 (one-sweep identity)", worst <= 1e-10,
           "max |sweep(w) - (S w + r)| over 40 random w at K = 2 and 5: " + fmt("%.2e", worst));
  });

  // The paper-scale temporal case feeds 3 to 6.
  const Temporal temporal;
  const auto lex = lexicographic(10);

  guarded("criterion 3 (rate bound)", [&] {
    const double rho = certify(temporal.coord, lex).spectral_radius;
    const auto res = temporal.run(lex, 1000, 1e-12);
    const double kappa_t = fit_rate_constant(res.trace, rho);
    const double kappa = std::max(worst_kappa, kappa_t);
    report("criterion 3 (rate bound)", kappa <= 1e3 && worst_kappa > 0.0,
           "kappa = " + fmt("%.3g", worst_kappa) + " over the randomized instances, " + fmt("%.3g", kappa_t) +
               " on the temporal case (rho = " + fmt("%.6f", rho) + ")");
  });

  guarded("criterion 4 (temporal reproduction)", [&] {
    const auto t0 = Clock::now();
    const auto cold = temporal.run(lex, 60);
    const double e0 = cold.trace.front().error_w;
    std::size_t hit = 0;
    for (const auto& e : cold.trace)
      if (e.error_w <= 1e-3 * e0) {
        hit = e.step;
        break;
      }
    const auto t = build_transfer_temporal(10, 100, 4);
    const Vector warm = coarse_warm_start(temporal.inst.qp, temporal.coord.lifted(), t);
    const double w0 = (warm - temporal.oracle).norm();
    const double secs = seconds_since(t0);
    const bool ok = hit > 0 && hit <= 60 && w0 < e0 && secs < 120.0;
    report("criterion 4 (temporal reproduction)", ok,
           (hit ? "relative error <= 1e-3 at sweep " + std::to_string(hit)
                : "relative error " + fmt("%.3e", cold.trace.back().error_w / e0) + " after 60 sweeps") +
               ", warm e0 " + fmt("%.4g", w0) + " vs cold e0 " + fmt("%.4g", e0) + ", " + fmt("%.1f s", secs));
  });

  guarded("criterion 5 (sequential coarsening)", [&] {
    MultigridOptions opt;
    opt.gs.oracle = temporal.oracle;
    opt.gs.max_steps = 10;
    opt.gs.tol = 1e-300;
    const auto mg = run_multigrid(temporal.inst.qp, temporal.coord, 100, {{1, 2, 4, 5, 10, 20, 25, 50}, 1}, lex,
                                  case_level_factory(temporal.inst.metadata),
                                  CoordinationState::zeros(temporal.coord.lifted()), opt);
    const auto plain = temporal.run(lex, 10);
    const double a = plain.trace.at(10).error_w;
    const double b = mg.trace.at(10).error_w;
    report("criterion 5 (sequential coarsening)", a / b >= 10.0,
           "step-10 error " + fmt("%.4g", b) + " vs " + fmt("%.4g", a) + " without coarsening, ratio " +
               fmt("%.1f", a / b));
  });

  guarded("criterion 6 (ordering ablation)", [&] {
    const double e_lex = temporal.run(lex, 10).trace.at(10).error_w;
    const double e_rev = temporal.run(reverse_lexicographic(10), 10).trace.at(10).error_w;

    const auto sp = spatial_toy(4, 5);
    const Coordinator coord(lift_explicit(sp.qp, sp.partitioning));
    const auto rb = red_black(coord.lifted(), PartitionStructure::grid(4));
    const auto r_lex = converge(coord, lexicographic(16));
    const auto r_seq = converge(coord, rb, 5000, Execution::Sequential);
    const auto r_par = converge(coord, rb, 5000, Execution::Parallel);
    const double gap = (r_lex.state.stacked() - r_seq.state.stacked()).lpNorm<Eigen::Infinity>();
    bool identical = r_seq.trace.size() == r_par.trace.size() && r_seq.state.stacked() == r_par.state.stacked();
    for (std::size_t i = 0; identical && i < r_seq.trace.size(); ++i)
      identical = r_seq.trace[i].error_w == r_par.trace[i].error_w;
    const bool ok = e_rev < e_lex && r_lex.converged && r_seq.converged && gap <= 1e-7 && identical;
    report("criterion 6 (ordering ablation)", ok,
           "temporal step 10: reverse " + fmt("%.4g", e_rev) + " vs lexicographic " + fmt("%.4g", e_lex) +
               "; spatial P=4 M=5 red-black vs lexicographic limit gap " + fmt("%.2e", gap) +
               (identical ? ", parallel red-black bit-identical" : ", parallel red-black differs"));
  });

  guarded("criterion 7 (lifting correctness)", [&] {
    std::mt19937_64 rng(99);
    std::uniform_int_distribution<int> size(10, 60);
    const int Ks[] = {2, 3, 5};
    int passed = 0;
    bool exact = true;
    double worst = 0.0;
    for (int t = 0; t < 50; ++t) {
      const Index n = size(rng);
      const UnconstrainedQP q = random_banded(n, 1 + t % 3, rng);
      const auto lifted = build_lifted(q, Partitioning::contiguous(n, Ks[t % 3]));
      const auto rep = verify_lift(q, lifted);
      passed += rep.passed && !rep.loosened;
      worst = std::max({worst, rep.primal_discrepancy, rep.duplicate_mismatch});
      Matrix sum = Matrix::Zero(n, n);
      for (const auto& b : lifted.blocks)
        for (Index i = 0; i < b.num_vars(); ++i)
          for (Index j = 0; j < b.num_vars(); ++j) sum(b.original_index(i), b.original_index(j)) += b.Q(i, j);
      exact = exact && sum == q.Q;
    }
    const auto tt = temporal_toy(2, 3);
    const auto st = spatial_toy(2, 3);
    const auto rt = verify_lift(tt.qp, lift_explicit(tt.qp, tt.partitioning));
    const auto rs = verify_lift(st.qp, lift_explicit(st.qp, st.partitioning));
    worst = std::max({worst, rt.primal_discrepancy, rs.primal_discrepancy});
    const bool ok = passed == 50 && rt.passed && rs.passed && !rt.loosened && !rs.loosened && exact;
    report("criterion 7 (lifting correctness)", ok,
           std::to_string(passed) + "/50 random instances and " + std::to_string(rt.passed + rs.passed) +
               "/2 toy cases pass at 1e-8 (max discrepancy " + fmt("%.2e", worst) + "), half-split reassembly " +
               (exact ? "exact" : "NOT exact"));
  });

  guarded("criterion 8 (coarse-problem fidelity)", [&] {
    const TemporalCaseSpec spec;
    bool structure = true;
    double step_err = 0.0, avg_err = 0.0;
    for (int Mc : {4, 20}) {
      const int r = spec.M / Mc;
      const auto c = coarsen_problem(temporal.inst.qp, build_transfer_temporal(spec.K, spec.M, Mc));
      const TemporalLayout lay{spec.K, Mc};
      const Matrix A(c.A);
      const Vector Bd = c.B * c.d;
      for (int tc = 1; tc <= spec.K * Mc; ++tc) {
        const Index row = tc - 1;
        const int k = (tc - 1) / Mc;
        Vector expect = Vector::Zero(A.cols());
        expect(lay.x(tc)) = 1.0;
        if (tc > 1) expect(tc == k * Mc + 1 ? lay.copy(k) : lay.x(tc - 1)) = -1.0;
        const double coarse_step = -A(row, lay.u(tc));
        expect(lay.u(tc)) = A(row, lay.u(tc));
        structure = structure && Vector(A.row(row).transpose()) == expect;
        step_err = std::max(step_err, std::abs(coarse_step - r * spec.delta) / (r * spec.delta));
        double avg = 0.0;
        for (int tf = (tc - 1) * r + 1; tf <= tc * r; ++tf) avg += temporal_disturbance(spec, tf);
        avg /= r;
        avg_err = std::max(avg_err, std::abs(Bd(row) / (-r * spec.delta) - avg) / (1.0 + std::abs(avg)));
      }
    }
    report("criterion 8 (coarse-problem fidelity)", structure && step_err <= 1e-14 && avg_err <= 1e-13,
           std::string("M=100, M_c in {4, 20}: unit and -1 coefficients ") + (structure ? "exact" : "WRONG") +
               ", coarse step (M/M_c) delta to " + fmt("%.1e", step_err) + " relative, cell-average disturbance to " +
               fmt("%.1e", avg_err));
  });

  guarded("spatial check (Laplacian energy)", [&] {
    const SpatialCaseSpec spec;
    const auto inst = build_spatial(spec);
    const Coordinator coord(lift_explicit(inst.qp, inst.partitioning));
    const Vector zstar = solve_centralized(inst.qp).primal;
    const Matrix pstar = potential_field(inst.metadata, zstar);
    // coarse solution at M_c = 2, prolonged
    const auto t = build_transfer_spatial(spec.P, spec.M, 2);
    const Vector zc = t.T * solve_centralized(coarsen_problem(inst.qp, t)).primal;
    const Matrix e_coarse = potential_field(inst.metadata, zc) - pstar;
    // one cold fine sweep
    const auto swept = coord.sweep(CoordinationState::zeros(coord.lifted()), lexicographic(spec.P * spec.P));
    const Matrix e_fine = potential_field(inst.metadata, coord.lifted().owned_primal(swept.stacked())) - pstar;
    const double ec = laplacian_energy(e_coarse);
    const double ef = laplacian_energy(e_fine);
    report("spatial check (Laplacian energy)", ec < ef,
           "|Lap e|^2 of prolonged coarse error " + fmt("%.4g", ec) + " vs cold fine-sweep error " + fmt("%.4g", ef) +
               " (per unit error energy " + fmt("%.3g", ec / e_coarse.squaredNorm()) + " vs " +
               fmt("%.3g", ef / e_fine.squaredNorm()) + ")");
  });

  std::printf("%s: %d failing, %.1f s total\n", failures ? "FAIL" : "PASS", failures, seconds_since(start));
  return failures ? 1 : 0;
}
