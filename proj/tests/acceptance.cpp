// End-to-end acceptance run. Prints one PASS/FAIL line per criterion (with
// indented detail lines below some of them) and exits nonzero if any failed.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include <CLI11.hpp>

#include "lagflow/experiment.hpp"
#include "lagflow/study.hpp"
#include "oracles.hpp"

using namespace lagflow;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool passed = false;
  std::string summary;
  std::vector<std::string> notes;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

/// Reads a diagnostics.csv back into records.
std::vector<DiagnosticsRecord> read_diagnostics(const fs::path& path) {
  std::ifstream in(path);
  std::string line;
  if (!std::getline(in, line) || line != "t,energy,mass,min_det,newton_iters,dissipation,l1_error")
    throw Error("unexpected diagnostics header in " + path.string());
  std::vector<DiagnosticsRecord> out;
  while (std::getline(in, line)) {
    std::vector<std::string> f;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) f.push_back(cell);
    if (f.size() == 6) f.emplace_back();
    if (f.size() != 7) throw Error("bad diagnostics row in " + path.string() + ": " + line);
    DiagnosticsRecord r;
    r.step = static_cast<int>(out.size());
    r.t = std::stod(f[0]);
    r.energy = std::stod(f[1]);
    r.mass = std::stod(f[2]);
    r.min_det = std::stod(f[3]);
    r.newton_iters = std::stoi(f[4]);
    r.cumulative_dissipation = std::stod(f[5]);
    r.l1_error = f[6].empty() ? -1.0 : std::stod(f[6]);
    out.push_back(r);
  }
  return out;
}

struct InvariantReport {
  bool mass_exact = true, monotone = true, oriented = true, dissipation_bounded = true;
  bool ok() const { return mass_exact && monotone && oriented && dissipation_bounded; }
};

InvariantReport invariants(const std::vector<DiagnosticsRecord>& d) {
  InvariantReport r;
  if (d.empty()) return {false, false, false, false};
  const double e0 = d.front().energy;
  for (std::size_t n = 0; n < d.size(); ++n) {
    r.mass_exact = r.mass_exact && d[n].mass == d.front().mass;
    r.oriented = r.oriented && d[n].min_det > 0.0;
    r.dissipation_bounded = r.dissipation_bounded && d[n].cumulative_dissipation <= e0;
    if (n > 0) r.monotone = r.monotone && d[n].energy <= d[n - 1].energy + 1e-12 * std::abs(d[n - 1].energy);
  }
  return r;
}

// --- criterion 1 -----------------------------------------------------------

Outcome derivative_exactness() {
  const auto t0 = Clock::now();
  double worst_z = 0.0, worst_h = 0.0;
  int max_nodes = 0;
  for (int k = 0; k < 20; ++k) {
    std::mt19937 rng(5000 + k);
    const TriangleMesh mesh = oracle::random_square_mesh(rng, 15 + 35 * (k % 4) / 3, k % 2 == 0);
    max_nodes = std::max(max_nodes, mesh.num_nodes());
    const ReferenceDensity ref = init_reference_density(mesh, oracle::wavy_density);
    EnergyModel model;
    model.internal = PowerLaw(k % 3 == 0 ? 2.0 : 3.0);
    model.potential = k % 3 == 2 ? Potential::quadratic(5.0) : Potential::quartic();
    const Assembler a(mesh, ref, model,
                      k % 4 < 2 ? PotentialQuadrature::exact_gradient : PotentialQuadrature::half_weight);
    const LagrangianState prev = oracle::random_state(rng, mesh, 0.02);
    const LagrangianState x = oracle::random_state(rng, mesh, 0.03);
    const auto c = oracle::check_derivatives(a, x, prev, 0.05);
    worst_z = std::max(worst_z, c.residual_error);
    worst_h = std::max(worst_h, c.hessian_error);
  }
  const double secs = seconds_since(t0);
  Outcome o;
  o.passed = worst_z <= 1e-6 && worst_h <= 1e-5 && max_nodes <= 50 && secs < 10.0;
  o.summary = "gradient/Hessian exactness: 20 random states (<= " + std::to_string(max_nodes) +
              " nodes), max rel. residual error " + fmt("%.2e", worst_z) + " (tol 1e-6), Hessian " +
              fmt("%.2e", worst_h) + " (tol 1e-5), " + fmt("%.1f", secs) + " s";
  return o;
}

// --- criterion 3 -----------------------------------------------------------

struct BarenblattRun {
  Outcome outcome;
  std::vector<DiagnosticsRecord> diagnostics;
};

BarenblattRun barenblatt_tracking() {
  const auto t0 = Clock::now();
  RunConfig cfg = preset_config("experiment1");
  cfg.solver.final_time = 0.5;
  const Experiment exp(cfg);
  const RunResult res = exp.run();
  const double secs = seconds_since(t0);

  BarenblattRun out;
  out.diagnostics = res.diagnostics;
  Outcome& o = out.outcome;
  double worst = 0.0;
  for (const auto& r : res.diagnostics) worst = std::max(worst, r.l1_error);

  // Energy of the evolved profile decays like (t + t0/6)^(-2/3).
  const double shift = cfg.reference_t0 / 6.0;
  std::vector<std::pair<double, double>> shifted, plain;
  for (const auto& r : res.diagnostics) {
    if (r.t < 0.05 - 1e-12 || r.t > 0.5 + 1e-12) continue;
    shifted.emplace_back(r.t + shift, r.energy);
    plain.emplace_back(r.t, r.energy);
  }
  const double slope = shifted.size() >= 2 ? fit_loglog_slope(shifted) : 0.0;
  const double limit = 2.0 * cfg.h_max;
  o.passed = res.completed && worst <= limit && std::abs(slope + 2.0 / 3.0) <= 0.1 && secs < 120.0;
  o.summary = "experiment 1 Barenblatt tracking: max l1 error " + fmt("%.4f", worst) + " (limit 2 h_max = " +
              fmt("%.2f", limit) + "), energy slope " + fmt("%.4f", slope) + " (target -2/3 +- 0.1), " +
              fmt("%.1f", secs) + " s";
  if (!res.completed) o.notes.push_back("run failed: " + res.failure);
  o.notes.push_back("energy slope against unshifted t: " + fmt("%.4f", plain.size() >= 2 ? fit_loglog_slope(plain) : 0.0));
  // The profile taken literally at time t0 + t instead of t0 + 6t.
  const PiecewiseDensity rho = pushforward_density(res.final_state, exp.mesh(), exp.reference());
  const double t = res.final_state.time;
  const double literal =
      l1_error(rho, [&](const Vec2& x) { return barenblatt_free(cfg.reference_t0 + t, x, 1.0); });
  o.notes.push_back("l1 error at t = " + fmt("%.2f", t) + " against the profile at t0 + t (unscaled clock): " +
                    fmt("%.4f", literal));
  return out;
}

// --- criterion 4 -----------------------------------------------------------

Outcome convergence_order() {
  const auto t0 = Clock::now();
  const ConvergenceStudy s = convergence_study({0.2, 0.1, 0.05}, 0.2, 0.4);
  const double secs = seconds_since(t0);
  Outcome o;
  o.passed = s.completed() && s.slope >= 1.0 && secs < 300.0;
  const bool in_band = s.slope >= 1.0 && s.slope <= 1.4;
  o.summary = "convergence order: slope " + fmt("%.3f", s.slope) + " (>= 1.0; reference 1.18; band [1.0, 1.4] " +
              (in_band ? "met" : "NOT met") + "), " + fmt("%.1f", secs) + " s";
  for (const auto& r : s.rows)
    o.notes.push_back("h_max " + fmt("%.3f", r.h_max) + "  tau " + fmt("%.5f", r.tau) + "  l1 " +
                      fmt("%.5f", r.l1_error));
  if (!s.completed()) o.notes.push_back("failure: " + s.failure);
  return o;
}

// --- criterion 5 -----------------------------------------------------------

Outcome confined_relaxation(const std::vector<DiagnosticsRecord>& d, bool completed, double secs) {
  std::vector<std::pair<double, double>> series;
  for (const auto& r : d)
    if (r.t >= 0.01 - 1e-12 && r.t <= 0.08 + 1e-12 && r.l1_error > 0.0) series.emplace_back(r.t, r.l1_error);
  const double rate = series.size() >= 2 ? fit_exponential_rate(series) : 0.0;
  Outcome o;
  o.passed = completed && rate >= 4.0 && rate <= 6.0 && secs < 180.0;
  o.summary = "experiment 3 confined relaxation: l1 decay rate " + fmt("%.3f", rate) + " on [0.01, 0.08] (target [4, 6]), " +
              fmt("%.1f", secs) + " s";
  if (!series.empty())
    o.notes.push_back("l1 distance " + fmt("%.4f", series.front().second) + " at t = 0.01, " +
                      fmt("%.4f", series.back().second) + " at t = 0.08");
  return o;
}

// --- criterion 6 -----------------------------------------------------------

Outcome consistency() {
  const auto t0 = Clock::now();
  const ConsistencyStudy s = consistency_study({0.1, 0.05, 0.025});
  const double secs = seconds_since(t0);
  bool hex_ok = true, skew_ok = true;
  std::string detail;
  for (const auto& f : s.series) {
    if (f.lattice == "hexagonal")
      hex_ok = hex_ok && f.momentum_slope >= 2.7 && f.impulse_slope >= 2.7;
    else
      skew_ok = skew_ok && f.impulse_slope < 3.0;
    detail += (detail.empty() ? "" : "; ") + f.lattice + " " + f.flow + " " + fmt("%.2f", f.momentum_slope) + "/" +
              fmt("%.2f", f.impulse_slope);
  }
  Outcome o;
  o.passed = hex_ok && skew_ok && secs < 30.0;
  o.summary = "consistency orders (momentum/impulse): " + detail + " (hexagonal >= 2.7, skew impulse < 3), " +
              fmt("%.2f", secs) + " s";
  return o;
}

// --- criteria 7, 8 ---------------------------------------------------------

Outcome identity_suite() {
  const auto t0 = Clock::now();
  const auto checks = identity_checks();
  const double secs = seconds_since(t0);
  Outcome o;
  o.passed = secs < 5.0;
  std::string detail;
  for (const auto& c : checks) {
    o.passed = o.passed && c.passed();
    o.notes.push_back(std::string(c.passed() ? "ok   " : "FAIL ") + c.name + ": max deviation " +
                      fmt("%.2e", c.max_deviation) + " (tol " + fmt("%.0e", c.tolerance) + ")");
  }
  o.summary = "identity suite: " + std::to_string(checks.size()) + " checks, " + fmt("%.3f", secs) + " s";
  return o;
}

Outcome nonconvexity() {
  const auto t0 = Clock::now();
  const IdentityStudy s = identity_study(12345, 20);
  const double secs = seconds_since(t0);
  int bad = 0;
  double worst = 0.0, largest = -1e300;
  for (const auto& w : s.witnesses) {
    bad += !w.passed();
    worst = std::max(worst, w.relative_fd_error);
    largest = std::max(largest, w.witness.analytic);
    const double expected = 2.0 * w.witness.s_bar * PowerLaw(w.m).htilde_d1(w.witness.s_bar);
    if (w.witness.analytic != expected) ++bad;
  }
  Outcome o;
  o.passed = bad == 0 && secs < 5.0;
  o.summary = "non-convexity witness: 20 samples, " + std::to_string(bad) + " failures, largest value " +
              fmt("%.3e", largest) + " (< 0), max FD rel. error " + fmt("%.2e", worst) + " (tol 1e-6)";
  return o;
}

// --- criterion 9 -----------------------------------------------------------

struct FullRun {
  std::string name;
  int status = 1;
  double seconds = 0.0;
  std::vector<DiagnosticsRecord> diagnostics;
  int frames = 0;
};

FullRun full_run(const std::string& name, const fs::path& out) {
  FullRun r;
  r.name = name;
  RunConfig cfg = preset_config(name);
  cfg.output_dir = (out / name).string();
  fs::remove_all(cfg.output_dir);
  const auto t0 = Clock::now();
  r.status = run_experiment(cfg);
  r.seconds = seconds_since(t0);
  if (fs::exists(fs::path(cfg.output_dir) / "diagnostics.csv"))
    r.diagnostics = read_diagnostics(fs::path(cfg.output_dir) / "diagnostics.csv");
  for (const auto& e : fs::directory_iterator(cfg.output_dir))
    if (e.path().extension() == ".csv" && e.path().stem().string().rfind("frame_", 0) == 0) ++r.frames;
  return r;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  std::string out = "acceptance_out";
  app.add_option("--out", out, "directory for the full experiment outputs");
  CLI11_PARSE(app, argc, argv);
  fs::create_directories(out);

  std::vector<Outcome> results(9);
  results[0] = derivative_exactness();
  results[6] = identity_suite();
  results[7] = nonconvexity();
  results[5] = consistency();
  BarenblattRun c3 = barenblatt_tracking();
  results[2] = c3.outcome;

  std::vector<FullRun> runs;
  for (const auto& name : preset_names()) {
    std::cerr << "running " << name << " ..." << std::endl;
    runs.push_back(full_run(name, out));
  }
  const FullRun& exp3 = runs[2];
  results[4] = confined_relaxation(exp3.diagnostics, exp3.status == 0, exp3.seconds);
  results[3] = convergence_order();

  {
    Outcome& o = results[1];
    o.passed = true;
    std::vector<std::pair<std::string, const std::vector<DiagnosticsRecord>*>> all{
        {"experiment1 (T = 0.5)", &c3.diagnostics}};
    for (const auto& r : runs) all.emplace_back(r.name, &r.diagnostics);
    for (const auto& [name, d] : all) {
      const InvariantReport rep = invariants(*d);
      o.passed = o.passed && rep.ok();
      o.notes.push_back(std::string(rep.ok() ? "ok   " : "FAIL ") + name + ": " + std::to_string(d->size()) +
                        " records, mass exact " + (rep.mass_exact ? "yes" : "no") + ", energy monotone " +
                        (rep.monotone ? "yes" : "no") + ", min det > 0 " + (rep.oriented ? "yes" : "no") +
                        ", dissipation <= E0 " + (rep.dissipation_bounded ? "yes" : "no"));
    }
    o.summary = "structural invariants over " + std::to_string(all.size()) + " experiment runs";
  }

  {
    Outcome& o = results[8];
    o.passed = true;
    std::string detail;
    for (const auto& r : runs) {
      const bool ok = r.status == 0 && r.frames >= 2;
      o.passed = o.passed && ok;
      detail += (detail.empty() ? "" : "; ") + r.name + " " + (ok ? "ok" : "FAILED") + " (" +
                std::to_string(r.diagnostics.empty() ? 0 : r.diagnostics.size() - 1) + " steps, " +
                std::to_string(r.frames) + " frames, " + fmt("%.1f", r.seconds) + " s)";
    }
    o.summary = "full-scale experiments: " + detail + "; frames in " + out;
  }

  int failed = 0;
  for (std::size_t i = 0; i < results.size(); ++i) {
    const Outcome& o = results[i];
    failed += !o.passed;
    std::cout << (o.passed ? "PASS" : "FAIL") << "  [" << i + 1 << "] " << o.summary << '\n';
    for (const auto& n : o.notes) std::cout << "        " << n << '\n';
  }
  std::cout << (failed ? std::to_string(failed) + " of 9 criteria failed" : std::string("all 9 criteria passed"))
            << std::endl;
  return failed ? 1 : 0;
}
