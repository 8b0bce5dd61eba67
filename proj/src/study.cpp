#include "lagflow/study.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <random>

#include <Eigen/LU>

#include "lagflow/experiment.hpp"

namespace lagflow {

ConvergenceStudy convergence_study(const std::vector<double>& h_values, double final_time, double ratio) {
  ConvergenceStudy study;
  std::vector<std::pair<double, double>> series;
  for (double h : h_values) {
    RunConfig cfg = preset_config("experiment1");
    cfg.h_max = h;
    const int steps = static_cast<int>(std::ceil(final_time / (ratio * h * h) - 1e-9));
    cfg.solver.tau = final_time / steps;
    cfg.solver.final_time = final_time;

    ConvergenceRow row;
    row.h_max = h;
    row.tau = cfg.solver.tau;
    row.steps = cfg.solver.num_steps();
    const auto started = std::chrono::steady_clock::now();
    const Experiment exp(cfg);
    row.nodes = exp.mesh().num_nodes();
    RunOptions opts;
    opts.keep_frames = false;
    opts.error = [](const LagrangianState&) { return -1.0; };
    const RunResult res = exp.run(opts);
    row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    if (res.completed) {
      row.l1_error = exp.l1_error(res.final_state);
      series.emplace_back(h, row.l1_error);
    } else {
      row.l1_error = -1.0;
      if (study.failure.empty()) study.failure = "h_max = " + format_number(h) + ": " + res.failure;
    }
    study.rows.push_back(row);
  }
  study.slope = series.size() >= 2 ? fit_loglog_slope(series) : 0.0;
  return study;
}

ConsistencyStudy consistency_study(const std::vector<double>& eps_values) {
  struct Case {
    LatticeKind kind;
    std::string lattice;
    SmoothFlow flow;
    EnergyModel model;
    Vec2 w0;
  };
  EnergyModel confined;
  confined.potential = Potential::quadratic(2.0);
  const std::vector<Case> cases{
      {LatticeKind::hexagonal, "hexagonal", dilation_flow(), confined, {0.3, 0.2}},
      {LatticeKind::hexagonal, "hexagonal", shear_drift_flow(), confined, {0.3, 0.2}},
      {LatticeKind::skew, "skew", skew_counterexample_flow(), EnergyModel{}, Vec2::Zero()},
  };
  const double t = 0.5;

  ConsistencyStudy study;
  for (const Case& c : cases) {
    std::vector<std::pair<double, double>> momentum, impulse;
    for (double eps : eps_values) {
      const double tau = eps / 10.0;
      const ConsistencyResult r = consistency_probe(c.flow, c.model, c.kind, eps, tau, t, c.w0);
      study.rows.push_back({c.lattice, c.flow.name, eps, tau, r.momentum_residual, r.impulse_residual});
      momentum.emplace_back(eps, r.momentum_residual);
      impulse.emplace_back(eps, r.impulse_residual);
    }
    study.series.push_back({c.lattice, c.flow.name, fit_loglog_slope(momentum), fit_loglog_slope(impulse)});
  }
  return study;
}

bool IdentityStudy::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed(); }) &&
         std::all_of(witnesses.begin(), witnesses.end(), [](const auto& w) { return w.passed(); });
}

IdentityStudy identity_study(unsigned seed, int num_witnesses) {
  IdentityStudy study;
  study.checks = identity_checks(seed);

  std::mt19937 rng(seed + 1);
  std::uniform_real_distribution<double> entry(-1.0, 1.0), rho(0.2, 3.0), m(1.5, 4.0);
  while (static_cast<int>(study.witnesses.size()) < num_witnesses) {
    WitnessSample s;
    s.a << entry(rng), entry(rng), entry(rng), entry(rng);
    if (s.a.determinant() < 0.05) continue;
    s.rho = rho(rng);
    s.m = m(rng);
    s.witness = nonconvexity_witness(s.a, s.rho, PowerLaw(s.m));
    s.relative_fd_error = std::abs(s.witness.finite_difference - s.witness.analytic) / std::abs(s.witness.analytic);
    study.witnesses.push_back(s);
  }
  return study;
}

std::vector<std::string> study_kinds() { return {"convergence", "consistency", "lemmas"}; }

int run_study(const std::string& kind, const std::string& out_dir, std::ostream& report) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  std::ofstream csv(fs::path(out_dir) / (kind + ".csv"));
  if (!csv) throw Error("cannot write to " + out_dir);

  if (kind == "convergence") {
    const ConvergenceStudy s = convergence_study();
    csv << "h_max,tau,steps,nodes,l1_error\n";
    for (const auto& r : s.rows) {
      csv << format_number(r.h_max) << ',' << format_number(r.tau) << ',' << r.steps << ',' << r.nodes << ','
          << format_number(r.l1_error) << '\n';
      report << "h_max " << r.h_max << "  tau " << r.tau << "  nodes " << r.nodes << "  l1 " << r.l1_error << "  ("
             << r.seconds << " s)\n";
    }
    csv << "# slope," << format_number(s.slope) << "\n# reference_slope," << ConvergenceStudy::reference_slope
        << '\n';
    report << "slope " << s.slope << " (reference " << ConvergenceStudy::reference_slope << ")\n";
    if (!s.completed()) report << "FAILED: " << s.failure << '\n';
    return s.completed() ? 0 : 1;
  }

  if (kind == "consistency") {
    const ConsistencyStudy s = consistency_study();
    csv << "lattice,flow,eps,tau,momentum_residual,impulse_residual\n";
    for (const auto& r : s.rows)
      csv << r.lattice << ',' << r.flow << ',' << format_number(r.eps) << ',' << format_number(r.tau) << ','
          << format_number(r.momentum_residual) << ',' << format_number(r.impulse_residual) << '\n';
    for (const auto& f : s.series) {
      csv << "# slope," << f.lattice << ',' << f.flow << ',' << format_number(f.momentum_slope) << ','
          << format_number(f.impulse_slope) << '\n';
      report << f.lattice << ' ' << f.flow << ": momentum order " << f.momentum_slope << ", impulse order "
             << f.impulse_slope << '\n';
    }
    return 0;
  }

  if (kind == "lemmas") {
    const IdentityStudy s = identity_study();
    csv << "check,max_deviation,tolerance,status\n";
    for (const auto& c : s.checks) {
      csv << c.name << ',' << format_number(c.max_deviation) << ',' << format_number(c.tolerance) << ','
          << (c.passed() ? "PASS" : "FAIL") << '\n';
      report << (c.passed() ? "PASS " : "FAIL ") << c.name << "  max deviation " << c.max_deviation << '\n';
    }
    int witness_failures = 0;
    for (std::size_t i = 0; i < s.witnesses.size(); ++i) {
      const auto& w = s.witnesses[i];
      csv << "nonconvexity witness " << i << ',' << format_number(w.relative_fd_error) << ",1e-06,"
          << (w.passed() ? "PASS" : "FAIL") << '\n';
      witness_failures += !w.passed();
    }
    report << (witness_failures ? "FAIL " : "PASS ") << "nonconvexity witness, " << s.witnesses.size()
           << " samples, " << witness_failures << " failures\n";
    return s.passed() ? 0 : 1;
  }

  throw Error("unknown study '" + kind + "' (expected convergence, consistency or lemmas)");
}

}  // namespace lagflow
