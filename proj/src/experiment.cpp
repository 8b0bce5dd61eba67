#include "lagflow/experiment.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace lagflow {

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

Experiment::Experiment(RunConfig cfg) : cfg_(std::move(cfg)) {
  check(cfg_.solver);
  mesh_ = build_domain_mesh(cfg_.domain, cfg_.h_max);
  ref_ = init_reference_density(mesh_, preset_initial_density(cfg_.initial));
  model_.internal = PowerLaw(cfg_.m);
  model_.potential = cfg_.potential.make();
  assembler_ = std::make_unique<Assembler>(mesh_, ref_, model_, cfg_.quadrature);
}

double Experiment::reference_mass() const {
  if (cfg_.reference_mass) return *cfg_.reference_mass;
  const double factor = std::holds_alternative<QuarterDiscDomain>(cfg_.domain) ? 4.0 : 1.0;
  return factor * ref_.total_mass;
}

std::function<double(const Vec2&)> Experiment::reference_at(double t) const {
  const double mass = reference_mass();
  switch (cfg_.reference) {
    case ReferenceKind::none:
      return nullptr;
    case ReferenceKind::barenblatt_free: {
      const double t0 = cfg_.reference_t0;
      if (!(t0 + 6.0 * t > 0.0)) return nullptr;
      return [t0, t, mass](const Vec2& x) { return barenblatt_free_evolved(t0, t, x, mass); };
    }
    case ReferenceKind::barenblatt_confined:
      return [mass](const Vec2& x) { return barenblatt_confined_steady(x, mass); };
  }
  return nullptr;
}

double Experiment::l1_error(const LagrangianState& state) const {
  const auto oracle = reference_at(state.time);
  if (!oracle) return -1.0;
  return lagflow::l1_error(pushforward_density(state, mesh_, ref_), oracle);
}

RunResult Experiment::run(RunOptions options) const {
  if (cfg_.reference != ReferenceKind::none && !options.error)
    options.error = [this](const LagrangianState& s) { return l1_error(s); };
  if (options.frame_every == 0) options.frame_every = cfg_.frame_every;
  return lagflow::run(*assembler_, initial_state(), cfg_.solver, options);
}

// ---------------------------------------------------------------------------
// Output files

void write_diagnostics_header(std::ostream& out) { out << "t,energy,mass,min_det,newton_iters,dissipation,l1_error\n"; }

void write_diagnostics_row(std::ostream& out, const DiagnosticsRecord& r) {
  out << format_number(r.t) << ',' << format_number(r.energy) << ',' << format_number(r.mass) << ','
      << format_number(r.min_det) << ',' << r.newton_iters << ',' << format_number(r.cumulative_dissipation) << ','
      << (r.l1_error >= 0.0 ? format_number(r.l1_error) : std::string()) << '\n';
}

void write_frame_csv(std::ostream& out, const LagrangianState& state, const PiecewiseDensity& density) {
  out << "id,x,y\n";
  for (std::size_t l = 0; l < state.positions.size(); ++l)
    out << l << ',' << format_number(state.positions[l].x()) << ',' << format_number(state.positions[l].y()) << '\n';
  out << "tri,density\n";
  for (int m = 0; m < density.size(); ++m) out << m << ',' << format_number(density.density[m]) << '\n';
}

void write_frame_vtk(std::ostream& out, const LagrangianState& state, const TriangleMesh& mesh,
                     const PiecewiseDensity& density, const std::string& title) {
  const int L = mesh.num_nodes(), M = mesh.num_triangles();
  out << "# vtk DataFile Version 3.0\n" << title << "\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << L << " double\n";
  for (const Vec2& p : state.positions) out << format_number(p.x()) << ' ' << format_number(p.y()) << " 0\n";
  out << "CELLS " << M << ' ' << 4 * M << '\n';
  for (const auto& t : mesh.triangles()) out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  out << "CELL_TYPES " << M << '\n';
  for (int m = 0; m < M; ++m) out << "5\n";
  out << "CELL_DATA " << M << "\nSCALARS density double 1\nLOOKUP_TABLE default\n";
  for (double d : density.density) out << format_number(d) << '\n';
}

FrameData read_frame_csv(std::istream& in) {
  FrameData f;
  std::string line;
  int line_no = 0;
  enum { start, nodes, tris } part = start;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line == "id,x,y") {
      part = nodes;
      continue;
    }
    if (line == "tri,density") {
      part = tris;
      continue;
    }
    std::istringstream ls(line);
    std::string field;
    std::vector<double> values;
    while (std::getline(ls, field, ',')) {
      try {
        values.push_back(std::stod(field));
      } catch (const std::exception&) {
        throw Error("frame line " + std::to_string(line_no) + ": bad number '" + field + "'");
      }
    }
    if (part == nodes && values.size() == 3 && values[0] == static_cast<double>(f.positions.size())) {
      f.positions.emplace_back(values[1], values[2]);
    } else if (part == tris && values.size() == 2 && values[0] == static_cast<double>(f.density.size())) {
      f.density.push_back(values[1]);
    } else {
      throw Error("frame line " + std::to_string(line_no) + ": unexpected row '" + line + "'");
    }
  }
  return f;
}

int run_experiment(const RunConfig& cfg, std::ostream* progress) {
  namespace fs = std::filesystem;
  const fs::path dir(cfg.output_dir);
  fs::create_directories(dir);
  std::ofstream log(dir / "run.log");
  if (!log) throw Error("cannot write to " + dir.string());
  log << "# configuration\n" << render_config(cfg) << '\n';

  const auto started = std::chrono::steady_clock::now();
  int status = 0;
  try {
    const Experiment exp(cfg);
    log << "mesh: " << describe(cfg.domain) << ", " << exp.mesh().num_nodes() << " nodes, "
        << exp.mesh().num_triangles() << " triangles\n";
    log << "steps: " << cfg.solver.num_steps() << " of tau = " << format_number(cfg.solver.tau) << '\n';
    {
      std::ofstream mesh_out(dir / "mesh.txt");
      write_mesh(mesh_out, exp.mesh());
    }

    std::ofstream diag(dir / "diagnostics.csv");
    write_diagnostics_header(diag);

    RunOptions opts;
    opts.keep_frames = false;
    opts.on_record = [&](const DiagnosticsRecord& r, const LagrangianState&) {
      write_diagnostics_row(diag, r);
      diag.flush();
      if (progress && r.step > 0)
        *progress << "step " << r.step << "  t = " << r.t << "  energy = " << r.energy
                  << "  newton = " << r.newton_iters << '\n';
    };
    opts.on_frame = [&](const Frame& f) {
      const PiecewiseDensity rho = pushforward_density(f.state, exp.mesh(), exp.reference());
      const std::string stem = "frame_" + std::to_string(f.step);
      std::ofstream csv(dir / (stem + ".csv"));
      write_frame_csv(csv, f.state, rho);
      if (cfg.vtk) {
        std::ofstream vtk(dir / (stem + ".vtk"));
        write_frame_vtk(vtk, f.state, exp.mesh(), rho, cfg.name + " t=" + format_number(f.state.time));
      }
    };
    const RunResult res = exp.run(opts);
    if (!res.completed) {
      log << "FAILED: " << res.failure << '\n';
      status = 1;
    } else {
      const auto& last = res.diagnostics.back();
      log << "completed " << last.step << " steps, final energy " << format_number(last.energy) << '\n';
    }
  } catch (const Error& e) {
    log << "FAILED: " << e.what() << '\n';
    status = 1;
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  log << "wall time: " << seconds << " s\n";
  return status;
}

}  // namespace lagflow
