#include "lagflow/config.hpp"

#include <charconv>
#include <cstdio>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace lagflow {

Potential PotentialSpec::make() const {
  switch (kind) {
    case Potential::Kind::zero:
      return Potential::zero();
    case Potential::Kind::quadratic:
      return Potential::quadratic(lambda);
    case Potential::Kind::quartic:
      return Potential::quartic();
    case Potential::Kind::custom:
      break;
  }
  throw Error("custom potentials cannot be configured from text");
}

namespace {

std::string join(const std::vector<std::string>& parts) {
  std::string out;
  for (const auto& p : parts) out += (out.empty() ? "" : "\n") + p;
  return out;
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> messages)
    : Error(join(messages)), messages_(std::move(messages)) {}

std::string to_string(ReferenceKind kind) {
  switch (kind) {
    case ReferenceKind::none:
      return "none";
    case ReferenceKind::barenblatt_free:
      return "barenblatt_free";
    case ReferenceKind::barenblatt_confined:
      return "barenblatt_confined";
  }
  return "?";
}

std::string to_string(PotentialQuadrature quadrature) {
  return quadrature == PotentialQuadrature::exact_gradient ? "exact_gradient" : "paper61";
}

std::vector<std::string> preset_names() { return {"experiment1", "experiment2", "experiment3", "experiment4"}; }

RunConfig preset_config(const std::string& name) {
  RunConfig c;
  c.name = name;
  c.output_dir = name;
  c.vtk = true;
  if (name == "experiment1") {
    c.domain = QuarterDiscDomain{barenblatt_support_radius(0.01)};
    c.h_max = 0.05;
    c.initial = {InitialDensitySpec::Kind::barenblatt_t0, 0.01};
    c.solver.tau = 0.001;
    c.solver.final_time = 2.0;
    c.frame_every = 100;
    c.reference = ReferenceKind::barenblatt_free;
    c.reference_t0 = 0.01;
    c.reference_mass = 1.0;
  } else if (name == "experiment2") {
    c.domain = SquareDomain{-1.5, 1.5, -1.5, 1.5};
    c.h_max = 0.1;
    c.initial.kind = InitialDensitySpec::Kind::exp2;
    c.solver.tau = 0.001;
    c.solver.final_time = 0.1;
    c.frame_every = 5;
    c.reference = ReferenceKind::barenblatt_free;
    c.reference_t0 = 0.0;
  } else if (name == "experiment3") {
    c.domain = SquareDomain{-1.5, 1.5, -1.5, 1.5};
    c.h_max = 0.1;
    c.potential = {Potential::Kind::quadratic, 5.0};
    c.initial.kind = InitialDensitySpec::Kind::two_peaks;
    c.solver.tau = 0.001;
    c.solver.final_time = 0.2;
    c.frame_every = 10;
    c.reference = ReferenceKind::barenblatt_confined;
  } else if (name == "experiment4") {
    c.domain = DiscDomain{1.0};
    c.h_max = 0.05;
    c.potential.kind = Potential::Kind::quartic;
    c.initial.kind = InitialDensitySpec::Kind::bump;
    c.solver.tau = 0.005;
    c.solver.final_time = 0.02;
    c.frame_every = 1;
  } else {
    throw Error("unknown preset '" + name + "' (expected experiment1 .. experiment4)");
  }
  return c;
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

struct Entry {
  std::string value;
  int line = 0;
};

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

class Parser {
 public:
  explicit Parser(const std::string& text) { lex(text); }

  RunConfig build() {
    RunConfig cfg;
    bool preset = false;
    if (const Entry* e = find("run", "preset")) {
      try {
        cfg = preset_config(e->value);
        preset = true;
      } catch (const Error& err) {
        error(e->line, err.what());
      }
    }
    apply_run(cfg);
    apply_mesh(cfg, preset);
    apply_model(cfg, preset);
    apply_solver(cfg);
    apply_output(cfg);
    if (!preset) {
      require("run", "tau");
      require("run", "final_time");
      require("mesh", "h_max");
      require("model", "initial");
    }
    if (cfg.solver.final_time < cfg.solver.tau) {
      const Entry* e = find("run", "final_time");
      error(e ? e->line : last_line_, "final_time must be at least tau");
    }
    for (const auto& [key, entry] : entries_)
      if (!used_.count(key)) error(entry.line, "unknown key '" + key.second + "' in [" + key.first + "]");
    if (!errors_.empty()) throw ConfigError(errors_);
    return cfg;
  }

 private:
  using Key = std::pair<std::string, std::string>;

  void lex(const std::string& text) {
    static const std::set<std::string> sections{"run", "mesh", "model", "solver", "output"};
    std::istringstream in(text);
    std::string raw, section;
    int line = 0;
    while (std::getline(in, raw)) {
      ++line;
      const auto hash = raw.find('#');
      const std::string s = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
      if (s.empty()) continue;
      if (s.front() == '[') {
        if (s.back() != ']') {
          error(line, "malformed section header '" + s + "'");
          continue;
        }
        section = trim(s.substr(1, s.size() - 2));
        if (!sections.count(section)) error(line, "unknown section [" + section + "]");
        continue;
      }
      const auto eq = s.find('=');
      if (eq == std::string::npos) {
        error(line, "expected 'key = value', got '" + s + "'");
        continue;
      }
      if (section.empty()) {
        error(line, "key outside of any section");
        continue;
      }
      const std::string key = trim(s.substr(0, eq)), value = trim(s.substr(eq + 1));
      if (key.empty() || value.empty()) {
        error(line, "empty key or value");
        continue;
      }
      const Key k{section, key};
      if (entries_.count(k)) {
        error(line, "duplicate key '" + key + "' (first set on line " + std::to_string(entries_[k].line) + ")");
        continue;
      }
      entries_[k] = {value, line};
    }
    last_line_ = line;
  }

  void error(int line, const std::string& msg) { errors_.push_back("line " + std::to_string(line) + ": " + msg); }

  const Entry* find(const std::string& section, const std::string& key) {
    const auto it = entries_.find({section, key});
    if (it == entries_.end()) return nullptr;
    used_.insert(it->first);
    return &it->second;
  }

  void require(const std::string& section, const std::string& key) {
    if (!entries_.count({section, key}))
      error(last_line_, "missing required key '" + key + "' in [" + section + "]");
  }

  // Typed readers: each returns false after recording an error.
  bool read(const std::string& section, const std::string& key, double& out,
            const std::function<bool(double)>& ok = {}, const std::string& constraint = {}) {
    const Entry* e = find(section, key);
    if (!e) return false;
    double v = 0.0;
    const auto* first = e->value.data();
    const auto* last = first + e->value.size();
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last) {
      error(e->line, key + " expects a number, got '" + e->value + "'");
      return false;
    }
    if (ok && !ok(v)) {
      error(e->line, key + " must be " + constraint + " (got " + e->value + ")");
      return false;
    }
    out = v;
    return true;
  }

  bool read(const std::string& section, const std::string& key, int& out, int min_value) {
    const Entry* e = find(section, key);
    if (!e) return false;
    int v = 0;
    const auto* first = e->value.data();
    const auto* last = first + e->value.size();
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last) {
      error(e->line, key + " expects an integer, got '" + e->value + "'");
      return false;
    }
    if (v < min_value) {
      error(e->line, key + " must be >= " + std::to_string(min_value) + " (got " + e->value + ")");
      return false;
    }
    out = v;
    return true;
  }

  bool read(const std::string& section, const std::string& key, bool& out) {
    const Entry* e = find(section, key);
    if (!e) return false;
    if (e->value == "true" || e->value == "yes" || e->value == "1") {
      out = true;
    } else if (e->value == "false" || e->value == "no" || e->value == "0") {
      out = false;
    } else {
      error(e->line, key + " expects true or false, got '" + e->value + "'");
      return false;
    }
    return true;
  }

  template <class T>
  bool read_choice(const std::string& section, const std::string& key, const std::map<std::string, T>& choices,
                   T& out) {
    const Entry* e = find(section, key);
    if (!e) return false;
    const auto it = choices.find(e->value);
    if (it == choices.end()) {
      std::string names;
      for (const auto& [name, value] : choices) names += (names.empty() ? "" : ", ") + name;
      error(e->line, key + " must be one of {" + names + "}, got '" + e->value + "'");
      return false;
    }
    out = it->second;
    return true;
  }

  static bool positive(double v) { return v > 0.0; }

  void apply_run(RunConfig& c) {
    if (const Entry* e = find("run", "name")) c.name = e->value;
    read("run", "tau", c.solver.tau, positive, "> 0");
    read("run", "final_time", c.solver.final_time, positive, "> 0");
  }

  void apply_mesh(RunConfig& c, bool preset) {
    enum class Shape { square, disc, quarter_disc };
    Shape shape = std::holds_alternative<SquareDomain>(c.domain)  ? Shape::square
                  : std::holds_alternative<DiscDomain>(c.domain) ? Shape::disc
                                                                 : Shape::quarter_disc;
    const Entry* d = find("mesh", "domain");
    read_choice<Shape>("mesh", "domain",
                           {{"square", Shape::square}, {"disc", Shape::disc}, {"quarter_disc", Shape::quarter_disc}},
                           shape);
    if (!preset && !d) require("mesh", "domain");
    const int line = d ? d->line : last_line_;

    if (shape == Shape::square) {
      SquareDomain sq = std::holds_alternative<SquareDomain>(c.domain) ? std::get<SquareDomain>(c.domain)
                                                                         : SquareDomain{};
      const bool inherited = preset && std::holds_alternative<SquareDomain>(c.domain);
      for (const auto& [key, field] : {std::pair{"xmin", &sq.xmin}, std::pair{"xmax", &sq.xmax},
                                       std::pair{"ymin", &sq.ymin}, std::pair{"ymax", &sq.ymax}}) {
        const bool present = entries_.count({"mesh", key}) > 0;
        read("mesh", key, *field);
        if (!present && !inherited) error(line, std::string("square domain needs '") + key + "'");
      }
      if (!(sq.xmin < sq.xmax) || !(sq.ymin < sq.ymax)) error(line, "square bounds must satisfy min < max");
      c.domain = sq;
      for (const char* k : {"radius"})
        if (const Entry* e = find("mesh", k)) error(e->line, std::string(k) + " does not apply to a square domain");
    } else {
      double radius = std::visit(
          [](const auto& dom) {
            if constexpr (std::is_same_v<std::decay_t<decltype(dom)>, SquareDomain>)
              return 0.0;
            else
              return dom.radius;
          },
          c.domain);
      if (!read("mesh", "radius", radius, positive, "> 0") && !(radius > 0.0))
        error(line, "disc domains need a positive 'radius'");
      if (shape == Shape::disc)
        c.domain = DiscDomain{radius};
      else
        c.domain = QuarterDiscDomain{radius};
      for (const char* k : {"xmin", "xmax", "ymin", "ymax"})
        if (const Entry* e = find("mesh", k)) error(e->line, std::string(k) + " does not apply to a disc domain");
    }
    read("mesh", "h_max", c.h_max, positive, "> 0");
  }

  void apply_model(RunConfig& c, bool preset) {
    read("model", "m", c.m, [](double v) { return v > 1.0; }, "> 1");
    Potential::Kind kind = c.potential.kind;
    if (read_choice<Potential::Kind>("model", "potential",
                                     {{"zero", Potential::Kind::zero},
                                      {"quadratic", Potential::Kind::quadratic},
                                      {"quartic", Potential::Kind::quartic}},
                                     kind))
      c.potential.kind = kind;
    read("model", "lambda", c.potential.lambda, positive, "> 0");
    if (c.potential.kind != Potential::Kind::quadratic) c.potential.lambda = 1.0;

    InitialDensitySpec::Kind init = c.initial.kind;
    if (read_choice<InitialDensitySpec::Kind>("model", "initial",
                                              {{"barenblatt_t0", InitialDensitySpec::Kind::barenblatt_t0},
                                               {"exp2", InitialDensitySpec::Kind::exp2},
                                               {"two_peaks", InitialDensitySpec::Kind::two_peaks},
                                               {"bump", InitialDensitySpec::Kind::bump}},
                                              init))
      c.initial.kind = init;
    read("model", "t0", c.initial.t0, positive, "> 0");
    if (c.initial.kind != InitialDensitySpec::Kind::barenblatt_t0) c.initial.t0 = 0.01;

    read_choice<PotentialQuadrature>(
        "model", "potential_quadrature",
        {{"exact_gradient", PotentialQuadrature::exact_gradient}, {"paper61", PotentialQuadrature::half_weight}},
        c.quadrature);
    (void)preset;
  }

  void apply_solver(RunConfig& c) {
    read("solver", "newton_tol", c.solver.newton_tol, positive, "> 0");
    read("solver", "max_newton_iters", c.solver.max_newton_iters, 1);
    read("solver", "max_damping_halvings", c.solver.max_damping_halvings, 0);
    read_choice<LinearSolverKind>("solver", "linear_solver",
                                  {{"direct", LinearSolverKind::direct}, {"iterative", LinearSolverKind::iterative}},
                                  c.solver.linear_solver);
    read("solver", "regularization_floor", c.solver.regularization_floor, [](double v) { return v >= 0.0; },
         ">= 0");
  }

  void apply_output(RunConfig& c) {
    if (const Entry* e = find("output", "directory")) c.output_dir = e->value;
    read("output", "frame_every", c.frame_every, 0);
    read("output", "vtk", c.vtk);
    read_choice<ReferenceKind>("output", "reference",
                               {{"none", ReferenceKind::none},
                                {"barenblatt_free", ReferenceKind::barenblatt_free},
                                {"barenblatt_confined", ReferenceKind::barenblatt_confined}},
                               c.reference);
    read("output", "reference_t0", c.reference_t0, [](double v) { return v >= 0.0; }, ">= 0");
    if (const Entry* e = find("output", "reference_mass")) {
      if (e->value == "auto") {
        c.reference_mass.reset();
      } else {
        used_.erase({"output", "reference_mass"});
        double mass = 0.0;
        if (read("output", "reference_mass", mass, positive, "> 0 or 'auto'")) c.reference_mass = mass;
      }
    }
  }

  std::map<Key, Entry> entries_;
  std::set<Key> used_;
  std::vector<std::string> errors_;
  int last_line_ = 0;
};

std::string number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

RunConfig parse_config(const std::string& text) { return Parser(text).build(); }

std::string render_config(const RunConfig& c) {
  std::ostringstream out;
  out << "[run]\n";
  out << "name = " << c.name << "\n";
  out << "tau = " << number(c.solver.tau) << "\n";
  out << "final_time = " << number(c.solver.final_time) << "\n";

  out << "\n[mesh]\n";
  if (const auto* sq = std::get_if<SquareDomain>(&c.domain)) {
    out << "domain = square\n";
    out << "xmin = " << number(sq->xmin) << "\nxmax = " << number(sq->xmax) << "\n";
    out << "ymin = " << number(sq->ymin) << "\nymax = " << number(sq->ymax) << "\n";
  } else if (const auto* d = std::get_if<DiscDomain>(&c.domain)) {
    out << "domain = disc\nradius = " << number(d->radius) << "\n";
  } else {
    out << "domain = quarter_disc\nradius = " << number(std::get<QuarterDiscDomain>(c.domain).radius) << "\n";
  }
  out << "h_max = " << number(c.h_max) << "\n";

  out << "\n[model]\n";
  out << "m = " << number(c.m) << "\n";
  switch (c.potential.kind) {
    case Potential::Kind::quadratic:
      out << "potential = quadratic\nlambda = " << number(c.potential.lambda) << "\n";
      break;
    case Potential::Kind::quartic:
      out << "potential = quartic\n";
      break;
    default:
      out << "potential = zero\n";
  }
  out << "initial = " << to_string(c.initial.kind) << "\n";
  if (c.initial.kind == InitialDensitySpec::Kind::barenblatt_t0) out << "t0 = " << number(c.initial.t0) << "\n";
  out << "potential_quadrature = " << to_string(c.quadrature) << "\n";

  out << "\n[solver]\n";
  out << "newton_tol = " << number(c.solver.newton_tol) << "\n";
  out << "max_newton_iters = " << c.solver.max_newton_iters << "\n";
  out << "max_damping_halvings = " << c.solver.max_damping_halvings << "\n";
  out << "linear_solver = " << (c.solver.linear_solver == LinearSolverKind::direct ? "direct" : "iterative") << "\n";
  out << "regularization_floor = " << number(c.solver.regularization_floor) << "\n";

  out << "\n[output]\n";
  out << "directory = " << c.output_dir << "\n";
  out << "frame_every = " << c.frame_every << "\n";
  out << "vtk = " << (c.vtk ? "true" : "false") << "\n";
  out << "reference = " << to_string(c.reference) << "\n";
  out << "reference_t0 = " << number(c.reference_t0) << "\n";
  out << "reference_mass = " << (c.reference_mass ? number(*c.reference_mass) : "auto") << "\n";
  return out.str();
}

}  // namespace lagflow
