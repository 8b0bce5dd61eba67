// Command-line entry point: runs configurations and presets, studies and the identity suite.

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "lagflow/config.hpp"
#include "lagflow/experiment.hpp"
#include "lagflow/study.hpp"

namespace {

lagflow::RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw lagflow::Error("cannot open " + path);
  std::ostringstream text;
  text << in.rdbuf();
  return lagflow::parse_config(text.str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lagrangian moving-mesh solver for degenerate Fokker-Planck equations"};
  app.require_subcommand(1);

  std::string config_path, preset, out_dir;
  bool quiet = false;
  auto* run = app.add_subcommand("run", "run a configuration file or a preset");
  run->add_option("config", config_path, "INI configuration file");
  run->add_option("--preset", preset, "experiment1 .. experiment4")
      ->check(CLI::IsMember(lagflow::preset_names()));
  run->add_option("--out", out_dir, "output directory (overrides the configuration)");
  run->add_flag("-q,--quiet", quiet, "no per-step progress");

  std::string study_kind, study_out = "study";
  auto* study = app.add_subcommand("study", "run a convergence, consistency or lemmas study");
  study->add_option("kind", study_kind)->required()->check(CLI::IsMember(lagflow::study_kinds()));
  study->add_option("--out", study_out, "output directory");

  auto* check = app.add_subcommand("check", "run the algebraic identity suite");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      if (config_path.empty() == preset.empty()) {
        std::cerr << "run needs exactly one of <config> or --preset\n";
        return 2;
      }
      lagflow::RunConfig cfg = preset.empty() ? load_config(config_path) : lagflow::preset_config(preset);
      if (!out_dir.empty()) cfg.output_dir = out_dir;
      const int status = lagflow::run_experiment(cfg, quiet ? nullptr : &std::cout);
      std::cout << (status == 0 ? "completed" : "FAILED (see run.log)") << ", output in " << cfg.output_dir << '\n';
      return status;
    }
    if (*study) return lagflow::run_study(study_kind, study_out, std::cout);
    if (*check) {
      const lagflow::IdentityStudy s = lagflow::identity_study();
      for (const auto& c : s.checks)
        std::cout << (c.passed() ? "PASS " : "FAIL ") << c.name << "  max deviation " << c.max_deviation
                  << "  tolerance " << c.tolerance << '\n';
      int failures = 0;
      for (const auto& w : s.witnesses) failures += !w.passed();
      std::cout << (failures ? "FAIL " : "PASS ") << "nonconvexity witness (" << s.witnesses.size()
                << " samples)\n";
      return s.passed() ? 0 : 1;
    }
  } catch (const lagflow::ConfigError& e) {
    for (const auto& m : e.messages()) std::cerr << m << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
