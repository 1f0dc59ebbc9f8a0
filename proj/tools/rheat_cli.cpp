// rheat: sample fractional sheets, run the Galerkin scheme and measure
// convergence. Exit codes: 0 success, 1 configuration error, 2 numerical failure.

#include <CLI11.hpp>

#include <cstdint>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "rheat/config.hpp"
#include "rheat/error.hpp"
#include "rheat/experiment.hpp"

namespace {

struct CommonFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<int> threads;
  bool emit_plots = false;
  std::vector<std::string> assignments;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config_path, "INI configuration file")->check(CLI::ExistingFile);
  cmd->add_option("--seed", f.seed, "base seed (overrides run.seed)");
  cmd->add_option("--out", f.out, "output directory (overrides output.dir)");
  cmd->add_option("--threads", f.threads, "worker threads")->check(CLI::Range(1, 256));
  cmd->add_flag("--emit-plots", f.emit_plots, "write SVG and gnuplot .dat files");
  cmd->add_option("--set", f.assignments, "override, e.g. --set sheet.kappa=0.05")->take_all();
}

rheat::ExperimentConfig resolve(const CommonFlags& f) {
  rheat::ConfigLayers layers;
  if (!f.config_path.empty()) layers.load_file(f.config_path);
  layers.load_environment();
  for (const auto& a : f.assignments) layers.load_assignment(a);
  if (f.seed) layers.set("run", "seed", std::to_string(*f.seed));
  if (!f.out.empty()) layers.set("output", "dir", f.out);
  if (f.threads) layers.set("run", "threads", std::to_string(*f.threads));
  if (f.emit_plots) layers.set("output", "emit_plots", "true");
  rheat::ConfigWarnings warnings;
  rheat::ExperimentConfig cfg = layers.resolve(&warnings);
  for (const auto& w : warnings.messages) std::cerr << "warning: " << w << "\n";
  if (cfg.variant == rheat::SchemeVariant::synchronized_grid) {
    std::cerr << "warning: synchronized_grid is EXPERIMENTAL; no convergence result covers it\n";
  }
  return cfg;
}

void report_paths(const std::vector<std::filesystem::path>& paths) {
  for (const auto& p : paths) std::cout << p.string() << "\n";
}

int exit_code(const rheat::Error& e) { return e.kind() == rheat::ErrorKind::numerical ? 2 : 1; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rough heat equation: sheet sampling, Galerkin scheme, convergence study"};
  app.require_subcommand(1);

  CommonFlags sheet_flags, scheme_flags, conv_flags;
  auto* sheet_cmd = app.add_subcommand("sample-sheet", "sample the cut-off fractional sheet on the coarse grid");
  add_common(sheet_cmd, sheet_flags);
  auto* scheme_cmd = app.add_subcommand("run-scheme", "run the specialized scheme per level and seed");
  add_common(scheme_cmd, scheme_flags);
  auto* conv_cmd = app.add_subcommand("convergence", "windowed H^-alpha errors against the mild solution");
  add_common(conv_cmd, conv_flags);
  bool corrupt = false;
  auto* self_cmd = app.add_subcommand("selftest", "run the invariant checks");
  self_cmd->add_flag("--corrupt-stiffness", corrupt, "debug hook: flip the stiffness sign in the generic scheme");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*sheet_cmd) {
      const auto cfg = resolve(sheet_flags);
      report_paths(rheat::cmd_sample_sheet(cfg).write(cfg));
    } else if (*scheme_cmd) {
      const auto cfg = resolve(scheme_flags);
      report_paths(rheat::cmd_run_scheme(cfg).write(cfg));
    } else if (*conv_cmd) {
      const auto cfg = resolve(conv_flags);
      const auto result = rheat::run_convergence(cfg);
      report_paths(rheat::convergence_outputs(cfg, result).write(cfg, rheat::convergence_summary(result)));
      for (std::size_t k = 0; k < result.levels.size(); ++k) {
        std::printf("level %d  median error %.6e\n", result.levels[k], result.medians[k]);
      }
      if (result.report) {
        std::printf("fitted rate %.4f  (rms residual %.3e)\n", result.report->fitted_rate, result.report->residual);
      } else {
        std::printf("fitted rate: n/a\n");
      }
    } else if (*self_cmd) {
      const auto checks = rheat::run_selftest({corrupt});
      bool all = true;
      std::size_t width = 0;
      for (const auto& c : checks) width = std::max(width, c.name.size());
      for (const auto& c : checks) {
        std::printf("%-*s  %s  %s\n", static_cast<int>(width), c.name.c_str(), c.passed ? "PASS" : "FAIL", c.detail.c_str());
        all = all && c.passed;
      }
      std::printf("%s\n", all ? "all checks passed" : "some checks FAILED");
      return all ? 0 : 2;
    }
  } catch (const rheat::Error& e) {
    std::cerr << "error (" << rheat::to_string(e.kind()) << "): " << e.what() << "\n";
    return exit_code(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
