#include <cstdio>
#include <iostream>

#include <CLI11.hpp>

#include "fraclab/experiment.hpp"
#include "fraclab/kernel.hpp"
#include "fraclab/potentials.hpp"
#include "fraclab/spectral.hpp"

int main(int argc, char** argv) {
  CLI::App app{"fraclab: fractional Laplacian with Hardy-type potentials"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  int threads = 1;
  std::uint64_t seed = 0;

  auto* run = app.add_subcommand("run", "run an experiment and write its report");
  run->add_option("--config", config_path, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out_dir, "output directory (overrides output_dir)");
  run->add_option("--threads", threads, "worker threads")->check(CLI::Range(1, 256));
  auto* seed_opt = run->add_option("--seed", seed, "override the config seed");

  auto* validate = app.add_subcommand("validate", "check a config without running it");
  validate->add_option("--config", config_path, "experiment config (JSON)")->required();

  int d = 1;
  double alpha = 0.5;
  auto* constants = app.add_subcommand("constants", "print A(d, alpha) and the sharp Hardy constant");
  constants->add_option("--d", d, "dimension")->required();
  constants->add_option("--alpha", alpha, "order")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*validate) {
      const auto errors = fraclab::validate_config(config_path);
      if (errors.empty()) {
        std::cout << "ok\n";
        return 0;
      }
      for (const auto& e : errors) std::cerr << e << '\n';
      return 2;
    }
    if (*constants) {
      std::cout << "normalization_constant " << fraclab::format_number(fraclab::normalization_constant(d, alpha))
                << '\n'
                << "hardy_sharp_constant " << fraclab::format_number(fraclab::hardy_sharp_constant(d, alpha)) << '\n';
      return 0;
    }
    const fraclab::ExperimentConfig config = fraclab::load_config(config_path);
    fraclab::RunOptions options;
    options.threads = threads;
    if (!out_dir.empty()) options.output_dir = out_dir;
    if (seed_opt->count() > 0) options.seed = seed;
    const fraclab::RunSummary summary = fraclab::run_experiment(config, options);
    std::size_t satisfied = 0;
    for (const auto& c : summary.certificates) satisfied += c.satisfied ? 1 : 0;
    std::cout << "verdict " << fraclab::to_string(summary.verdict.label) << " (" << summary.verdict.reason << ")\n"
              << "certificates " << satisfied << "/" << summary.certificates.size() << " satisfied\n"
              << "report " << summary.report_path.string() << '\n';
    return 0;
  } catch (const fraclab::Error& e) {
    std::cerr << e.what() << '\n';
    return e.code() == fraclab::ErrorCode::ConfigError ? 2 : 1;
  }
}
