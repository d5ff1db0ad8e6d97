#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "fraclab/diagnostics.hpp"

namespace fraclab {

inline constexpr int kSchemaVersion = 1;

enum class InitialCondition { InradiusIndicator, GroundState };

struct ExperimentConfig {
  std::string name;
  DomainSpec domain = DomainSpec::interval(1.0);
  double alpha = 0.5;
  PotentialSpec potential{Bounded{"0"}};
  std::vector<double> h_schedule;
  std::vector<double> k_schedule;
  double dt = 0.01;
  double t_final = 0.5;
  double log_t1 = 0.25;
  double log_t2 = 0.5;
  double comparability_time = 0.5;
  double comparability_bound = 1e3;
  Thresholds thresholds;
  InitialCondition initial = InitialCondition::InradiusIndicator;
  std::vector<double> ball_radii;
  int ball_nodes_per_diameter = 1024;
  int log_trials = 20;
  int energy_trials = 10;
  std::vector<double> state_checkpoints;
  std::filesystem::path output_dir = "out";
  std::uint64_t seed = 0;
  std::string canonical;  // normalised JSON text the digest is taken over
};

/// Static checks only. Each message starts with the offending field name.
std::vector<std::string> validate_config_text(const std::string& json_text,
                                              const std::filesystem::path& base_dir = {});
std::vector<std::string> validate_config(const std::filesystem::path& path);

/// Throws ConfigError listing every violation.
ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig parse_config(const std::string& json_text, const std::filesystem::path& base_dir = {});

struct RunOptions {
  std::optional<std::filesystem::path> output_dir;
  int threads = 1;
  std::optional<std::uint64_t> seed;
};

struct RunSummary {
  Verdict verdict;
  std::vector<Certificate> certificates;
  std::filesystem::path report_path;
  double min_state_value;  // over every stored state of every trajectory
};

/// Refinement series, monotone families, certificates and classification;
/// writes report.json, series.csv, trajectories.csv and curves.csv.
RunSummary run_experiment(const ExperimentConfig& config, const RunOptions& options = {});

/// Uniform doubles in [0, 1). std::uniform_real_distribution is
/// implementation defined, so the 53-bit conversion is done here.
class UniformSource {
 public:
  explicit UniformSource(std::uint64_t seed) : engine_(seed) {}
  double next() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

 private:
  std::mt19937_64 engine_;
};

/// Random test vector supported on the nodes of a random sub-ball, scaled to
/// sum phi^2 h^d = 1.
Vector random_test_vector(const Grid& grid, UniformSource& rng);

}  // namespace fraclab
