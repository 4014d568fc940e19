#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "orpa/constants.hpp"
#include "orpa/envelope.hpp"
#include "orpa/optimizer.hpp"
#include "orpa/problem.hpp"

namespace orpa {

inline constexpr const char* kArtifactVersion = "1.0.0";
inline constexpr int kConfigVersion = 1;
inline constexpr int kTraceSchemaVersion = 1;
inline constexpr int kClaimsManifestVersion = 1;

/// A validated experiment. `canonical` is the fully expanded config (defaults
/// filled, random generators materialized) and `digest` hashes it.
struct ExperimentConfig {
  nlohmann::json canonical;
  std::string digest;
  Problem problem;
  Vector theta0;
  bool auto_eta = true;
  std::vector<std::uint64_t> seeds{0};
  OracleMode mode = OracleMode::true_oracle;
  double eps_prox = 1e-7;
  std::vector<double> rho_list;
  std::size_t sweep_probes = 8;
  ConstantsOptions constants;
};

/// Throws ConfigInvalid naming the offending field. Relative "file" paths are
/// resolved against `base_dir`.
ExperimentConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

/// The benchmark instance with automatic stepsize and envelope parameter.
nlohmann::json default_config_json();

/// Re-expands the config after its seeds or hyperparameters were edited.
ExperimentConfig reparse(const ExperimentConfig& config);

/// Bundle at theta0 using the config's constant overrides.
ConstantsBundle config_constants(const ExperimentConfig& config);

struct SeedResult {
  std::uint64_t seed = 0;
  RunTrace trace;
  TraceEnvelope envelope;
  Certificate certificate;  ///< at the output iterate, from its prox solve
};

struct ExperimentResult {
  ConstantsBundle bundle;
  double eta = 0.0;
  double f_env0 = 0.0;
  std::vector<SeedResult> seeds;
  nlohmann::json summary;
};

struct RunSettings {
  bool with_envelope = true;
  bool record_wall_time = false;
};

/// Trains every seed (seeds run in parallel, results are merged in seed order)
/// and evaluates the envelope along each trace.
ExperimentResult run_experiment(const ExperimentConfig& config, const RunSettings& settings = {});

/// One "# key: value" header block followed by a CSV table, numbers in %.17g.
void write_trace_csv(std::ostream& os, const ExperimentConfig& config, const SeedResult& seed,
                     double eta);
void write_plot_csv(std::ostream& os, const ExperimentConfig& config, const ExperimentResult& result);

/// Writes trace_seed<k>.csv, summary.json and plot.csv into `dir`; returns the paths.
std::vector<std::filesystem::path> write_artifacts(const std::filesystem::path& dir,
                                                   const ExperimentConfig& config,
                                                   const ExperimentResult& result);

struct SweepRow {
  std::size_t probe = 0;
  double rho = 0.0;
  double sail = 0.0;
  double penalty = 0.0;
  double robust = 0.0;
  double robust_worstcase = 0.0;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  double max_affine_residual = 0.0;   ///< least-squares fit of robust vs rho per probe
  double max_slope_error = 0.0;       ///< |fitted slope - beta R| per probe
  double max_rho0_gap = 0.0;          ///< |robust(rho = 0) - sail|
  double max_decrease = 0.0;          ///< largest drop between consecutive rho
  double max_path_gap = 0.0;          ///< |closed form - worst-case path|
  bool passed = false;
};

/// Evaluates the objective family at theta0 and `sweep_probes` seeded feasible
/// points for every rho in `rho_list` (sorted ascending).
SweepResult sweep_rho(const ExperimentConfig& config, std::vector<double> rho_list);

void write_sweep(const std::filesystem::path& dir, const ExperimentConfig& config,
                 const SweepResult& sweep);

/// Common header fields: digest, versions.
nlohmann::json artifact_header(const ExperimentConfig& config);

std::string format_double(double v);

}  // namespace orpa
