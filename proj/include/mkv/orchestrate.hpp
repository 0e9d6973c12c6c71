#pragma once

#include <filesystem>

#include "mkv/config.hpp"
#include "mkv/diagnostics.hpp"
#include "mkv/stationary.hpp"

namespace mkv {

struct OrchestrateOptions {
  std::optional<std::filesystem::path> out_dir;  // overrides config output.dir
  std::optional<std::uint64_t> seed;             // overrides config seed
  int threads = 1;
  bool force = false;  // allow writing into an existing directory
};

/// Reference set for the configured model: the closed-form Gaussian for the
/// quadratic pair, or the deduplicated fixed points of the self-consistent
/// solver started from the configured means.
std::vector<StationaryBranch> build_reference_branches(const ExperimentConfig& cfg);

/// Full pipeline: reference set, replica runs, per-record diagnostics and
/// the summary report, persisted as
///   <out>/{manifest.json, stationary/branch_<i>.mkvg, replica_<r>/trajectory.bin,
///          metrics.csv, report.json}.
/// Returns 0 on success, 2 when a configured threshold fails, 1 on run
/// failure (partial artifacts are persisted with a failure marker).
int orchestrate(const ExperimentConfig& cfg, const OrchestrateOptions& opts = {});

/// Recomputes metrics.csv for a persisted run directory.
void diagnose_run_dir(const std::filesystem::path& dir);

/// Recomputes report.json; returns the orchestrate-style exit code.
int report_run_dir(const std::filesystem::path& dir);

/// metrics.csv rows for one run; empty optionals render as empty CSV fields.
struct MetricsRow {
  std::size_t k = 0;
  double tau = 0.0;
  double m2 = 0.0;
  double m4 = 0.0;
  std::optional<double> w2_ref;
  std::optional<double> wp_erg;
  std::optional<double> helmholtz_F;
  std::optional<double> helmholtz_V;
  std::optional<double> helmholtz_U;
  std::optional<double> helmholtz_H;
  std::optional<double> residual;
  std::optional<double> g_value;
};

std::vector<MetricsRow> compute_metrics(const RunRecord& run, const ExperimentConfig& cfg,
                                        const std::vector<WeightedSampleMeasure>& refs);

void write_metrics_csv(const std::filesystem::path& path, const std::vector<MetricsRow>& rows);

}  // namespace mkv
