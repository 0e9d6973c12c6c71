#pragma once

#include <optional>
#include <set>

#include "mkv/dynamics.hpp"

namespace mkv {

enum class ModelKind { quadratic, double_well, gaussian_attraction };
enum class ReferenceKind { none, gaussian, solve };

/// Diagnostics instruments selectable per run. Moments are always computed.
enum class Instrument { distance, ergodic, energy, residual, gvalue };

/// Full experiment description, parsed from flat dotted-key text
/// (see docs/ and the shipped example configs).
struct ExperimentConfig {
  // model block
  ModelKind model_kind = ModelKind::quadratic;
  double lambda = 1.0;
  double alpha = 0.0;
  double kernel_width = 1.0;
  double sigma = 1.0;

  // schedule block
  ScheduleKind schedule_kind = ScheduleKind::power_law;
  double gamma0 = 0.5;
  double exponent = 0.7;
  std::vector<double> table;

  // run block
  std::size_t n = 64;
  std::size_t d = 1;
  std::optional<double> horizon_tau;
  std::optional<std::size_t> steps;
  std::size_t replicas = 1;
  std::uint64_t seed = 0;
  InitSpec init;
  std::size_t record_stride = 1;
  NoiseModel noise;

  // diagnostics block
  std::set<Instrument> instruments;
  ReferenceKind reference = ReferenceKind::none;
  double grid_lo = -6.0;
  double grid_hi = 6.0;
  double grid_h = 0.01;
  double g_radius = 3.0;
  double g_window = 1.0;
  double solver_damping = 0.5;
  double solver_tol = 1e-10;
  std::size_t solver_max_iter = 10000;
  std::vector<double> solver_init_means;
  double solver_init_variance = 0.25;

  // pass/fail thresholds (optional)
  std::optional<double> threshold_final_distance;
  std::optional<double> threshold_ergodic_final;

  std::string output_dir = "runs/run";

  bool operator==(const ExperimentConfig&) const = default;

  GranularMediaModel make_model() const;
  StepSchedule make_schedule() const;
  RunConfig make_run_config() const;
};

struct ConfigParseResult {
  std::optional<ExperimentConfig> config;  // set iff errors is empty
  std::vector<std::string> errors;         // every violation, not just the first
  std::vector<std::string> warnings;       // e.g. step scale vs drift stiffness
};

/// Parses `key = value` lines ('#' comments). Unknown keys report the
/// nearest known key; all violations are collected before giving up.
ConfigParseResult parse_config(const std::string& text);
ConfigParseResult parse_config_file(const std::string& path);

/// Canonical text form; parse_config(render_config(c)) reproduces c exactly.
std::string render_config(const ExperimentConfig& config);

}  // namespace mkv
