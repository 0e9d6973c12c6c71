#pragma once

#include <memory>
#include <optional>

#include "mkv/fields.hpp"
#include "mkv/rng.hpp"
#include "mkv/schedule.hpp"
#include "mkv/transport.hpp"

namespace mkv {

enum class ZetaKind { zero, vanishing_bias };

/// Noise entering one update: iid Gaussians pushed through the model's
/// diffusion factor, plus an optional deterministic vanishing bias
/// beta_k * v standing in for the residual-perturbation term.
struct NoiseModel {
  ZetaKind zeta_kind = ZetaKind::zero;
  Vec bias_vector;          // v
  double bias_scale = 0.0;  // beta_k = bias_scale * k^-bias_exponent
  double bias_exponent = 1.0;

  double beta(std::size_t k) const;
  bool operator==(const NoiseModel&) const = default;
};

enum class InitKind { gaussian, uniform_box, point };

struct InitSpec {
  InitKind kind = InitKind::gaussian;
  double scale = 1.0;  // gaussian std dev / box half-width
  Vec point;           // center (gaussian, point) or box center (uniform_box)
  bool operator==(const InitSpec&) const = default;
};

/// Positions recorded on a stride-thinned subset of the tau grid.
struct TrajectoryStore {
  std::size_t n = 0;
  std::size_t d = 0;
  std::vector<double> times;         // recorded tau values, strictly increasing
  std::vector<std::size_t> steps;    // recorded step indices k
  Vec positions;                     // times.size() x n x d
  std::size_t stride = 1;

  ConstSpan at(std::size_t t_idx, std::size_t particle) const {
    return ConstSpan(positions.data() + (t_idx * n + particle) * d, d);
  }
  double t_min() const { return times.front(); }
  double t_max() const { return times.back(); }
};

/// Piecewise-linear interpolation between the two recorded grid points
/// bracketing t; endpoints are returned bit-exactly.
Vec interpolate(const TrajectoryStore& store, std::size_t particle, double t);

/// n discretized paths u -> Xbar_{t_start+u}, u in [0, window] on a uniform
/// grid: the finite-sample carrier of the shifted occupation measure.
PathSampleSet path_sample(const TrajectoryStore& store, double t_start, double window,
                          double grid_step);

struct StepDiag {
  std::size_t k = 0;
  double tau = 0.0;
  double m2 = 0.0;
  double m4 = 0.0;
};

struct RunConfig {
  std::size_t n = 0;
  std::size_t d = 1;
  std::uint64_t seed = 0;
  std::uint32_t replica = 0;
  std::optional<double> horizon_tau;   // exactly one of horizon_tau / steps
  std::optional<std::size_t> steps;
  InitSpec init;
  NoiseModel noise;
  std::size_t record_stride = 1;
  /// Recording starts once tau reaches this value (the initial and final
  /// states are always recorded). Keeps long runs cheap when only a tail
  /// window feeds the path diagnostics.
  double record_from_tau = 0.0;
  double divergence_guard = 1e12;
};

/// One seeded trajectory: enough manifest data to reproduce it bit-exactly,
/// the per-step moment series, and the recorded positions.
struct RunRecord {
  RunConfig config;
  std::string model_desc;
  std::string schedule_desc;
  std::vector<StepDiag> series;
  TrajectoryStore store;
  std::shared_ptr<TimeGrid> grid;
  std::optional<std::string> error;  // divergence marker; record is partial

  bool failed() const { return error.has_value(); }
};

/// Draws the initial n-uple; iid across particles through per-particle
/// lanes at step 0 (exchangeable by construction).
void initialize_ensemble(ParticleEnsemble& ensemble, const InitSpec& init, const RngStream& rng,
                         std::uint32_t replica);

/// One update X_{k+1} = X_k + gamma b(X_k, mu_k) + sqrt(2 gamma) xi + gamma zeta,
/// with every drift evaluated against the pre-step empirical measure.
void step(ParticleEnsemble& ensemble, const GranularMediaModel& model, const TimeGrid& grid,
          const NoiseModel& noise, const RngStream& rng, std::uint32_t replica, int threads = 1,
          double divergence_guard = 1e12);

/// Runs the iteration to the configured horizon, recording at the stride.
/// Divergence marks the record as failed instead of throwing, so partial
/// output can still be persisted.
RunRecord run(const GranularMediaModel& model, const StepSchedule& schedule, const RunConfig& cfg,
              int threads = 1);

/// Independent replicas (replica index rotates the RNG stream); thread count
/// never changes the results.
std::vector<RunRecord> run_replicas(const GranularMediaModel& model, const StepSchedule& schedule,
                                    RunConfig base, std::size_t replicas, int threads = 1);

}  // namespace mkv
