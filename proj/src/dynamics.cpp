#include "mkv/dynamics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

namespace mkv {

double NoiseModel::beta(std::size_t k) const {
  if (zeta_kind == ZetaKind::zero) return 0.0;
  return bias_scale * std::pow(static_cast<double>(std::max<std::size_t>(k, 1)), -bias_exponent);
}

void initialize_ensemble(ParticleEnsemble& ensemble, const InitSpec& init, const RngStream& rng,
                         std::uint32_t replica) {
  const std::size_t d = ensemble.d;
  Vec center = init.point;
  center.resize(d, 0.0);
  for (std::size_t i = 0; i < ensemble.n; ++i) {
    auto x = ensemble.position(i);
    const std::uint32_t lane_particle = ensemble.lane_ids[i];
    for (std::size_t a = 0; a < d; ++a) {
      const Lane lane{replica, lane_particle, 0, static_cast<std::uint32_t>(a)};
      switch (init.kind) {
        case InitKind::gaussian:
          x[a] = center[a] + init.scale * rng.normal(lane);
          break;
        case InitKind::uniform_box:
          x[a] = center[a] + init.scale * (2.0 * rng.uniform(lane) - 1.0);
          break;
        case InitKind::point:
          x[a] = center[a];
          break;
      }
    }
  }
  ensemble.k = 0;
  ensemble.tau = 0.0;
}

namespace {

void update_range(const GranularMediaModel& model, const ParticleEnsemble& ensemble,
                  ConstSpan sorted, const NoiseModel& noise, const RngStream& rng,
                  std::uint32_t replica, std::size_t k_next, double gamma, Vec& next,
                  std::size_t begin, std::size_t end) {
  const std::size_t d = ensemble.d;
  const double noise_scale = std::sqrt(2.0 * gamma) * model.sigma;
  const double beta = noise.beta(k_next);
  Vec b(d);
  for (std::size_t i = begin; i < end; ++i) {
    const auto x = ensemble.position(i);
    granular_drift_into(model, x, sorted, b);
    const std::uint32_t lane_particle = ensemble.lane_ids[i];
    for (std::size_t a = 0; a < d; ++a) {
      const Lane lane{replica, lane_particle, k_next, static_cast<std::uint32_t>(a)};
      double v = x[a] + gamma * b[a] + noise_scale * rng.normal(lane);
      if (noise.zeta_kind == ZetaKind::vanishing_bias && a < noise.bias_vector.size())
        v += gamma * beta * noise.bias_vector[a];
      next[i * d + a] = v;
    }
  }
}

}  // namespace

void step(ParticleEnsemble& ensemble, const GranularMediaModel& model, const TimeGrid& grid,
          const NoiseModel& noise, const RngStream& rng, std::uint32_t replica, int threads,
          double divergence_guard) {
  const std::size_t n = ensemble.n, d = ensemble.d;
  const std::size_t k_next = ensemble.k + 1;
  const double gamma = grid.schedule().gamma(k_next);
  const Vec sorted = sorted_positions(ensemble);
  Vec next(n * d);

  if (threads <= 1 || n < 256) {
    update_range(model, ensemble, sorted, noise, rng, replica, k_next, gamma, next, 0, n);
  } else {
    const std::size_t nt = std::min<std::size_t>(static_cast<std::size_t>(threads), n);
    std::vector<std::thread> pool;
    pool.reserve(nt);
    const std::size_t chunk = (n + nt - 1) / nt;
    for (std::size_t t = 0; t < nt; ++t) {
      const std::size_t lo = t * chunk;
      const std::size_t hi = std::min(n, lo + chunk);
      if (lo >= hi) break;
      pool.emplace_back([&, lo, hi] {
        update_range(model, ensemble, sorted, noise, rng, replica, k_next, gamma, next, lo, hi);
      });
    }
    for (auto& th : pool) th.join();
  }

  // validate before committing so a divergence leaves the pre-step state intact
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t a = 0; a < d; ++a) {
      const double v = next[i * d + a];
      if (!std::isfinite(v) || std::fabs(v) > divergence_guard)
        throw DivergenceError(cat("particle ", i, " diverged at step ", k_next, " (gamma=", gamma,
                                  ", value=", v, ")"),
                              k_next, i, gamma);
    }
  }
  ensemble.positions.swap(next);
  ensemble.k = k_next;
  ensemble.tau = grid.tau(k_next);
}

Vec interpolate(const TrajectoryStore& store, std::size_t particle, double t) {
  if (particle >= store.n) throw ShapeError(cat("particle index ", particle, " out of range"));
  if (t < store.t_min() || t > store.t_max())
    throw TimeRangeError(cat("t=", t, " outside recorded range [", store.t_min(), ", ",
                             store.t_max(), "]"));
  const auto& times = store.times;
  auto it = std::upper_bound(times.begin(), times.end(), t);
  std::size_t hi = static_cast<std::size_t>(it - times.begin());
  if (hi == times.size()) hi = times.size() - 1;
  const std::size_t lo = hi - (hi > 0 ? 1 : 0);
  // exact grid hits are returned bit-exactly
  if (t == times[lo]) return Vec(store.at(lo, particle).begin(), store.at(lo, particle).end());
  if (t == times[hi]) return Vec(store.at(hi, particle).begin(), store.at(hi, particle).end());
  const double w = (t - times[lo]) / (times[hi] - times[lo]);
  const auto a = store.at(lo, particle);
  const auto b = store.at(hi, particle);
  Vec out(store.d);
  for (std::size_t c = 0; c < store.d; ++c) out[c] = a[c] + w * (b[c] - a[c]);
  return out;
}

PathSampleSet path_sample(const TrajectoryStore& store, double t_start, double window,
                          double grid_step) {
  if (!(grid_step > 0.0)) throw Error(cat("grid_step must be positive, got ", grid_step));
  if (!(window >= 0.0)) throw Error(cat("window must be nonnegative, got ", window));
  const std::size_t n_times =
      static_cast<std::size_t>(std::floor(window / grid_step + 1e-9)) + 1;
  const double t_end = t_start + static_cast<double>(n_times - 1) * grid_step;
  if (t_start < store.t_min() - 1e-12 || t_end > store.t_max() + 1e-12)
    throw TimeRangeError(cat("window [", t_start, ", ", t_end, "] exceeds recorded range [",
                             store.t_min(), ", ", store.t_max(), "]"));
  PathSampleSet set;
  set.n_paths = store.n;
  set.d = store.d;
  set.n_times = n_times;
  set.grid_step = grid_step;
  set.values.resize(store.n * n_times * store.d);
  for (std::size_t i = 0; i < store.n; ++i)
    for (std::size_t j = 0; j < n_times; ++j) {
      const double t = std::min(t_start + static_cast<double>(j) * grid_step, store.t_max());
      const Vec v = interpolate(store, i, std::max(t, store.t_min()));
      std::copy(v.begin(), v.end(), set.values.begin() + (i * n_times + j) * store.d);
    }
  return set;
}

namespace {

void record_state(TrajectoryStore& store, const ParticleEnsemble& e) {
  store.times.push_back(e.tau);
  store.steps.push_back(e.k);
  store.positions.insert(store.positions.end(), e.positions.begin(), e.positions.end());
}

}  // namespace

RunRecord run(const GranularMediaModel& model, const StepSchedule& schedule, const RunConfig& cfg,
              int threads) {
  if (cfg.n == 0 || cfg.d == 0) throw ShapeError("run needs n >= 1 and d >= 1");
  if (cfg.horizon_tau.has_value() == cfg.steps.has_value())
    throw Error("exactly one of horizon_tau / steps must be set");
  if (model.d != cfg.d)
    throw ShapeError(cat("model dimension ", model.d, " != run dimension ", cfg.d));

  RunRecord rec;
  rec.config = cfg;
  rec.model_desc = model.describe();
  rec.schedule_desc = schedule.describe();
  rec.grid = std::make_shared<TimeGrid>(schedule);
  rec.store.n = cfg.n;
  rec.store.d = cfg.d;
  rec.store.stride = std::max<std::size_t>(cfg.record_stride, 1);

  RngStream rng(cfg.seed);
  ParticleEnsemble ensemble(cfg.n, cfg.d);
  initialize_ensemble(ensemble, cfg.init, rng, cfg.replica);

  auto diag = [&](const ParticleEnsemble& e) {
    rec.series.push_back({e.k, e.tau, e.mean_moment(2), e.mean_moment(4)});
  };
  diag(ensemble);
  record_state(rec.store, ensemble);

  auto done = [&]() {
    if (cfg.steps) return ensemble.k >= *cfg.steps;
    return ensemble.tau >= *cfg.horizon_tau;
  };

  while (!done()) {
    try {
      step(ensemble, model, *rec.grid, cfg.noise, rng, cfg.replica, threads,
           cfg.divergence_guard);
    } catch (const DivergenceError& e) {
      rec.error = e.what();
      break;
    }
    diag(ensemble);
    if (ensemble.k % rec.store.stride == 0 && ensemble.tau >= cfg.record_from_tau)
      record_state(rec.store, ensemble);
  }
  // the final state is always recorded
  if (rec.store.steps.back() != ensemble.k) record_state(rec.store, ensemble);
  return rec;
}

std::vector<RunRecord> run_replicas(const GranularMediaModel& model, const StepSchedule& schedule,
                                    RunConfig base, std::size_t replicas, int threads) {
  std::vector<RunRecord> out(replicas);
  const std::size_t nt = std::max(1, threads);
  if (nt <= 1 || replicas <= 1) {
    for (std::size_t r = 0; r < replicas; ++r) {
      RunConfig cfg = base;
      cfg.replica = static_cast<std::uint32_t>(r);
      out[r] = run(model, schedule, cfg, 1);
    }
    return out;
  }
  std::atomic<std::size_t> cursor{0};
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < std::min(nt, replicas); ++t) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t r = cursor.fetch_add(1);
        if (r >= replicas) return;
        RunConfig cfg = base;
        cfg.replica = static_cast<std::uint32_t>(r);
        out[r] = run(model, schedule, cfg, 1);
      }
    });
  }
  for (auto& th : pool) th.join();
  return out;
}

}  // namespace mkv
