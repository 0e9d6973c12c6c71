// Acceptance suite: one line per criterion, nonzero exit on any failure.
// Everything below is pinned: models, schedules, seeds, thresholds.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <vector>

#include "mkv/diagnostics.hpp"
#include "mkv/stationary.hpp"

using namespace mkv;

namespace {

int g_failures = 0;

void report(const char* name, bool pass, const std::string& detail) {
  std::printf("[%s] %s  %s\n", pass ? "PASS" : "FAIL", name, detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

WeightedSampleMeasure gaussian_grid_sample(double lambda, double alpha, double sigma) {
  return gaussian_reference(lambda, alpha, sigma, GridSpec::line(-6.0, 6.0, 0.01))
      .grid.to_weighted_sample(1e-300);
}

// A1 configuration, shared by A2/A7/A8 and (at n=256) by A9
RunConfig base_run_config(std::size_t n) {
  RunConfig cfg;
  cfg.n = n;
  cfg.d = 1;
  cfg.seed = 20260810;
  cfg.horizon_tau = 20.0;
  cfg.init.kind = InitKind::point;
  cfg.init.point = {2.0};
  cfg.record_stride = 4;
  return cfg;
}

}  // namespace

int main() {
  const auto model = quadratic_model(1.0, 1.0, 1.0, 1);
  const auto schedule = StepSchedule::power_law(0.5, 0.7);
  const auto reference = gaussian_grid_sample(1.0, 1.0, 1.0);

  // ---- A1: pointwise convergence to the attractor --------------------------
  auto t0 = std::chrono::steady_clock::now();
  const RunRecord a1 = run(model, schedule, base_run_config(1024), /*threads=*/1);
  const double a1_seconds = seconds_since(t0);
  {
    Vec final_pts(a1.store.positions.end() - 1024, a1.store.positions.end());
    const auto mu = WeightedSampleMeasure::uniform(1, std::move(final_pts));
    const double w2 = wasserstein(mu, reference, 2).distance;
    const bool pass = !a1.failed() && w2 <= 0.15 && a1_seconds <= 60.0;
    report("A1 attractor", pass,
           cat("final W2=", w2, " (limit 0.15), runtime ", a1_seconds, "s (limit 60)"));
  }

  // ---- A2: ergodic distance statistic --------------------------------------
  {
    const auto curve = ergodic_distance_curve(a1, {reference}, 2);
    double at_tau2 = curve.back().average;
    for (const auto& pt : curve)
      if (pt.tau >= 2.0) {
        at_tau2 = pt.average;
        break;
      }
    const double final_avg = curve.back().average;
    const bool pass = final_avg <= 0.5 * at_tau2 && final_avg <= 0.2;
    report("A2 ergodic statistic", pass,
           cat("avg@tau2=", at_tau2, ", final=", final_avg, " (limits: half of tau2, 0.2)"));
  }

  // ---- A3: transport oracle -------------------------------------------------
  t0 = std::chrono::steady_clock::now();
  {
    RngStream rng(314159);
    double max_delta = 0.0;
    std::size_t checked = 0;
    for (std::size_t inst = 0; inst < 200; ++inst) {
      const std::size_t m = 2 + inst % 5;                 // up to 6 atoms
      const std::size_t d = 1 + inst % 3;                 // up to 3 dims
      auto draw = [&](std::uint32_t which) {
        Vec pts(m * d);
        for (std::size_t i = 0; i < pts.size(); ++i)
          pts[i] = 6.0 * rng.uniform({which, static_cast<std::uint32_t>(i), inst, 0}) - 3.0;
        return WeightedSampleMeasure::uniform(d, std::move(pts));
      };
      const auto mu = draw(0);
      const auto nu = draw(1);
      for (int p : {1, 2}) {
        const double oracle = wasserstein_bruteforce(mu, nu, p);
        const double solver = wasserstein(mu, nu, p).distance;
        max_delta = std::max(max_delta, std::fabs(solver - oracle));
        ++checked;
      }
    }
    const double secs = seconds_since(t0);
    const bool pass = max_delta <= 1e-12 && secs <= 5.0;
    report("A3 transport oracle", pass,
           cat(checked, " instances, max |delta|=", max_delta, ", runtime ", secs, "s"));
  }

  // ---- A4: stationary solver vs closed form --------------------------------
  t0 = std::chrono::steady_clock::now();
  {
    const auto spec = GridSpec::line(-6.0, 6.0, 0.01);
    const auto res =
        fixed_point_solve(model, gaussian_on_grid(spec, {0.0}, 1.0), 0.5, 1e-10, 10000);
    const double var = res.grid.variance()[0];
    const double resid = stationarity_residual(res.grid, model);
    const double secs = seconds_since(t0);
    const bool pass =
        res.converged && std::fabs(var - 0.5) <= 1e-3 && resid <= 0.02 && secs <= 10.0;
    report("A4 stationary solver", pass,
           cat("variance=", var, " (target 0.5 +- 1e-3), residual=", resid,
               " (limit 0.02), runtime ", secs, "s"));
  }

  // ---- A5: non-uniqueness regime --------------------------------------------
  t0 = std::chrono::steady_clock::now();
  {
    const auto dw = double_well_model(0.5, std::sqrt(0.2), 1);
    const auto spec = GridSpec::line(-3.0, 3.0, 0.01);
    std::vector<MeasureGrid> inits;
    for (double mean : {-1.0, 0.0, 1.0}) inits.push_back(gaussian_on_grid(spec, {mean}, 0.1));
    const auto branches = enumerate_branches(dw, spec, inits, 0.5, 1e-10, 20000);

    bool pass = branches.size() >= 3;
    std::string detail = cat(branches.size(), " branches");
    double min_sep = 1e300;
    double max_resid = 0.0;
    std::vector<WeightedSampleMeasure> branch_samples;
    for (const auto& b : branches) {
      branch_samples.push_back(b.grid.to_weighted_sample(1e-300));
      max_resid = std::max(max_resid, stationarity_residual(b.grid, dw));
    }
    for (std::size_t i = 0; i < branches.size(); ++i)
      for (std::size_t j = i + 1; j < branches.size(); ++j)
        min_sep = std::min(
            min_sep, wasserstein(branch_samples[i], branch_samples[j], 2).distance);
    pass = pass && min_sep > 0.1 && max_resid <= 0.02;

    // particle run started in the positive basin
    RunConfig cfg;
    cfg.n = 512;
    cfg.d = 1;
    cfg.seed = 20260811;
    cfg.horizon_tau = 20.0;
    cfg.init.kind = InitKind::gaussian;
    cfg.init.scale = 0.1;
    cfg.init.point = {1.0};
    cfg.record_stride = 8;
    const auto rec = run(dw, StepSchedule::power_law(0.25, 0.7), cfg);
    Vec final_pts(rec.store.positions.end() - 512, rec.store.positions.end());
    const auto mu = WeightedSampleMeasure::uniform(1, std::move(final_pts));
    const auto dist = distance_to_set(mu, branch_samples, 2);
    std::size_t positive_branch = 0;
    for (std::size_t i = 0; i < branches.size(); ++i)
      if (branches[i].grid.mean()[0] > branches[positive_branch].grid.mean()[0])
        positive_branch = i;
    const double secs = seconds_since(t0);
    pass = pass && !rec.failed() && dist.distance <= 0.2 && dist.argmin == positive_branch &&
           secs <= 120.0;
    report("A5 non-uniqueness", pass,
           cat(detail, ", min sep=", min_sep, ", max residual=", max_resid,
               ", run distance=", dist.distance, " -> branch ", dist.argmin, " (positive is ",
               positive_branch, "), runtime ", secs, "s"));
  }

  // ---- A6: martingale functional ladder -------------------------------------
  {
    // stiffer quadratic pair so the early-rung discretization bias dominates
    // the late-rung Monte-Carlo floor
    const auto gm = quadratic_model(2.0, 1.0, 1.5, 1);
    const auto mf = gm.as_mean_field();
    const auto lsched = StepSchedule::power_law(0.5, 0.5);
    const GFunctional g = GFunctional::default_bump(1, 3.0, 0.0, 16.0);
    const double grid_step = 1.0 / 64.0;
    const struct {
      double t;
      std::size_t n;
    } rungs[3] = {{5.0, 64}, {20.0, 256}, {80.0, 1024}};
    double ladder[3] = {0, 0, 0};
    for (int r = 0; r < 3; ++r) {
      RunConfig cfg;
      cfg.n = rungs[r].n;
      cfg.d = 1;
      cfg.seed = 20260812;
      cfg.horizon_tau = rungs[r].t + 16.2;
      cfg.init.kind = InitKind::point;
      cfg.record_stride = 1;
      cfg.record_from_tau = rungs[r].t - 0.5;
      const auto runs = run_replicas(gm, lsched, cfg, 16, 4);
      double acc = 0.0;
      for (const auto& rec : runs) {
        const auto paths = path_sample(rec.store, rungs[r].t, 16.0, grid_step);
        acc += std::fabs(evaluate_G(g, paths, mf));
      }
      ladder[r] = acc / 16.0;
    }
    const bool decreasing = ladder[0] > ladder[1] && ladder[1] > ladder[2];
    const bool third = ladder[2] <= ladder[0] / 3.0;
    report("A6 martingale ladder", decreasing && third,
           cat("mean|G| = ", ladder[0], " -> ", ladder[1], " -> ", ladder[2],
               " (strictly decreasing, last <= first/3)"));
  }

  // ---- A7: energy Lyapunov behavior -----------------------------------------
  {
    const auto spec = GridSpec::line(-6.0, 6.0, 0.01);
    const auto& store = a1.store;
    const std::size_t rows = store.times.size();
    Vec H(rows);
    for (std::size_t j = 0; j < rows; ++j) {
      Vec pts(store.positions.begin() + static_cast<std::ptrdiff_t>(j * 1024),
              store.positions.begin() + static_cast<std::ptrdiff_t>((j + 1) * 1024));
      const auto density = estimate_density(WeightedSampleMeasure::uniform(1, std::move(pts)),
                                            spec);
      H[j] = helmholtz(density, model).total;
    }
    // ergodic smoothing over a 50-record window: gamma mass weights
    Vec gaps(rows, 0.0);
    for (std::size_t j = 1; j < rows; ++j) gaps[j] = store.times[j] - store.times[j - 1];
    gaps[0] = gaps.size() > 1 ? gaps[1] : 1.0;
    Vec smooth(rows);
    for (std::size_t j = 0; j < rows; ++j) {
      const std::size_t lo = j >= 49 ? j - 49 : 0;
      double acc = 0.0, mass = 0.0;
      for (std::size_t i = lo; i <= j; ++i) {
        acc += gaps[i] * H[i];
        mass += gaps[i];
      }
      smooth[j] = acc / mass;
    }
    double upward = 0.0;
    for (std::size_t j = 1; j < rows; ++j) upward += std::max(0.0, smooth[j] - smooth[j - 1]);
    const double decrease = smooth.front() - smooth.back();
    const double exact =
        helmholtz(gaussian_reference(1.0, 1.0, 1.0, spec).grid, model).total;
    const double final_gap = std::fabs(smooth.back() - exact);
    const bool pass = upward <= 0.1 * decrease && final_gap <= 0.05;
    report("A7 energy decay", pass,
           cat("upward=", upward, " vs decrease=", decrease, " (10% budget), |final-exact|=",
               final_gap, " (limit 0.05)"));
  }

  // ---- A8: moment stability --------------------------------------------------
  {
    double max_m2 = 0.0;
    for (const auto& s : a1.series) max_m2 = std::max(max_m2, s.m2);
    report("A8 moment stability", max_m2 <= 5.0,
           cat("max m2=", max_m2, " (limit 5.0 = 10x stationary)"));
  }

  // ---- A9: long-run chaos ----------------------------------------------------
  {
    const auto runs = run_replicas(model, schedule, base_run_config(256), 128, 4);
    const std::size_t final_k = runs.front().store.steps.back();
    RngStream rng(271828);
    Vec ref_pts(128);
    for (std::size_t i = 0; i < 128; ++i)
      ref_pts[i] = std::sqrt(0.5) * rng.normal({9, static_cast<std::uint32_t>(i), 0, 0});
    const auto ref_sample = WeightedSampleMeasure::uniform(1, std::move(ref_pts));
    const double dist = replica_law_distance(runs, 1, final_k, ref_sample, 2);
    report("A9 replica law", dist <= 0.35,
           cat("W2(I^{1,n}, N(0,0.5) sample)=", dist, " (limit 0.35 = 4/sqrt(128))"));
  }

  // ---- A10: determinism and exchangeability ----------------------------------
  {
    RunConfig cfg = base_run_config(512);
    cfg.horizon_tau.reset();
    cfg.steps = 200;
    const auto one = run(model, schedule, cfg, 1);
    const auto eight = run(model, schedule, cfg, 8);
    const bool deterministic =
        one.store.positions == eight.store.positions && one.store.times == eight.store.times;

    // permuted particles with permuted lanes permute the trajectories exactly
    const auto pmodel = quadratic_model(1.0, 1.0, 1.0, 2);
    TimeGrid grid(schedule);
    RngStream rng(20260813);
    ParticleEnsemble a(16, 2);
    initialize_ensemble(a, InitSpec{InitKind::gaussian, 1.0, {}}, rng, 0);
    std::vector<std::size_t> perm(16);
    for (std::size_t i = 0; i < 16; ++i) perm[i] = (i * 7 + 3) % 16;
    ParticleEnsemble b(16, 2);
    for (std::size_t i = 0; i < 16; ++i) {
      for (std::size_t c = 0; c < 2; ++c) b.positions[i * 2 + c] = a.positions[perm[i] * 2 + c];
      b.lane_ids[i] = a.lane_ids[perm[i]];
    }
    for (int s = 0; s < 50; ++s) {
      step(a, pmodel, grid, NoiseModel{}, rng, 0);
      step(b, pmodel, grid, NoiseModel{}, rng, 0);
    }
    bool exchangeable = true;
    for (std::size_t i = 0; i < 16; ++i)
      for (std::size_t c = 0; c < 2; ++c)
        exchangeable = exchangeable && b.positions[i * 2 + c] == a.positions[perm[i] * 2 + c];
    report("A10 determinism+exchangeability", deterministic && exchangeable,
           cat("threads 1 vs 8 identical: ", deterministic ? "yes" : "no",
               ", permutation exact: ", exchangeable ? "yes" : "no"));
  }

  std::printf("%d/10 criteria passed\n", 10 - g_failures);
  return g_failures == 0 ? 0 : 1;
}
