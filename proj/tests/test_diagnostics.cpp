#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "mkv/diagnostics.hpp"
#include "mkv/stationary.hpp"

using namespace mkv;

namespace {

PathSampleSet constant_path_set(std::size_t n, double value, std::size_t n_times,
                                double grid_step) {
  PathSampleSet set;
  set.n_paths = n;
  set.d = 1;
  set.n_times = n_times;
  set.grid_step = grid_step;
  set.values.assign(n * n_times, value);
  return set;
}

Vec gaussian_samples(std::uint64_t seed, std::size_t m, double mean, double std_dev) {
  RngStream rng(seed);
  Vec out(m);
  for (std::size_t i = 0; i < m; ++i)
    out[i] = mean + std_dev * rng.normal({0, static_cast<std::uint32_t>(i & 0xffffffu),
                                          i >> 24, 0});
  return out;
}

}  // namespace

TEST_CASE("G vanishes on frozen paths and away from the support") {
  GranularMediaModel frozen;
  frozen.d = 1;
  frozen.V = ConfinementPotential::zero();
  frozen.U = InteractionPotential::none();
  frozen.sigma = 0.0;
  const auto model = frozen.as_mean_field();
  const auto paths = constant_path_set(16, 0.4, 65, 1.0 / 32.0);
  const auto g = GFunctional::default_bump(1, 3.0, 0.0, 1.0);
  CHECK(evaluate_G(g, paths, model) == 0.0);

  // bump supported away from every path
  GFunctional far;
  far.phi = TestFunctionBundle::radial_bump({100.0}, 1.0);
  far.s = 0.0;
  far.t = 1.0;
  const auto living = quadratic_model(1.0, 0.0, 1.0, 1).as_mean_field();
  CHECK(evaluate_G(far, paths, living) == 0.0);
}

TEST_CASE("G guards its window and resolution") {
  const auto model = quadratic_model(1.0, 0.0, 1.0, 1).as_mean_field();
  const auto paths = constant_path_set(4, 0.0, 33, 1.0 / 32.0);
  auto g = GFunctional::default_bump(1, 3.0, 0.0, 2.0);
  CHECK_THROWS_AS(evaluate_G(g, paths, model), TimeRangeError);
  const auto coarse = constant_path_set(4, 0.0, 5, 0.25);
  g.t = 1.0;
  CHECK_THROWS_AS(evaluate_G(g, coarse, model), ResolutionError);
  GFunctional bad = g;
  bad.v_times = {0.5};
  bad.h = {};
  CHECK_THROWS_AS(evaluate_G(bad, paths, model), ShapeError);
}

TEST_CASE("G is linear in phi and multiplicative in the h factors") {
  const auto model = quadratic_model(1.0, 1.0, 1.0, 1).as_mean_field();
  // a mildly wiggly deterministic path set
  PathSampleSet paths = constant_path_set(8, 0.0, 65, 1.0 / 32.0);
  for (std::size_t i = 0; i < paths.n_paths; ++i)
    for (std::size_t k = 0; k < paths.n_times; ++k)
      paths.values[i * paths.n_times + k] =
          0.3 * std::sin(0.2 * static_cast<double>(i + 1) * static_cast<double>(k)) +
          0.05 * static_cast<double>(i);

  const auto f = TestFunctionBundle::radial_bump({0.0}, 2.0);
  const auto h = TestFunctionBundle::radial_bump({0.2}, 3.0);
  GFunctional gf = GFunctional::default_bump(1, 2.0, 0.25, 1.5);
  gf.phi = f;
  GFunctional gh = gf;
  gh.phi = h;
  GFunctional gc = gf;
  gc.phi = TestFunctionBundle::combine(2.0, f, -0.7, h);
  const double lhs = evaluate_G(gc, paths, model);
  const double rhs = 2.0 * evaluate_G(gf, paths, model) - 0.7 * evaluate_G(gh, paths, model);
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));

  // scaling one h factor scales G; a pointwise product equals two factors
  auto box = [](ConstSpan x) { return std::fabs(x[0]) < 1.5 ? 1.0 + 0.3 * x[0] : 0.0; };
  auto tent = [](ConstSpan x) { return std::max(0.0, 1.0 - std::fabs(x[0])); };
  GFunctional one = gf;
  one.v_times = {0.1};
  one.h = {box};
  GFunctional scaled = one;
  scaled.h = {[box](ConstSpan x) { return 3.0 * box(x); }};
  CHECK(evaluate_G(scaled, paths, model) ==
        doctest::Approx(3.0 * evaluate_G(one, paths, model)).epsilon(1e-13));
  GFunctional two = gf;
  two.v_times = {0.1, 0.1};
  two.h = {box, tent};
  GFunctional prod = gf;
  prod.v_times = {0.1};
  prod.h = {[box, tent](ConstSpan x) { return box(x) * tent(x); }};
  CHECK(evaluate_G(two, paths, model) ==
        doctest::Approx(evaluate_G(prod, paths, model)).epsilon(1e-13));
}

TEST_CASE("single-particle OU windows average G to zero within error bars") {
  const auto gm = quadratic_model(1.0, 0.0, 1.0, 1);
  const auto model = gm.as_mean_field();
  const auto schedule = StepSchedule::power_law(0.1, 0.5);
  const GFunctional g = GFunctional::default_bump(1, 3.0, 0.0, 1.0);
  const std::size_t reps = 1000;
  double sum = 0.0, sum_sq = 0.0;
  for (std::size_t rep = 0; rep < reps; ++rep) {
    RunConfig cfg;
    cfg.n = 1;
    cfg.d = 1;
    cfg.seed = 424242;
    cfg.replica = static_cast<std::uint32_t>(rep);
    cfg.horizon_tau = 3.2;
    cfg.init.kind = InitKind::gaussian;
    const auto rec = run(gm, schedule, cfg);
    const auto paths = path_sample(rec.store, 2.0, 1.0, 1.0 / 64.0);
    const double v = evaluate_G(g, paths, model);
    sum += v;
    sum_sq += v * v;
  }
  const double mean = sum / static_cast<double>(reps);
  const double var = sum_sq / static_cast<double>(reps) - mean * mean;
  const double se = std::sqrt(var / static_cast<double>(reps));
  CHECK(std::fabs(mean) <= 3.0 * se + 1e-12);
}

TEST_CASE("kernel density estimate against the analytic gaussian") {
  const auto spec = GridSpec::line(-6.0, 6.0, 0.01);
  const auto mu = WeightedSampleMeasure::uniform(1, gaussian_samples(7, 1000000, 0.0, 1.0));
  const auto est = estimate_density(mu, spec);
  double max_err = 0.0;
  Vec c(1);
  for (std::size_t i = 0; i < est.grid.cells(); ++i) {
    est.grid.cell_center(i, c);
    const double exact = std::exp(-0.5 * c[0] * c[0]) / std::sqrt(2.0 * M_PI);
    max_err = std::max(max_err, std::fabs(est.grid.density[i] - exact));
  }
  CHECK(max_err <= 0.01);
}

TEST_CASE("degenerate and bimodal samples") {
  const auto spec = GridSpec::line(-6.0, 6.0, 0.01);
  const auto point = WeightedSampleMeasure::uniform(1, Vec(128, 1.25));
  const auto est = estimate_density(point, spec);
  CHECK(est.bandwidth[0] == doctest::Approx(0.02));  // two-cell floor
  CHECK(est.grid.mass() == doctest::Approx(1.0).epsilon(1e-12));
  double near = 0.0;
  Vec c(1);
  for (std::size_t i = 0; i < est.grid.cells(); ++i) {
    est.grid.cell_center(i, c);
    if (std::fabs(c[0] - 1.25) <= 4.0 * est.bandwidth[0])
      near += est.grid.density[i] * est.grid.spec.cell_volume();
  }
  CHECK(near >= 0.999);

  Vec mix = gaussian_samples(9, 50000, -2.0, std::sqrt(0.1));
  const Vec right = gaussian_samples(10, 50000, 2.0, std::sqrt(0.1));
  mix.insert(mix.end(), right.begin(), right.end());
  const auto bimodal = estimate_density(WeightedSampleMeasure::uniform(1, mix), spec);
  // modes at +-2 within a bandwidth
  std::size_t left_peak = 0, right_peak = 0;
  for (std::size_t i = 0; i < bimodal.grid.cells(); ++i) {
    if (bimodal.grid.density[i] > bimodal.grid.density[left_peak] && i < 600) left_peak = i;
    if (i >= 600 &&
        (right_peak < 600 || bimodal.grid.density[i] > bimodal.grid.density[right_peak]))
      right_peak = i;
  }
  Vec lc(1), rc(1);
  bimodal.grid.cell_center(left_peak, lc);
  bimodal.grid.cell_center(right_peak, rc);
  CHECK(std::fabs(lc[0] + 2.0) <= bimodal.bandwidth[0] + 0.02);
  CHECK(std::fabs(rc[0] - 2.0) <= bimodal.bandwidth[0] + 0.02);

  CHECK_THROWS_AS(
      estimate_density(WeightedSampleMeasure::uniform(3, {0.0, 0.0, 0.0}), spec), GridError);
}

TEST_CASE("helmholtz terms of the standard gaussian") {
  const auto model = quadratic_model(1.0, 0.0, 1.0, 1);
  const auto density = gaussian_on_grid(GridSpec::line(-8.0, 8.0, 0.005), {0.0}, 1.0);
  const auto H = helmholtz(density, model);
  CHECK(H.entropy == doctest::Approx(-0.5 * std::log(2.0 * M_PI * std::exp(1.0))).epsilon(1e-3));
  CHECK(H.confinement == doctest::Approx(0.5).epsilon(1e-3));
  CHECK(H.interaction == 0.0);
  CHECK(H.total == H.entropy + H.confinement + H.interaction);  // exact decomposition
  CHECK(H.total == doctest::Approx(-0.91893853).epsilon(1e-3));
}

TEST_CASE("helmholtz scaling in sigma and the sigma=0 flag") {
  const auto density = gaussian_on_grid(GridSpec::line(-6.0, 6.0, 0.01), {0.2}, 0.7);
  const auto m1 = quadratic_model(1.0, 0.5, 1.0, 1);
  const auto m2 = quadratic_model(1.0, 0.5, 2.0, 1);
  const auto h1 = helmholtz(density, m1);
  const auto h2 = helmholtz(density, m2);
  CHECK(h2.entropy == doctest::Approx(4.0 * h1.entropy).epsilon(1e-14));
  CHECK(h2.confinement == h1.confinement);
  CHECK(h2.interaction == h1.interaction);

  const auto frozen = quadratic_model(1.0, 0.5, 0.0, 1);
  const auto h0 = helmholtz(density, frozen);
  CHECK_FALSE(h0.entropy_valid);
  CHECK(h0.entropy == 0.0);

  auto unnormalized = density;
  for (double& v : unnormalized.density) v *= 1.5;
  CHECK_THROWS_AS(helmholtz(unnormalized, m1), GridError);
}

TEST_CASE("stationarity residual separates critical from non-critical densities") {
  const auto model = quadratic_model(1.0, 1.0, 1.0, 1);
  const auto spec = GridSpec::line(-6.0, 6.0, 0.01);
  const auto critical = gaussian_on_grid(spec, {0.0}, 0.5);
  CHECK(stationarity_residual(critical, model) <= 1e-4);  // vanishes at continuum
  const auto wrong = gaussian_on_grid(spec, {0.0}, 1.0);
  CHECK(stationarity_residual(wrong, model) > 0.1);

  GranularMediaModel empty;
  empty.d = 1;
  empty.V = ConfinementPotential::zero();
  empty.U = InteractionPotential::none();
  empty.sigma = 0.0;
  CHECK(stationarity_residual(wrong, empty) == 0.0);
}

TEST_CASE("stationarity residual is equivariant under whole-cell translation") {
  // V centered at c, U quadratic; translate density, V and the grid together
  auto make_model = [](double center) {
    GranularMediaModel m;
    m.d = 1;
    ScalarField f;
    f.value = [center](ConstSpan x) {
      const double z = x[0] - center;
      return 0.5 * z * z;
    };
    f.gradient = [center](ConstSpan x, MutSpan o) { o[0] = x[0] - center; };
    m.V = ConfinementPotential::custom(f);
    m.U = InteractionPotential::quadratic(0.6);
    m.sigma = 1.0;
    return m;
  };
  const double h = 0.01;
  const std::ptrdiff_t cells_shift = 37;
  const double shift = static_cast<double>(cells_shift) * h;
  const auto base = gaussian_on_grid(GridSpec::line(-6.0, 6.0, h), {0.3}, 0.8);
  GridSpec moved_spec = base.spec;
  moved_spec.lower[0] += shift;
  const MeasureGrid moved(moved_spec, base.density);
  const double r0 = stationarity_residual(base, make_model(0.0));
  const double r1 = stationarity_residual(moved, make_model(shift));
  CHECK(r0 == doctest::Approx(r1).epsilon(1e-9));
}

TEST_CASE("ergodic distance curve: self-reference and frozen dynamics") {
  const auto model = quadratic_model(1.0, 1.0, 1.0, 1);
  RunConfig cfg;
  cfg.n = 32;
  cfg.d = 1;
  cfg.seed = 5;
  cfg.steps = 40;
  cfg.record_stride = 3;
  const auto rec = run(model, StepSchedule::power_law(0.3, 0.7), cfg);

  // refs = every recorded state: the distance is identically zero
  std::vector<WeightedSampleMeasure> self_refs;
  for (std::size_t j = 0; j < rec.store.times.size(); ++j) {
    Vec pts(rec.store.positions.begin() + static_cast<std::ptrdiff_t>(j * 32),
            rec.store.positions.begin() + static_cast<std::ptrdiff_t>((j + 1) * 32));
    self_refs.push_back(WeightedSampleMeasure::uniform(1, std::move(pts)));
  }
  for (const auto& pt : ergodic_distance_curve(rec, self_refs, 2)) {
    CHECK(pt.distance == 0.0);
    CHECK(pt.average == 0.0);
  }

  // frozen run: constant distance D gives a curve identically D
  GranularMediaModel frozen;
  frozen.d = 1;
  frozen.V = ConfinementPotential::zero();
  frozen.U = InteractionPotential::none();
  frozen.sigma = 0.0;
  RunConfig fcfg = cfg;
  fcfg.init.kind = InitKind::point;
  fcfg.init.point = {0.0};
  const auto frec = run(frozen, StepSchedule::power_law(0.3, 0.7), fcfg);
  const auto ref = WeightedSampleMeasure::uniform(1, {3.0});
  const auto curve = ergodic_distance_curve(frec, {ref}, 2);
  for (const auto& pt : curve) {
    CHECK(pt.distance == doctest::Approx(3.0).epsilon(1e-14));
    CHECK(pt.average == doctest::Approx(3.0).epsilon(1e-12));
  }
}

TEST_CASE("lipschitz functional averages") {
  const auto model = quadratic_model(1.0, 1.0, 1.0, 1);
  RunConfig cfg;
  cfg.n = 64;
  cfg.d = 1;
  cfg.seed = 17;
  cfg.steps = 200;
  const auto rec = run(model, StepSchedule::power_law(0.4, 0.7), cfg);
  // constants pass through exactly
  CHECK(lipschitz_functional_average(rec, [](ConstSpan) { return 2.5; }) ==
        doctest::Approx(2.5).epsilon(1e-12));

  // odd functional under a symmetric model: mean over replicas within 3 SE of 0
  Vec avgs;
  for (std::uint32_t r = 0; r < 8; ++r) {
    RunConfig rcfg = cfg;
    rcfg.replica = r;
    rcfg.horizon_tau = 30.0;
    rcfg.steps.reset();
    rcfg.record_stride = 1;
    const auto rrec = run(model, StepSchedule::power_law(0.4, 0.7), rcfg);
    avgs.push_back(lipschitz_functional_average(rrec, [](ConstSpan x) { return x[0]; }));
  }
  double mean = 0.0, var = 0.0;
  for (double v : avgs) mean += v;
  mean /= static_cast<double>(avgs.size());
  for (double v : avgs) var += (v - mean) * (v - mean);
  var /= static_cast<double>(avgs.size() - 1);
  const double se = std::sqrt(var / static_cast<double>(avgs.size()));
  CHECK(std::fabs(mean) <= 3.0 * se + 1e-12);

  // |x|^2 over a long run approaches the stationary second moment
  RunConfig lcfg = cfg;
  lcfg.n = 512;
  lcfg.steps.reset();
  lcfg.horizon_tau = 30.0;
  lcfg.record_stride = 1;
  const auto lrec = run(model, StepSchedule::power_law(0.4, 0.7), lcfg);
  const double m2_avg =
      lipschitz_functional_average(lrec, [](ConstSpan x) { return x[0] * x[0]; });
  CHECK(std::fabs(m2_avg - 0.5) <= 0.05);
}

TEST_CASE("replica law distance") {
  const auto model = quadratic_model(1.0, 1.0, 1.0, 1);
  RunConfig cfg;
  cfg.n = 16;
  cfg.d = 1;
  cfg.seed = 99;
  cfg.steps = 60;
  cfg.init.kind = InitKind::point;
  cfg.init.point = {1.5};
  const auto runs = run_replicas(model, StepSchedule::power_law(0.4, 0.7), cfg, 80, 4);

  // the sample against itself
  const auto self = replica_marginal_sample(runs, 1, 60);
  CHECK(replica_law_distance(runs, 1, 60, self, 2) == 0.0);

  // too few replicas, marginal order out of range
  const std::vector<RunRecord> few(runs.begin(), runs.begin() + 32);
  CHECK_THROWS_AS(replica_law_distance(few, 1, 60, self, 2), Error);
  CHECK_THROWS_AS(replica_law_distance(runs, 4, 60, self, 2), Error);

  // early step from a common point: the pair law is far from independence
  const auto early_pair = replica_marginal_sample(runs, 2, 2);
  const auto early_one = replica_marginal_sample(runs, 1, 2);
  Vec prod, single;
  RngStream rng(7);
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const double a = 1.5 + 0.5 * rng.normal({0, static_cast<std::uint32_t>(i), 1, 0});
    const double b = 1.5 + 0.5 * rng.normal({0, static_cast<std::uint32_t>(i), 1, 1});
    prod.push_back(a);
    prod.push_back(b);
    single.push_back(a);
  }
  const double d2 = replica_law_distance(runs, 2, 2,
                                         WeightedSampleMeasure::uniform(2, prod), 2);
  const double d1 = replica_law_distance(runs, 1, 2,
                                         WeightedSampleMeasure::uniform(1, single), 2);
  CHECK(d2 > d1);
}
