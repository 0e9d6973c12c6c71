#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "mkv/stationary.hpp"
#include "mkv/transport.hpp"

using namespace mkv;

TEST_CASE("measure grid bookkeeping") {
  auto g = gaussian_on_grid(GridSpec::line(-6.0, 6.0, 0.01), {0.0}, 1.0);
  CHECK(g.mass() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(g.mean()[0] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(g.variance()[0] == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(g.boundary_shell_mass() < 1e-6);
  g.validate();

  const auto sample = g.to_weighted_sample();
  double sum = 0.0;
  for (double w : sample.weights) sum += w;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));

  // a grid too small for its mass fails validation
  auto tight = gaussian_on_grid(GridSpec::line(-1.0, 1.0, 0.01), {0.0}, 1.0);
  CHECK_THROWS_AS(tight.validate(), GridError);
}

TEST_CASE("quadratic convolution equals the direct lattice sum") {
  const auto grid = gaussian_on_grid(GridSpec::line(-4.0, 4.0, 0.125), {0.3}, 0.7);
  const auto U = InteractionPotential::quadratic(0.8);
  const Vec fast = convolve_potential(grid, U);
  const Vec fast_grad = convolve_gradient(grid, U);
  const double vol = grid.spec.cell_volume();
  Vec ci(1), cj(1), z(1), g(1);
  for (std::size_t i = 0; i < grid.cells(); i += 7) {
    grid.cell_center(i, ci);
    double direct = 0.0, direct_grad = 0.0;
    for (std::size_t j = 0; j < grid.cells(); ++j) {
      grid.cell_center(j, cj);
      z[0] = ci[0] - cj[0];
      direct += U(z) * grid.density[j] * vol;
      U.gradient(z, g);
      direct_grad += g[0] * grid.density[j] * vol;
    }
    CHECK(fast[i] == doctest::Approx(direct).epsilon(1e-12));
    CHECK(fast_grad[i] == doctest::Approx(direct_grad).epsilon(1e-12));
  }
}

TEST_CASE("gaussian kernel convolution: separable equals direct in 2d") {
  auto spec = GridSpec::square(-2.0, 2.0, 0.25);
  auto grid = gaussian_on_grid(spec, {0.2, -0.4}, 0.5);
  const auto U = InteractionPotential::gaussian_kernel(0.9);
  const Vec fast = convolve_potential(grid, U);
  const Vec fast_grad = convolve_gradient(grid, U);
  const double vol = grid.spec.cell_volume();
  Vec ci(2), cj(2), z(2), g(2);
  for (std::size_t i = 0; i < grid.cells(); i += 13) {
    grid.cell_center(i, ci);
    double direct = 0.0;
    Vec dg(2, 0.0);
    for (std::size_t j = 0; j < grid.cells(); ++j) {
      grid.cell_center(j, cj);
      z[0] = ci[0] - cj[0];
      z[1] = ci[1] - cj[1];
      direct += U(z) * grid.density[j] * vol;
      U.gradient(z, g);
      dg[0] += g[0] * grid.density[j] * vol;
      dg[1] += g[1] * grid.density[j] * vol;
    }
    CHECK(fast[i] == doctest::Approx(direct).epsilon(1e-11));
    CHECK(fast_grad[i * 2 + 0] == doctest::Approx(dg[0]).epsilon(1e-11));
    CHECK(fast_grad[i * 2 + 1] == doctest::Approx(dg[1]).epsilon(1e-11));
  }
}

TEST_CASE("custom kernels run through the guarded direct sum") {
  const auto grid = gaussian_on_grid(GridSpec::line(-3.0, 3.0, 0.1), {0.0}, 0.8);
  ScalarField f;
  f.value = [](ConstSpan z) { return 0.4 * norm_sq(z); };
  f.gradient = [](ConstSpan z, MutSpan o) { o[0] = 0.8 * z[0]; };
  const auto as_custom = InteractionPotential::custom(f);
  const auto as_library = InteractionPotential::quadratic(0.8);
  const Vec a = convolve_potential(grid, as_custom);
  const Vec b = convolve_potential(grid, as_library);
  for (std::size_t i = 0; i < grid.cells(); ++i)
    CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-11));
}

TEST_CASE("gaussian reference solves the quadratic first-order condition") {
  const auto spec = GridSpec::line(-6.0, 6.0, 0.01);
  CHECK(gaussian_reference(1.0, 0.0, 1.0, spec).variance == doctest::Approx(1.0));
  const auto ref = gaussian_reference(1.0, 1.0, 1.0, spec);
  CHECK(ref.variance == doctest::Approx(0.5));
  CHECK(ref.grid.variance()[0] == doctest::Approx(0.5).epsilon(1e-6));
  // sigma -> s sigma scales the variance by s^2
  CHECK(gaussian_reference(1.0, 1.0, 2.0, GridSpec::line(-12.0, 12.0, 0.02)).variance ==
        doctest::Approx(4.0 * ref.variance));
  CHECK_THROWS_AS(gaussian_reference(0.0, 0.0, 1.0, spec), Error);
  CHECK_THROWS_AS(gaussian_reference(1.0, 0.0, 0.0, spec), Error);
}

TEST_CASE("fixed point solve lands on the closed-form gaussian") {
  const auto model = quadratic_model(1.0, 1.0, 1.0, 1);
  const auto spec = GridSpec::line(-6.0, 6.0, 0.02);
  const auto init = gaussian_on_grid(spec, {0.0}, 1.0);
  const auto res = fixed_point_solve(model, init, 0.5, 1e-10, 2000);
  CHECK(res.converged);
  CHECK(res.grid.variance()[0] == doctest::Approx(0.5).epsilon(2e-3));
  CHECK(res.grid.mass() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("no interaction: the update map is constant in rho") {
  const auto model = quadratic_model(1.3, 0.0, 0.9, 1);
  const auto spec = GridSpec::line(-5.0, 5.0, 0.02);
  const auto a = fixed_point_solve(model, gaussian_on_grid(spec, {1.5}, 0.3), 1.0, 1e-12, 50);
  const auto b = fixed_point_solve(model, gaussian_on_grid(spec, {-2.0}, 1.5), 1.0, 1e-12, 50);
  CHECK(a.iterations <= 3);
  CHECK(b.iterations <= 3);
  for (std::size_t i = 0; i < a.grid.cells(); ++i)
    CHECK(a.grid.density[i] == doctest::Approx(b.grid.density[i]).epsilon(1e-12));
  // and it is the Gibbs density of V: variance sigma^2 / lambda
  CHECK(a.grid.variance()[0] == doctest::Approx(0.81 / 1.3).epsilon(1e-3));
}

TEST_CASE("double-well regime carries three branches") {
  const auto model = double_well_model(0.5, std::sqrt(0.2), 1);
  const auto spec = GridSpec::line(-3.0, 3.0, 0.01);
  std::vector<MeasureGrid> inits;
  for (double mean : {-1.0, 0.0, 1.0}) inits.push_back(gaussian_on_grid(spec, {mean}, 0.1));
  const auto branches = enumerate_branches(model, spec, inits, 0.5, 1e-10, 20000);
  REQUIRE(branches.size() == 3);
  for (const auto& b : branches) CHECK(b.converged);
  // pairwise W2 separation above 10 cells
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = i + 1; j < 3; ++j) {
      const double w = wasserstein(branches[i].grid.to_weighted_sample(1e-300),
                                   branches[j].grid.to_weighted_sample(1e-300), 2)
                           .distance;
      CHECK(w > 10.0 * spec.h);
    }
  // one symmetric and two mirrored asymmetric fixed points
  std::vector<double> means;
  for (const auto& b : branches) means.push_back(b.grid.mean()[0]);
  std::sort(means.begin(), means.end());
  CHECK(means[1] == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(means[2] == doctest::Approx(-means[0]).epsilon(1e-6));
  CHECK(means[2] > 0.3);
}

TEST_CASE("branch deduplication collapses the unique regime") {
  const auto model = quadratic_model(1.0, 1.0, 1.0, 1);
  const auto spec = GridSpec::line(-6.0, 6.0, 0.02);
  std::vector<MeasureGrid> inits;
  for (double mean : {-1.0, 0.0, 1.0}) inits.push_back(gaussian_on_grid(spec, {mean}, 0.5));
  const auto branches = enumerate_branches(model, spec, inits, 0.5, 1e-10, 5000);
  CHECK(branches.size() == 1);
  CHECK(enumerate_branches(model, spec, {}, 0.5, 1e-10, 100).empty());
}

TEST_CASE("even data with symmetric init keeps the fixed point even") {
  const auto model = double_well_model(0.5, std::sqrt(0.2), 1);
  const auto spec = GridSpec::line(-3.0, 3.0, 0.01);
  const auto res = fixed_point_solve(model, gaussian_on_grid(spec, {0.0}, 0.3), 0.5, 1e-12, 20000);
  const std::size_t n = res.grid.cells();
  double max_asym = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    max_asym = std::max(max_asym, std::fabs(res.grid.density[i] - res.grid.density[n - 1 - i]));
  CHECK(max_asym <= 1e-8);
}

TEST_CASE("grid refinement changes the variance estimate at second order") {
  const auto model = quadratic_model(1.0, 1.0, 1.0, 1);
  auto solve_var = [&](double h) {
    const auto spec = GridSpec::line(-6.0, 6.0, h);
    return fixed_point_solve(model, gaussian_on_grid(spec, {0.0}, 1.0), 0.5, 1e-11, 5000)
        .grid.variance()[0];
  };
  const double v4 = solve_var(0.04);
  const double v2 = solve_var(0.02);
  const double v1 = solve_var(0.01);
  CHECK(std::fabs(v2 - v4) <= 1.0 * 0.04 * 0.04);
  CHECK(std::fabs(v1 - v2) <= 1.0 * 0.02 * 0.02);
  CHECK(std::fabs(v1 - 0.5) <= 1e-3);
}

TEST_CASE("solver rejects sigma = 0 and flags non-convergence") {
  auto frozen = quadratic_model(1.0, 1.0, 0.0, 1);
  const auto spec = GridSpec::line(-3.0, 3.0, 0.05);
  CHECK_THROWS_AS(fixed_point_solve(frozen, gaussian_on_grid(spec, {0.0}, 0.5)), Error);

  const auto model = quadratic_model(1.0, 1.0, 1.0, 1);
  const auto spec6 = GridSpec::line(-6.0, 6.0, 0.02);
  const auto res =
      fixed_point_solve(model, gaussian_on_grid(spec6, {2.0}, 2.0), 0.5, 1e-14, 3);
  CHECK_FALSE(res.converged);
  CHECK(res.iterations == 3);
}
