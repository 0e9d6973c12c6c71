#include "mkv/stationary.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mkv/transport.hpp"

namespace mkv {

MeasureGrid gaussian_on_grid(const GridSpec& spec, const Vec& mean, double variance) {
  spec.validate();
  if (!(variance > 0.0)) throw GridError(cat("gaussian variance must be positive, got ", variance));
  Vec mu = mean;
  mu.resize(spec.d, 0.0);
  Vec c(spec.d);
  MeasureGrid g(spec, Vec(spec.cells(), 0.0));
  for (std::size_t i = 0; i < g.cells(); ++i) {
    g.cell_center(i, c);
    double q = 0.0;
    for (std::size_t a = 0; a < spec.d; ++a) {
      const double z = c[a] - mu[a];
      q += z * z;
    }
    g.density[i] = std::exp(-0.5 * q / variance);
  }
  g.normalize();
  return g;
}

GaussianReference gaussian_reference(double lambda, double alpha, double sigma,
                                     const GridSpec& spec) {
  if (!(lambda + alpha > 0.0))
    throw Error(cat("gaussian_reference needs lambda + alpha > 0, got ", lambda + alpha));
  if (!(sigma > 0.0)) throw Error(cat("gaussian_reference needs sigma > 0, got ", sigma));
  GaussianReference ref;
  ref.variance = sigma * sigma / (lambda + alpha);
  ref.grid = gaussian_on_grid(spec, Vec(spec.d, 0.0), ref.variance);
  return ref;
}

namespace {

// normalize(exp(-(V + U*rho)/sigma^2)) on the grid
Vec gibbs_refresh(const GranularMediaModel& model, const MeasureGrid& grid) {
  const Vec conv = convolve_potential(grid, model.U);
  const double inv_s2 = 1.0 / (model.sigma * model.sigma);
  Vec energy(grid.cells());
  Vec c(grid.spec.d);
  double emin = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < grid.cells(); ++i) {
    grid.cell_center(i, c);
    energy[i] = (model.V(c) + conv[i]) * inv_s2;
    emin = std::min(emin, energy[i]);
  }
  Vec out(grid.cells());
  double sum = 0.0;
  for (std::size_t i = 0; i < grid.cells(); ++i) {
    out[i] = std::exp(emin - energy[i]);
    sum += out[i];
  }
  const double scale = 1.0 / (sum * grid.spec.cell_volume());
  for (double& v : out) v *= scale;
  return out;
}

}  // namespace

FixedPointResult fixed_point_solve(const GranularMediaModel& model, const MeasureGrid& init,
                                   double damping, double tol, std::size_t max_iter) {
  if (!(model.sigma > 0.0))
    throw Error("fixed_point_solve needs sigma > 0 (the first-order condition involves grad log rho)");
  if (!(damping > 0.0 && damping <= 1.0))
    throw Error(cat("damping must lie in (0,1], got ", damping));
  if (model.d != init.spec.d)
    throw ShapeError(cat("model dimension ", model.d, " != grid dimension ", init.spec.d));

  FixedPointResult res;
  res.grid = init;
  res.grid.normalize();
  for (std::size_t it = 1; it <= max_iter; ++it) {
    const Vec refreshed = gibbs_refresh(model, res.grid);
    double sup = 0.0;
    for (std::size_t i = 0; i < res.grid.cells(); ++i) {
      const double next = (1.0 - damping) * res.grid.density[i] + damping * refreshed[i];
      sup = std::max(sup, std::fabs(next - res.grid.density[i]));
      res.grid.density[i] = next;
    }
    res.grid.normalize();
    res.update_residual = sup;
    res.iterations = it;
    if (sup <= tol) {
      res.converged = true;
      break;
    }
  }
  const double shell = res.grid.boundary_shell_mass();
  if (shell > 1e-6)
    throw GridError(cat("fixed point leaks mass ", shell,
                        " into the boundary shell; enlarge the grid extent"));
  return res;
}

std::vector<StationaryBranch> enumerate_branches(const GranularMediaModel& model,
                                                 const GridSpec& spec,
                                                 const std::vector<MeasureGrid>& inits,
                                                 double damping, double tol,
                                                 std::size_t max_iter) {
  std::vector<StationaryBranch> branches;
  std::size_t failures = 0;
  for (const auto& init : inits) {
    FixedPointResult res;
    try {
      res = fixed_point_solve(model, init, damping, tol, max_iter);
    } catch (const Error&) {
      ++failures;
      continue;
    }
    const double merge_radius = 5.0 * spec.h;
    bool merged = false;
    const auto sample = res.grid.to_weighted_sample(1e-300);
    for (auto& b : branches) {
      const double w2 = wasserstein(sample, b.grid.to_weighted_sample(1e-300), 2).distance;
      if (w2 <= merge_radius) {
        // keep the better-converged representative
        if (res.update_residual < b.update_residual) {
          b.grid = res.grid;
          b.update_residual = res.update_residual;
          b.iterations = res.iterations;
          b.converged = res.converged;
        }
        merged = true;
        break;
      }
    }
    if (!merged)
      branches.push_back({res.grid, res.update_residual, res.iterations, res.converged});
  }
  if (branches.empty() && !inits.empty())
    throw Error(cat("all ", failures, " stationary solves failed"));
  return branches;
}

}  // namespace mkv
