#pragma once

#include "mkv/grid.hpp"

namespace mkv {

struct GaussianReference {
  double variance = 0.0;  // per axis
  MeasureGrid grid;
};

/// Closed-form critical point for the quadratic pair V = lambda|x|^2/2,
/// U = alpha|x|^2/2: the centered Gaussian with variance sigma^2/(lambda+alpha)
/// per axis, sampled on the grid.
GaussianReference gaussian_reference(double lambda, double alpha, double sigma,
                                     const GridSpec& spec);

struct FixedPointResult {
  MeasureGrid grid;
  double update_residual = 0.0;  // sup-norm density change at the last iterate
  std::size_t iterations = 0;
  bool converged = false;
};

/// Damped self-consistent iteration for the first-order condition
/// rho = normalize(exp(-(V + U*rho)/sigma^2)): each sweep blends the current
/// iterate with the refreshed Gibbs density and renormalizes. Returns the
/// best iterate with a failure flag when max_iter is hit.
FixedPointResult fixed_point_solve(const GranularMediaModel& model, const MeasureGrid& init,
                                   double damping = 0.5, double tol = 1e-10,
                                   std::size_t max_iter = 10000);

/// Gaussian bump of the given mean/variance on the grid, the standard
/// solver seed.
MeasureGrid gaussian_on_grid(const GridSpec& spec, const Vec& mean, double variance);

struct StationaryBranch {
  MeasureGrid grid;
  double update_residual = 0.0;
  std::size_t iterations = 0;
  bool converged = true;
};

/// Solves from every init and deduplicates the fixed points at W_2 merge
/// radius 5h. The resulting finite list is the computed reference set the
/// ergodic statistics measure against.
std::vector<StationaryBranch> enumerate_branches(const GranularMediaModel& model,
                                                 const GridSpec& spec,
                                                 const std::vector<MeasureGrid>& inits,
                                                 double damping = 0.5, double tol = 1e-10,
                                                 std::size_t max_iter = 10000);

}  // namespace mkv
