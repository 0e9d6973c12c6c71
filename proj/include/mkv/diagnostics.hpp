#pragma once

#include "mkv/dynamics.hpp"
#include "mkv/grid.hpp"

namespace mkv {

/// Martingale test functional on path space:
///   G(rho) = int [phi(x_t) - phi(x_s) - int_s^t L(rho_u)(phi)(x_u) du]
///            prod_j h_j(x_{v_j}) drho(x),
/// with 0 <= v_1 <= ... <= v_r <= s <= t, phi compactly supported C^2 and
/// every h_j bounded with compact support. Vanishing over the whole family
/// characterizes the target distributions.
struct GFunctional {
  TestFunctionBundle phi;
  std::vector<std::function<double(ConstSpan)>> h;
  std::vector<double> v_times;  // r entries, window-relative
  double s = 0.0;
  double t = 1.0;

  void validate() const;
  /// r = 0 default family member: a radial bump at the origin.
  static GFunctional default_bump(std::size_t d, double radius, double s, double t);
};

/// Monte-Carlo evaluation of G against the uniform measure on the sampled
/// paths; rho_u is the empirical marginal of the same path set and the time
/// integral is trapezoidal on the path grid.
double evaluate_G(const GFunctional& G, const PathSampleSet& paths, const MeanFieldModel& model);

/// Lattice density plus the bandwidth that produced it.
struct DensityEstimate {
  MeasureGrid grid;
  Vec bandwidth;  // per axis; zero when the density is exact
};

/// Gaussian-kernel density on the grid, bandwidth by Silverman's rule
/// (1.06 std m^-1/5 per axis) floored at two cells, renormalized to unit
/// cell mass. Restricted to d <= 2.
DensityEstimate estimate_density(const WeightedSampleMeasure& mu, const GridSpec& spec);

struct HelmholtzTerms {
  double entropy = 0.0;      // sigma^2 int rho log rho
  double confinement = 0.0;  // int V drho
  double interaction = 0.0;  // 1/2 iint U(x-y) drho drho
  double total = 0.0;
  bool entropy_valid = true;  // false when sigma = 0
};

/// Free-energy decomposition on the lattice; cells with mass below 1e-12
/// are skipped in the entropy term (0 log 0 = 0).
HelmholtzTerms helmholtz(const MeasureGrid& density, const GranularMediaModel& model);
HelmholtzTerms helmholtz(const DensityEstimate& density, const GranularMediaModel& model);

/// L2(mu) norm of v(x) = -grad V - grad U * rho - sigma^2 grad log rho, the
/// dissipation density whose vanishing identifies critical points. grad log
/// rho by central differences on cells above the mass floor.
double stationarity_residual(const MeasureGrid& density, const GranularMediaModel& model,
                             double mass_floor = 1e-12);

struct ErgodicPoint {
  std::size_t k = 0;
  double tau = 0.0;
  double distance = 0.0;  // W_p(mu_k, refs) at this recorded state
  double average = 0.0;   // gamma-weighted running average up to k
};

/// The ergodic statistic sum_l gamma_l W_p(mu_l, refs) / sum_l gamma_l,
/// evaluated at recorded states; unrecorded steps contribute their gamma
/// with the last recorded distance held.
std::vector<ErgodicPoint> ergodic_distance_curve(const RunRecord& run,
                                                 const std::vector<WeightedSampleMeasure>& refs,
                                                 int p, const TransportOptions& opts = {});

/// sum_{i,l} gamma_l f(X_l^i) / (n sum_l gamma_l) over recorded states with
/// the same gamma-holding estimator.
double lipschitz_functional_average(const RunRecord& run,
                                    const std::function<double(ConstSpan)>& f);

/// One sample of (X_k^1, ..., X_k^j) per replica against a same-size sample
/// from the reference product law: the finite-replica estimate of the
/// j-th marginal law distance.
double replica_law_distance(const std::vector<RunRecord>& runs, std::size_t j, std::size_t k,
                            const WeightedSampleMeasure& reference, int p,
                            const TransportOptions& opts = {});

/// Positions of the j leading particles at step k across replicas, folded
/// into R^{j d} sample points (one per replica).
WeightedSampleMeasure replica_marginal_sample(const std::vector<RunRecord>& runs, std::size_t j,
                                              std::size_t k);

}  // namespace mkv
