#pragma once

#include "mkv/measure.hpp"

namespace mkv {

enum class TransportMethod { quantile_1d, assignment, entropic };

struct TransportOptions {
  /// Largest equal-size uniform instance routed to the exact assignment
  /// solver; larger or weighted instances fall back to entropic
  /// regularization.
  std::size_t exact_cap = 1024;
  double sinkhorn_eps_start = 1.0;
  double sinkhorn_eps_factor = 0.7;
  double sinkhorn_eps_floor_scale = 0.005;  // times the median pairwise cost
  std::size_t sinkhorn_max_iter = 2000;
  double sinkhorn_tol = 1e-9;
};

struct WassersteinResult {
  double distance = 0.0;
  TransportMethod method = TransportMethod::assignment;
  bool approximate = false;
  double epsilon = 0.0;  // final regularization, entropic only
  operator double() const { return distance; }
};

/// W_p(mu, nu), p in {1,2}. Exact via the quantile coupling in d=1 and via
/// the assignment solver for equal-size uniform inputs up to exact_cap;
/// entropic approximation otherwise (flagged, with its final epsilon).
WassersteinResult wasserstein(const WeightedSampleMeasure& mu, const WeightedSampleMeasure& nu,
                              int p, const TransportOptions& opts = {});

/// Exact minimum over all m! pairings; equal-size uniform inputs, m <= 8.
/// Test oracle for the assignment route.
double wasserstein_bruteforce(const WeightedSampleMeasure& mu, const WeightedSampleMeasure& nu,
                              int p);

/// Min-cost assignment of a dense m x m cost matrix (row-major), returning
/// the column matched to each row. Shortest-augmenting-path (Jonker-
/// Volgenant) scheme, O(m^3).
std::vector<std::size_t> solve_assignment(const std::vector<double>& cost, std::size_t m,
                                          double* total = nullptr);

/// n sampled paths on a shared uniform grid over [0, window].
struct PathSampleSet {
  std::size_t n_paths = 0;
  std::size_t d = 0;
  std::size_t n_times = 0;
  double grid_step = 0.0;
  Vec values;  // n_paths x n_times x d

  double window() const { return grid_step * static_cast<double>(n_times - 1); }
  ConstSpan at(std::size_t path, std::size_t t_idx) const {
    return ConstSpan(values.data() + (path * n_times + t_idx) * d, d);
  }
  /// Empirical marginal at grid index t_idx.
  WeightedSampleMeasure marginal(std::size_t t_idx) const;
};

struct PathDistanceResult {
  double distance = 0.0;         // sum of 2^-l (1 ^ W_p over [0,l])
  double truncation_error = 0.0; // 2^-horizon_terms
};

/// Truncated path-space metric: sum_{l=1..L} 2^-l (1 ^ W_p of the
/// restrictions to [0,l]), with the restriction metric the max over grid
/// points of the Euclidean distance (discretized uniform norm).
PathDistanceResult path_wasserstein(const PathSampleSet& P, const PathSampleSet& Q, int p,
                                    std::size_t horizon_terms,
                                    const TransportOptions& opts = {});

struct SetDistanceResult {
  double distance = 0.0;
  std::size_t argmin = 0;  // npos when refs is empty
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
};

/// min over refs of W_p(mu, ref); empty refs returns +infinity (inf over
/// the empty set).
SetDistanceResult distance_to_set(const WeightedSampleMeasure& mu,
                                  const std::vector<WeightedSampleMeasure>& refs, int p,
                                  const TransportOptions& opts = {});

}  // namespace mkv
