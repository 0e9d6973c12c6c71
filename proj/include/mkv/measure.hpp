#pragma once

#include "mkv/common.hpp"

namespace mkv {

/// A finitely supported probability measure on R^d: m points with
/// nonnegative weights summing to one. Uniform weights carry empirical
/// measures of particle clouds; nonuniform weights carry grid densities
/// sampled at cell centers.
struct WeightedSampleMeasure {
  std::size_t d = 0;
  Vec points;   // m x d, row-major
  Vec weights;  // m entries

  WeightedSampleMeasure() = default;
  WeightedSampleMeasure(std::size_t dim, Vec pts, Vec w);

  static WeightedSampleMeasure uniform(std::size_t dim, Vec pts);

  std::size_t size() const { return weights.size(); }
  ConstSpan point(std::size_t i) const { return ConstSpan(points.data() + i * d, d); }
  bool is_uniform(double tol = 1e-12) const;

  void validate() const;  // finite points, weight sum 1 +- 1e-12

  Vec mean() const;
  /// kappa_k = integral of ||x||^k
  double moment(int k) const;
};

}  // namespace mkv
