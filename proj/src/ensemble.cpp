#include "mkv/ensemble.hpp"

#include <cmath>
#include <numeric>

namespace mkv {

ParticleEnsemble::ParticleEnsemble(std::size_t n_particles, std::size_t dim)
    : n(n_particles), d(dim), positions(n_particles * dim, 0.0), lane_ids(n_particles) {
  if (n == 0 || d == 0) throw ShapeError(cat("ensemble needs n,d >= 1, got n=", n, " d=", d));
  std::iota(lane_ids.begin(), lane_ids.end(), 0u);
}

WeightedSampleMeasure ParticleEnsemble::empirical() const {
  return WeightedSampleMeasure::uniform(d, positions);
}

double ParticleEnsemble::mean_moment(int p) const {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double q = norm_sq(position(i));
    s += p == 2 ? q : p == 4 ? q * q : std::pow(std::sqrt(q), static_cast<double>(p));
  }
  return s / static_cast<double>(n);
}

}  // namespace mkv
