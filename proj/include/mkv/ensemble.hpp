#pragma once

#include <cstdint>

#include "mkv/measure.hpp"

namespace mkv {

/// n particle positions in R^d at discrete step k, carrying the algorithmic
/// time tau_k of the attached schedule. Single-writer: the stepping loop owns
/// it, everything else reads.
struct ParticleEnsemble {
  std::size_t n = 0;
  std::size_t d = 0;
  Vec positions;  // n x d, row-major
  std::size_t k = 0;
  double tau = 0.0;
  /// Lane id used for particle i's noise draws; identity unless a
  /// permutation test rewires it.
  std::vector<std::uint32_t> lane_ids;

  ParticleEnsemble() = default;
  ParticleEnsemble(std::size_t n_particles, std::size_t dim);

  ConstSpan position(std::size_t i) const { return ConstSpan(positions.data() + i * d, d); }
  MutSpan position(std::size_t i) { return MutSpan(positions.data() + i * d, d); }

  /// Uniform empirical measure on the current positions.
  WeightedSampleMeasure empirical() const;

  /// (1/n) sum ||X_i||^p
  double mean_moment(int p) const;
};

}  // namespace mkv
