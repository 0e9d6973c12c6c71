#pragma once

#include "mkv/fields.hpp"
#include "mkv/measure.hpp"

namespace mkv {

/// Lattice geometry for grid-supported densities, d in {1,2}.
struct GridSpec {
  std::size_t d = 0;
  Vec lower;                        // d entries, coordinate of the first cell center
  double h = 0.0;                   // cell width, shared by all axes
  std::vector<std::size_t> extent;  // cells per axis

  static GridSpec line(double lo, double hi, double h);
  static GridSpec square(double lo, double hi, double h);

  std::size_t cells() const;
  double cell_volume() const;
  void validate() const;
};

/// Probability density on a lattice: values are densities at cell centers,
/// cell masses rho * h^d sum to one.
struct MeasureGrid {
  GridSpec spec;
  Vec density;

  MeasureGrid() = default;
  MeasureGrid(GridSpec s, Vec values);

  std::size_t cells() const { return spec.cells(); }
  void cell_center(std::size_t flat, MutSpan out) const;
  double mass() const;
  void normalize();

  Vec mean() const;
  /// Per-axis variance about the mean.
  Vec variance() const;
  /// Mass carried by the outermost shell of cells; > 1e-6 means the extent
  /// is too small for the represented measure.
  double boundary_shell_mass() const;
  void validate(double mass_tol = 1e-10) const;

  /// Weighted sample at cell centers with cell-mass weights; the standard
  /// O(h) conversion for transport against particle clouds.
  WeightedSampleMeasure to_weighted_sample(double mass_floor = 0.0) const;
};

/// (U * rho)(x_c) = sum_y U(x_c - y) rho(y) h^d at every cell center.
/// Library kinds take closed-form / separable routes (exact reassociations
/// of the lattice sum); custom kernels run the direct double sum, guarded
/// by an operation-count cap.
Vec convolve_potential(const MeasureGrid& grid, const InteractionPotential& U);

/// Per-cell gradient convolution sum_y grad U(x_c - y) rho(y) h^d,
/// cells x d row-major.
Vec convolve_gradient(const MeasureGrid& grid, const InteractionPotential& U);

}  // namespace mkv
