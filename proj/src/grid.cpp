#include "mkv/grid.hpp"

#include <algorithm>
#include <cmath>

namespace mkv {

GridSpec GridSpec::line(double lo, double hi, double h) {
  if (!(h > 0.0) || !(hi > lo)) throw GridError(cat("bad grid range [", lo, ",", hi, "] h=", h));
  GridSpec g;
  g.d = 1;
  g.h = h;
  const auto n = static_cast<std::size_t>(std::llround((hi - lo) / h));
  g.extent = {std::max<std::size_t>(n, 2)};
  g.lower = {lo + 0.5 * h};
  return g;
}

GridSpec GridSpec::square(double lo, double hi, double h) {
  GridSpec g = line(lo, hi, h);
  g.d = 2;
  g.extent = {g.extent[0], g.extent[0]};
  g.lower = {g.lower[0], g.lower[0]};
  return g;
}

std::size_t GridSpec::cells() const {
  std::size_t c = 1;
  for (std::size_t e : extent) c *= e;
  return c;
}

double GridSpec::cell_volume() const {
  double v = 1.0;
  for (std::size_t a = 0; a < d; ++a) v *= h;
  return v;
}

void GridSpec::validate() const {
  if (d == 0 || d > 2) throw GridError(cat("grid dimension must be 1 or 2, got ", d));
  if (lower.size() != d || extent.size() != d) throw GridError("grid spec field sizes disagree");
  if (!(h > 0.0)) throw GridError(cat("cell width must be positive, got ", h));
  for (std::size_t e : extent)
    if (e < 2) throw GridError("grid needs at least 2 cells per axis");
}

MeasureGrid::MeasureGrid(GridSpec s, Vec values) : spec(std::move(s)), density(std::move(values)) {
  spec.validate();
  if (density.size() != spec.cells())
    throw GridError(cat("density size ", density.size(), " != cell count ", spec.cells()));
}

void MeasureGrid::cell_center(std::size_t flat, MutSpan out) const {
  if (spec.d == 1) {
    out[0] = spec.lower[0] + static_cast<double>(flat) * spec.h;
  } else {
    const std::size_t i0 = flat / spec.extent[1];
    const std::size_t i1 = flat % spec.extent[1];
    out[0] = spec.lower[0] + static_cast<double>(i0) * spec.h;
    out[1] = spec.lower[1] + static_cast<double>(i1) * spec.h;
  }
}

double MeasureGrid::mass() const {
  double s = 0.0;
  for (double v : density) s += v;
  return s * spec.cell_volume();
}

void MeasureGrid::normalize() {
  const double m = mass();
  if (!(m > 0.0)) throw GridError("cannot normalize a grid with nonpositive mass");
  for (double& v : density) v /= m;
}

Vec MeasureGrid::mean() const {
  Vec m(spec.d, 0.0), c(spec.d);
  const double vol = spec.cell_volume();
  for (std::size_t i = 0; i < cells(); ++i) {
    cell_center(i, c);
    for (std::size_t a = 0; a < spec.d; ++a) m[a] += density[i] * vol * c[a];
  }
  return m;
}

Vec MeasureGrid::variance() const {
  const Vec m = mean();
  Vec v(spec.d, 0.0), c(spec.d);
  const double vol = spec.cell_volume();
  for (std::size_t i = 0; i < cells(); ++i) {
    cell_center(i, c);
    for (std::size_t a = 0; a < spec.d; ++a) {
      const double z = c[a] - m[a];
      v[a] += density[i] * vol * z * z;
    }
  }
  return v;
}

double MeasureGrid::boundary_shell_mass() const {
  const double vol = spec.cell_volume();
  double s = 0.0;
  if (spec.d == 1) {
    s = density.front() + density.back();
  } else {
    const std::size_t n0 = spec.extent[0], n1 = spec.extent[1];
    for (std::size_t i0 = 0; i0 < n0; ++i0)
      for (std::size_t i1 = 0; i1 < n1; ++i1)
        if (i0 == 0 || i1 == 0 || i0 + 1 == n0 || i1 + 1 == n1) s += density[i0 * n1 + i1];
  }
  return s * vol;
}

void MeasureGrid::validate(double mass_tol) const {
  spec.validate();
  for (double v : density)
    if (!(v >= 0.0) || !std::isfinite(v)) throw GridError(cat("invalid density value ", v));
  const double m = mass();
  if (std::fabs(m - 1.0) > mass_tol)
    throw GridError(cat("grid mass ", m, " deviates from 1 by more than ", mass_tol));
  const double shell = boundary_shell_mass();
  if (shell > 1e-6)
    throw GridError(cat("boundary shell carries mass ", shell, "; extent too small"));
}

WeightedSampleMeasure MeasureGrid::to_weighted_sample(double mass_floor) const {
  const double vol = spec.cell_volume();
  Vec pts, w;
  Vec c(spec.d);
  for (std::size_t i = 0; i < cells(); ++i) {
    const double m = density[i] * vol;
    if (m <= mass_floor) continue;
    cell_center(i, c);
    pts.insert(pts.end(), c.begin(), c.end());
    w.push_back(m);
  }
  if (w.empty()) throw GridError("grid has no mass above the floor");
  double sum = 0.0;
  for (double v : w) sum += v;
  for (double& v : w) v /= sum;
  return WeightedSampleMeasure(spec.d, std::move(pts), std::move(w));
}

namespace {

constexpr std::size_t kDirectOpCap = 400'000'000;  // pairwise ops for custom kernels

// direct lattice double sum through a precomputed offset kernel
template <class Kernel>
Vec direct_convolution(const MeasureGrid& grid, std::size_t out_dim, Kernel kernel_at_offset) {
  const auto& sp = grid.spec;
  const std::size_t n = grid.cells();
  if (n * n > kDirectOpCap)
    throw GridError(cat("direct convolution on ", n, " cells exceeds the op budget; "
                        "use a coarser grid or a library interaction kind"));
  const double vol = sp.cell_volume();
  Vec out(n * out_dim, 0.0);
  if (sp.d == 1) {
    const std::ptrdiff_t nn = static_cast<std::ptrdiff_t>(n);
    // kernel table over offsets -(n-1)..(n-1)
    Vec table(static_cast<std::size_t>(2 * nn - 1) * out_dim);
    Vec z(1), k(out_dim);
    for (std::ptrdiff_t off = -(nn - 1); off <= nn - 1; ++off) {
      z[0] = static_cast<double>(off) * sp.h;
      kernel_at_offset(z, MutSpan(k));
      for (std::size_t a = 0; a < out_dim; ++a)
        table[static_cast<std::size_t>(off + nn - 1) * out_dim + a] = k[a];
    }
    for (std::ptrdiff_t i = 0; i < nn; ++i)
      for (std::ptrdiff_t j = 0; j < nn; ++j) {
        const double w = grid.density[static_cast<std::size_t>(j)] * vol;
        const std::size_t t = static_cast<std::size_t>(i - j + nn - 1) * out_dim;
        for (std::size_t a = 0; a < out_dim; ++a)
          out[static_cast<std::size_t>(i) * out_dim + a] += table[t + a] * w;
      }
  } else {
    const std::ptrdiff_t n0 = static_cast<std::ptrdiff_t>(sp.extent[0]);
    const std::ptrdiff_t n1 = static_cast<std::ptrdiff_t>(sp.extent[1]);
    Vec z(2), k(out_dim);
    for (std::ptrdiff_t i0 = 0; i0 < n0; ++i0)
      for (std::ptrdiff_t i1 = 0; i1 < n1; ++i1) {
        const std::size_t row = static_cast<std::size_t>(i0 * n1 + i1) * out_dim;
        for (std::ptrdiff_t j0 = 0; j0 < n0; ++j0)
          for (std::ptrdiff_t j1 = 0; j1 < n1; ++j1) {
            const double w = grid.density[static_cast<std::size_t>(j0 * n1 + j1)] * vol;
            if (w == 0.0) continue;
            z[0] = static_cast<double>(i0 - j0) * sp.h;
            z[1] = static_cast<double>(i1 - j1) * sp.h;
            kernel_at_offset(z, MutSpan(k));
            for (std::size_t a = 0; a < out_dim; ++a) out[row + a] += k[a] * w;
          }
      }
  }
  return out;
}

// separable two-pass convolution for axis-factorized kernels:
// result(c) = sum_y f0(c0-y0) f1(c1-y1) rho(y) h^d
Vec separable_convolution(const MeasureGrid& grid, const std::function<double(double)>& f0,
                          const std::function<double(double)>& f1) {
  const auto& sp = grid.spec;
  const double vol = sp.cell_volume();
  if (sp.d == 1) {
    const std::size_t n = sp.extent[0];
    Vec out(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        out[i] += f0((static_cast<double>(i) - static_cast<double>(j)) * sp.h) * grid.density[j] *
                  vol;
    return out;
  }
  const std::size_t n0 = sp.extent[0], n1 = sp.extent[1];
  Vec mid(n0 * n1, 0.0);  // rho convolved along axis 1
  for (std::size_t y0 = 0; y0 < n0; ++y0)
    for (std::size_t c1 = 0; c1 < n1; ++c1) {
      double s = 0.0;
      for (std::size_t y1 = 0; y1 < n1; ++y1)
        s += f1((static_cast<double>(c1) - static_cast<double>(y1)) * sp.h) *
             grid.density[y0 * n1 + y1];
      mid[y0 * n1 + c1] = s;
    }
  Vec out(n0 * n1, 0.0);
  for (std::size_t c0 = 0; c0 < n0; ++c0)
    for (std::size_t c1 = 0; c1 < n1; ++c1) {
      double s = 0.0;
      for (std::size_t y0 = 0; y0 < n0; ++y0)
        s += f0((static_cast<double>(c0) - static_cast<double>(y0)) * sp.h) * mid[y0 * n1 + c1];
      out[c0 * n1 + c1] = s * vol;
    }
  return out;
}

}  // namespace

Vec convolve_potential(const MeasureGrid& grid, const InteractionPotential& U) {
  const auto& sp = grid.spec;
  switch (U.kind()) {
    case InteractionKind::none:
      return Vec(grid.cells(), 0.0);
    case InteractionKind::quadratic: {
      // alpha/2 (|x|^2 - 2<x,m1> + m2): closed form of the lattice sum
      const Vec m1 = grid.mean();
      double m2 = 0.0;
      {
        Vec c(sp.d);
        const double vol = sp.cell_volume();
        for (std::size_t i = 0; i < grid.cells(); ++i) {
          grid.cell_center(i, c);
          m2 += grid.density[i] * vol * norm_sq(c);
        }
      }
      Vec out(grid.cells());
      Vec c(sp.d);
      for (std::size_t i = 0; i < grid.cells(); ++i) {
        grid.cell_center(i, c);
        out[i] = 0.5 * U.alpha() * (norm_sq(c) - 2.0 * dot(c, m1) + m2);
      }
      return out;
    }
    case InteractionKind::gaussian_kernel: {
      const double w2 = U.width() * U.width();
      auto k = [w2](double z) { return std::exp(-0.5 * z * z / w2); };
      Vec out = separable_convolution(grid, k, k);
      for (double& v : out) v = -v;
      return out;
    }
    case InteractionKind::custom: {
      return direct_convolution(grid, 1, [&U](ConstSpan z, MutSpan out) { out[0] = U(z); });
    }
  }
  throw Error("unreachable");
}

Vec convolve_gradient(const MeasureGrid& grid, const InteractionPotential& U) {
  const auto& sp = grid.spec;
  const std::size_t d = sp.d;
  switch (U.kind()) {
    case InteractionKind::none:
      return Vec(grid.cells() * d, 0.0);
    case InteractionKind::quadratic: {
      const Vec m1 = grid.mean();
      Vec out(grid.cells() * d);
      Vec c(d);
      for (std::size_t i = 0; i < grid.cells(); ++i) {
        grid.cell_center(i, c);
        for (std::size_t a = 0; a < d; ++a) out[i * d + a] = U.alpha() * (c[a] - m1[a]);
      }
      return out;
    }
    case InteractionKind::gaussian_kernel: {
      const double w2 = U.width() * U.width();
      auto k = [w2](double z) { return std::exp(-0.5 * z * z / w2); };
      auto kg = [w2](double z) { return z / w2 * std::exp(-0.5 * z * z / w2); };
      Vec out(grid.cells() * d);
      if (d == 1) {
        const Vec g0 = separable_convolution(grid, kg, k);
        for (std::size_t i = 0; i < grid.cells(); ++i) out[i] = g0[i];
      } else {
        const Vec g0 = separable_convolution(grid, kg, k);
        const Vec g1 = separable_convolution(grid, k, kg);
        for (std::size_t i = 0; i < grid.cells(); ++i) {
          out[i * 2 + 0] = g0[i];
          out[i * 2 + 1] = g1[i];
        }
      }
      return out;
    }
    case InteractionKind::custom: {
      return direct_convolution(grid, d,
                                [&U](ConstSpan z, MutSpan out) { U.gradient(z, out); });
    }
  }
  throw Error("unreachable");
}

}  // namespace mkv
