#include "mkv/measure.hpp"

#include <cmath>

namespace mkv {

WeightedSampleMeasure::WeightedSampleMeasure(std::size_t dim, Vec pts, Vec w)
    : d(dim), points(std::move(pts)), weights(std::move(w)) {
  if (d == 0) throw ShapeError("measure dimension must be >= 1");
  if (points.size() != weights.size() * d)
    throw ShapeError(cat("points/weights size mismatch: ", points.size(), " coordinates vs ",
                         weights.size(), " weights in dimension ", d));
}

WeightedSampleMeasure WeightedSampleMeasure::uniform(std::size_t dim, Vec pts) {
  if (dim == 0 || pts.size() % dim != 0)
    throw ShapeError(cat("point buffer of size ", pts.size(), " is not a multiple of d=", dim));
  const std::size_t m = pts.size() / dim;
  if (m == 0) throw ShapeError("empty measure");
  return WeightedSampleMeasure(dim, std::move(pts), Vec(m, 1.0 / static_cast<double>(m)));
}

bool WeightedSampleMeasure::is_uniform(double tol) const {
  const double w0 = 1.0 / static_cast<double>(size());
  for (double w : weights)
    if (std::fabs(w - w0) > tol) return false;
  return true;
}

void WeightedSampleMeasure::validate() const {
  if (size() == 0) throw ShapeError("empty measure");
  if (!all_finite(points)) throw NumericError("measure contains non-finite coordinates");
  double sum = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw NumericError(cat("negative weight ", w));
    sum += w;
  }
  if (std::fabs(sum - 1.0) > 1e-12)
    throw NumericError(cat("weights sum to ", sum, ", expected 1 within 1e-12"));
}

Vec WeightedSampleMeasure::mean() const {
  Vec m(d, 0.0);
  for (std::size_t i = 0; i < size(); ++i) {
    const auto p = point(i);
    for (std::size_t a = 0; a < d; ++a) m[a] += weights[i] * p[a];
  }
  return m;
}

double WeightedSampleMeasure::moment(int k) const {
  double s = 0.0;
  for (std::size_t i = 0; i < size(); ++i)
    s += weights[i] * std::pow(norm(point(i)), static_cast<double>(k));
  return s;
}

}  // namespace mkv
