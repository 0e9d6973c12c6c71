#include "mkv/diagnostics.hpp"

#include <algorithm>
#include <cmath>

namespace mkv {

void GFunctional::validate() const {
  if (h.size() != v_times.size())
    throw ShapeError(cat("G functional has ", h.size(), " h functions but ", v_times.size(),
                         " evaluation times"));
  double prev = 0.0;
  for (double v : v_times) {
    if (v < prev) throw Error("G functional v_times must be nondecreasing");
    prev = v;
  }
  if (!v_times.empty() && v_times.back() > s) throw Error("G functional needs v_r <= s");
  if (!(s <= t)) throw Error(cat("G functional needs s <= t, got s=", s, " t=", t));
}

GFunctional GFunctional::default_bump(std::size_t d, double radius, double s, double t) {
  GFunctional g;
  g.phi = TestFunctionBundle::radial_bump(Vec(d, 0.0), radius);
  g.s = s;
  g.t = t;
  return g;
}

double evaluate_G(const GFunctional& G, const PathSampleSet& paths, const MeanFieldModel& model) {
  G.validate();
  if (paths.d != model.d) throw ShapeError("path dimension != model dimension");
  const double gs = paths.grid_step;
  auto node_of = [&](double u) {
    const auto idx = static_cast<std::size_t>(std::llround(u / gs));
    return idx;
  };
  const std::size_t idx_s = node_of(G.s);
  const std::size_t idx_t = node_of(G.t);
  if (idx_t >= paths.n_times)
    throw TimeRangeError(cat("G window endpoint t=", G.t, " beyond the sampled window ",
                             paths.window()));
  if (idx_t - idx_s + 1 < 8)
    throw ResolutionError(cat("only ", idx_t - idx_s + 1,
                              " grid points in [s,t]; need >= 8 for the time quadrature"));

  // empirical marginals of the same path set over the quadrature nodes
  std::vector<WeightedSampleMeasure> marginals;
  marginals.reserve(idx_t - idx_s + 1);
  for (std::size_t q = idx_s; q <= idx_t; ++q) marginals.push_back(paths.marginal(q));

  std::vector<std::size_t> v_nodes;
  v_nodes.reserve(G.v_times.size());
  for (double v : G.v_times) {
    const std::size_t idx = node_of(v);
    if (idx >= paths.n_times) throw TimeRangeError(cat("h evaluation time ", v, " beyond window"));
    v_nodes.push_back(idx);
  }

  double acc = 0.0;
  for (std::size_t i = 0; i < paths.n_paths; ++i) {
    double q_factor = 1.0;
    for (std::size_t j = 0; j < G.h.size(); ++j) q_factor *= G.h[j](paths.at(i, v_nodes[j]));
    if (q_factor == 0.0) continue;
    // trapezoidal int_s^t L(rho_u)(phi)(x_u) du on the path grid
    double integral = 0.0;
    for (std::size_t q = idx_s; q <= idx_t; ++q) {
      const double Lval = generator_apply(G.phi, paths.at(i, q), marginals[q - idx_s], model);
      const double w = (q == idx_s || q == idx_t) ? 0.5 : 1.0;
      integral += w * Lval;
    }
    integral *= gs;
    const double bracket = G.phi.phi(paths.at(i, idx_t)) - G.phi.phi(paths.at(i, idx_s)) - integral;
    acc += bracket * q_factor;
  }
  return acc / static_cast<double>(paths.n_paths);
}

DensityEstimate estimate_density(const WeightedSampleMeasure& mu, const GridSpec& spec) {
  spec.validate();
  if (mu.d > 2) throw GridError(cat("density estimation restricted to d <= 2, got d=", mu.d));
  if (mu.d != spec.d) throw ShapeError("sample dimension != grid dimension");
  mu.validate();
  const std::size_t d = spec.d;
  const std::size_t m = mu.size();

  // Silverman per axis with a two-cell floor
  Vec bw(d);
  const Vec mean = mu.mean();
  for (std::size_t a = 0; a < d; ++a) {
    double var = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const double z = mu.point(i)[a] - mean[a];
      var += mu.weights[i] * z * z;
    }
    const double silverman =
        1.06 * std::sqrt(var) * std::pow(static_cast<double>(m), -0.2);
    bw[a] = std::max(silverman, 2.0 * spec.h);
  }

  MeasureGrid grid(spec, Vec(spec.cells(), 0.0));
  const double cut = 6.0;  // kernel truncation in bandwidths
  if (d == 1) {
    const std::size_t n0 = spec.extent[0];
    for (std::size_t i = 0; i < m; ++i) {
      const double x = mu.point(i)[0];
      const double inv = 1.0 / bw[0];
      const auto lo = static_cast<std::ptrdiff_t>(
          std::floor((x - cut * bw[0] - spec.lower[0]) / spec.h));
      const auto hi = static_cast<std::ptrdiff_t>(
          std::ceil((x + cut * bw[0] - spec.lower[0]) / spec.h));
      for (std::ptrdiff_t c = std::max<std::ptrdiff_t>(lo, 0);
           c <= std::min<std::ptrdiff_t>(hi, static_cast<std::ptrdiff_t>(n0) - 1); ++c) {
        const double z = (spec.lower[0] + static_cast<double>(c) * spec.h - x) * inv;
        grid.density[static_cast<std::size_t>(c)] +=
            mu.weights[i] * std::exp(-0.5 * z * z) * inv;
      }
    }
  } else {
    const std::size_t n0 = spec.extent[0], n1 = spec.extent[1];
    for (std::size_t i = 0; i < m; ++i) {
      const auto p = mu.point(i);
      std::ptrdiff_t lo0 = static_cast<std::ptrdiff_t>(
          std::floor((p[0] - cut * bw[0] - spec.lower[0]) / spec.h));
      std::ptrdiff_t hi0 = static_cast<std::ptrdiff_t>(
          std::ceil((p[0] + cut * bw[0] - spec.lower[0]) / spec.h));
      std::ptrdiff_t lo1 = static_cast<std::ptrdiff_t>(
          std::floor((p[1] - cut * bw[1] - spec.lower[1]) / spec.h));
      std::ptrdiff_t hi1 = static_cast<std::ptrdiff_t>(
          std::ceil((p[1] + cut * bw[1] - spec.lower[1]) / spec.h));
      lo0 = std::max<std::ptrdiff_t>(lo0, 0);
      lo1 = std::max<std::ptrdiff_t>(lo1, 0);
      hi0 = std::min<std::ptrdiff_t>(hi0, static_cast<std::ptrdiff_t>(n0) - 1);
      hi1 = std::min<std::ptrdiff_t>(hi1, static_cast<std::ptrdiff_t>(n1) - 1);
      for (std::ptrdiff_t c0 = lo0; c0 <= hi0; ++c0) {
        const double z0 = (spec.lower[0] + static_cast<double>(c0) * spec.h - p[0]) / bw[0];
        const double k0 = std::exp(-0.5 * z0 * z0) / bw[0];
        for (std::ptrdiff_t c1 = lo1; c1 <= hi1; ++c1) {
          const double z1 = (spec.lower[1] + static_cast<double>(c1) * spec.h - p[1]) / bw[1];
          grid.density[static_cast<std::size_t>(c0) * n1 + static_cast<std::size_t>(c1)] +=
              mu.weights[i] * k0 * std::exp(-0.5 * z1 * z1) / bw[1];
        }
      }
    }
  }
  grid.normalize();
  return {std::move(grid), std::move(bw)};
}

HelmholtzTerms helmholtz(const MeasureGrid& density, const GranularMediaModel& model) {
  const double mass = density.mass();
  if (std::fabs(mass - 1.0) > 1e-8)
    throw GridError(cat("helmholtz needs a normalized density, cell mass is ", mass));
  if (model.d != density.spec.d) throw ShapeError("model dimension != grid dimension");

  HelmholtzTerms terms;
  const double vol = density.spec.cell_volume();
  const double s2 = model.sigma * model.sigma;
  terms.entropy_valid = model.sigma > 0.0;

  Vec c(density.spec.d);
  for (std::size_t i = 0; i < density.cells(); ++i) {
    const double rho = density.density[i];
    const double cell_mass = rho * vol;
    density.cell_center(i, c);
    terms.confinement += model.V(c) * cell_mass;
    if (terms.entropy_valid && cell_mass > 1e-12) terms.entropy += s2 * std::log(rho) * cell_mass;
  }
  const Vec conv = convolve_potential(density, model.U);
  for (std::size_t i = 0; i < density.cells(); ++i)
    terms.interaction += 0.5 * conv[i] * density.density[i] * vol;
  terms.total = terms.entropy + terms.confinement + terms.interaction;
  return terms;
}

HelmholtzTerms helmholtz(const DensityEstimate& density, const GranularMediaModel& model) {
  return helmholtz(density.grid, model);
}

double stationarity_residual(const MeasureGrid& density, const GranularMediaModel& model,
                             double mass_floor) {
  if (model.d != density.spec.d) throw ShapeError("model dimension != grid dimension");
  const auto& sp = density.spec;
  const double vol = sp.cell_volume();
  const double s2 = model.sigma * model.sigma;
  const Vec conv = convolve_gradient(density, model.U);

  auto active = [&](std::size_t flat) { return density.density[flat] * vol > mass_floor; };

  // grad log rho along one axis by central differences, one-sided at the
  // effective-support edge
  auto dlog = [&](std::size_t flat, std::size_t axis) {
    const std::ptrdiff_t stride =
        sp.d == 1 ? 1 : (axis == 0 ? static_cast<std::ptrdiff_t>(sp.extent[1]) : 1);
    const std::ptrdiff_t pos = static_cast<std::ptrdiff_t>(flat);
    std::size_t idx_axis;
    std::size_t n_axis;
    if (sp.d == 1) {
      idx_axis = flat;
      n_axis = sp.extent[0];
    } else {
      idx_axis = axis == 0 ? flat / sp.extent[1] : flat % sp.extent[1];
      n_axis = sp.extent[axis];
    }
    const bool has_prev = idx_axis > 0 && active(static_cast<std::size_t>(pos - stride));
    const bool has_next = idx_axis + 1 < n_axis && active(static_cast<std::size_t>(pos + stride));
    const double rho = density.density[flat];
    if (has_prev && has_next) {
      const double a = density.density[static_cast<std::size_t>(pos - stride)];
      const double b = density.density[static_cast<std::size_t>(pos + stride)];
      return (std::log(b) - std::log(a)) / (2.0 * sp.h);
    }
    if (has_next) {
      const double b = density.density[static_cast<std::size_t>(pos + stride)];
      return (std::log(b) - std::log(rho)) / sp.h;
    }
    if (has_prev) {
      const double a = density.density[static_cast<std::size_t>(pos - stride)];
      return (std::log(rho) - std::log(a)) / sp.h;
    }
    throw GridError(cat("isolated active cell ", flat,
                        ": zero neighbors inside the effective support"));
  };

  double acc = 0.0;
  Vec c(sp.d), gv(sp.d);
  for (std::size_t i = 0; i < density.cells(); ++i) {
    if (!active(i)) continue;
    density.cell_center(i, c);
    model.V.gradient(c, gv);
    double v2 = 0.0;
    for (std::size_t a = 0; a < sp.d; ++a) {
      const double v = -gv[a] - conv[i * sp.d + a] - s2 * dlog(i, a);
      v2 += v * v;
    }
    acc += v2 * density.density[i] * vol;
  }
  return std::sqrt(acc);
}

namespace {

WeightedSampleMeasure recorded_measure(const TrajectoryStore& store, std::size_t t_idx) {
  Vec pts(store.positions.begin() + static_cast<std::ptrdiff_t>(t_idx * store.n * store.d),
          store.positions.begin() + static_cast<std::ptrdiff_t>((t_idx + 1) * store.n * store.d));
  return WeightedSampleMeasure::uniform(store.d, std::move(pts));
}

}  // namespace

std::vector<ErgodicPoint> ergodic_distance_curve(const RunRecord& run,
                                                 const std::vector<WeightedSampleMeasure>& refs,
                                                 int p, const TransportOptions& opts) {
  const auto& store = run.store;
  if (store.times.empty()) throw Error("run has no recorded states");
  std::vector<ErgodicPoint> curve;
  curve.reserve(store.times.size());
  double weighted_sum = 0.0;
  double prev_tau = 0.0;
  double prev_dist = 0.0;
  for (std::size_t j = 0; j < store.times.size(); ++j) {
    const auto mu = recorded_measure(store, j);
    const double dist = distance_to_set(mu, refs, p, opts).distance;
    const std::size_t k = store.steps[j];
    const double tau = store.times[j];
    if (j > 0) {
      // steps since the previous record hold its distance, except the
      // recorded step itself
      const double tau_before = run.grid->tau(k - 1);
      weighted_sum += (tau_before - prev_tau) * prev_dist;
      weighted_sum += (tau - tau_before) * dist;
    }
    ErgodicPoint pt;
    pt.k = k;
    pt.tau = tau;
    pt.distance = dist;
    pt.average = tau > 0.0 ? weighted_sum / tau : dist;
    curve.push_back(pt);
    prev_tau = tau;
    prev_dist = dist;
  }
  return curve;
}

double lipschitz_functional_average(const RunRecord& run,
                                    const std::function<double(ConstSpan)>& f) {
  const auto& store = run.store;
  if (store.times.empty()) throw Error("run has no recorded states");
  auto mean_f = [&](std::size_t t_idx) {
    double s = 0.0;
    for (std::size_t i = 0; i < store.n; ++i) {
      const double v = f(store.at(t_idx, i));
      if (!std::isfinite(v)) throw NumericError("f is non-finite on a visited state");
      s += v;
    }
    return s / static_cast<double>(store.n);
  };
  double weighted_sum = 0.0;
  double prev_tau = 0.0;
  double prev_val = mean_f(0);
  if (store.times.size() == 1) return prev_val;
  for (std::size_t j = 1; j < store.times.size(); ++j) {
    const std::size_t k = store.steps[j];
    const double tau = store.times[j];
    const double val = mean_f(j);
    const double tau_before = run.grid->tau(k - 1);
    weighted_sum += (tau_before - prev_tau) * prev_val;
    weighted_sum += (tau - tau_before) * val;
    prev_tau = tau;
    prev_val = val;
  }
  return weighted_sum / store.times.back();
}

WeightedSampleMeasure replica_marginal_sample(const std::vector<RunRecord>& runs, std::size_t j,
                                              std::size_t k) {
  if (runs.empty()) throw Error("no replica runs");
  const std::size_t d = runs.front().store.d;
  Vec pts;
  pts.reserve(runs.size() * j * d);
  for (const auto& run : runs) {
    const auto& steps = run.store.steps;
    const auto it = std::lower_bound(steps.begin(), steps.end(), k);
    if (it == steps.end() || *it != k)
      throw Error(cat("step ", k, " not recorded (stride ", run.store.stride, ")"));
    const auto t_idx = static_cast<std::size_t>(it - steps.begin());
    if (j > run.store.n) throw ShapeError(cat("marginal order ", j, " exceeds n=", run.store.n));
    for (std::size_t i = 0; i < j; ++i) {
      const auto x = run.store.at(t_idx, i);
      pts.insert(pts.end(), x.begin(), x.end());
    }
  }
  return WeightedSampleMeasure::uniform(j * d, std::move(pts));
}

double replica_law_distance(const std::vector<RunRecord>& runs, std::size_t j, std::size_t k,
                            const WeightedSampleMeasure& reference, int p,
                            const TransportOptions& opts) {
  if (runs.size() < 64)
    throw Error(cat("replica_law_distance needs >= 64 replicas, got ", runs.size()));
  if (j == 0 || j > 3) throw Error(cat("marginal order must be in {1,2,3}, got ", j));
  const auto sample = replica_marginal_sample(runs, j, k);
  if (reference.d != sample.d)
    throw ShapeError(cat("reference dimension ", reference.d, " != j*d = ", sample.d));
  return wasserstein(sample, reference, p, opts).distance;
}

}  // namespace mkv
