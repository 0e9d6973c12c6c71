#include "mkv/fields.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>

#include "mkv/rng.hpp"

namespace mkv {

// ---------------------------------------------------------------------------
// potentials

ConfinementPotential ConfinementPotential::zero() { return ConfinementPotential(); }

ConfinementPotential ConfinementPotential::quadratic(double lambda) {
  ConfinementPotential p;
  p.kind_ = ConfinementKind::quadratic;
  p.lambda_ = lambda;
  return p;
}

ConfinementPotential ConfinementPotential::double_well() {
  ConfinementPotential p;
  p.kind_ = ConfinementKind::double_well;
  return p;
}

ConfinementPotential ConfinementPotential::custom(ScalarField f) {
  ConfinementPotential p;
  p.kind_ = ConfinementKind::custom;
  p.field_ = std::move(f);
  return p;
}

double ConfinementPotential::operator()(ConstSpan x) const {
  switch (kind_) {
    case ConfinementKind::zero:
      return 0.0;
    case ConfinementKind::quadratic:
      return 0.5 * lambda_ * norm_sq(x);
    case ConfinementKind::double_well: {
      const double s = norm_sq(x);
      return 0.25 * s * s - 0.5 * s;
    }
    case ConfinementKind::custom:
      return field_.value(x);
  }
  return 0.0;
}

void ConfinementPotential::gradient(ConstSpan x, MutSpan out) const {
  switch (kind_) {
    case ConfinementKind::zero:
      std::fill(out.begin(), out.end(), 0.0);
      return;
    case ConfinementKind::quadratic:
      for (std::size_t a = 0; a < x.size(); ++a) out[a] = lambda_ * x[a];
      return;
    case ConfinementKind::double_well: {
      const double s = norm_sq(x);
      for (std::size_t a = 0; a < x.size(); ++a) out[a] = (s - 1.0) * x[a];
      return;
    }
    case ConfinementKind::custom:
      field_.gradient(x, out);
      return;
  }
}

InteractionPotential InteractionPotential::none() { return InteractionPotential(); }

InteractionPotential InteractionPotential::quadratic(double alpha) {
  InteractionPotential p;
  p.kind_ = alpha == 0.0 ? InteractionKind::none : InteractionKind::quadratic;
  p.alpha_ = alpha;
  return p;
}

InteractionPotential InteractionPotential::gaussian_kernel(double width) {
  if (!(width > 0.0)) throw Error(cat("gaussian kernel width must be positive, got ", width));
  InteractionPotential p;
  p.kind_ = InteractionKind::gaussian_kernel;
  p.width_ = width;
  return p;
}

InteractionPotential InteractionPotential::custom(ScalarField f) {
  InteractionPotential p;
  p.kind_ = InteractionKind::custom;
  p.field_ = std::move(f);
  return p;
}

double InteractionPotential::operator()(ConstSpan x) const {
  switch (kind_) {
    case InteractionKind::none:
      return 0.0;
    case InteractionKind::quadratic:
      return 0.5 * alpha_ * norm_sq(x);
    case InteractionKind::gaussian_kernel:
      return -std::exp(-0.5 * norm_sq(x) / (width_ * width_));
    case InteractionKind::custom:
      return field_.value(x);
  }
  return 0.0;
}

void InteractionPotential::gradient(ConstSpan x, MutSpan out) const {
  switch (kind_) {
    case InteractionKind::none:
      std::fill(out.begin(), out.end(), 0.0);
      return;
    case InteractionKind::quadratic:
      for (std::size_t a = 0; a < x.size(); ++a) out[a] = alpha_ * x[a];
      return;
    case InteractionKind::gaussian_kernel: {
      const double w2 = width_ * width_;
      const double e = std::exp(-0.5 * norm_sq(x) / w2);
      for (std::size_t a = 0; a < x.size(); ++a) out[a] = x[a] / w2 * e;
      return;
    }
    case InteractionKind::custom:
      field_.gradient(x, out);
      return;
  }
}

// ---------------------------------------------------------------------------
// model library

GranularMediaModel quadratic_model(double lambda, double alpha, double sigma, std::size_t d) {
  GranularMediaModel m;
  m.d = d;
  m.V = ConfinementPotential::quadratic(lambda);
  m.U = InteractionPotential::quadratic(alpha);
  m.sigma = sigma;
  m.lambda = lambda;
  m.C = lambda + std::fabs(alpha) + 1.0;
  m.beta = 1.0;
  return m;
}

GranularMediaModel double_well_model(double alpha, double sigma, std::size_t d) {
  GranularMediaModel m;
  m.d = d;
  m.V = ConfinementPotential::double_well();
  m.U = InteractionPotential::quadratic(alpha);
  m.sigma = sigma;
  m.lambda = 1.0;
  // gradient growth is cubic; the constant is calibrated to the probe box
  m.C = 30.0 + std::fabs(alpha);
  m.beta = 1.0;
  return m;
}

GranularMediaModel gaussian_attraction_model(double lambda, double width, double sigma,
                                             std::size_t d) {
  GranularMediaModel m;
  m.d = d;
  m.V = ConfinementPotential::quadratic(lambda);
  m.U = InteractionPotential::gaussian_kernel(width);
  m.sigma = sigma;
  m.lambda = lambda;
  m.C = lambda + std::exp(-0.5) / width + 1.0;
  m.beta = 1.0;
  return m;
}

std::string GranularMediaModel::describe() const {
  std::string v;
  switch (V.kind()) {
    case ConfinementKind::zero: v = "V=0"; break;
    case ConfinementKind::quadratic: v = cat("V=quadratic(lambda=", V.lambda(), ")"); break;
    case ConfinementKind::double_well: v = "V=double_well"; break;
    case ConfinementKind::custom: v = "V=custom"; break;
  }
  std::string u;
  switch (U.kind()) {
    case InteractionKind::none: u = "U=0"; break;
    case InteractionKind::quadratic: u = cat("U=quadratic(alpha=", U.alpha(), ")"); break;
    case InteractionKind::gaussian_kernel: u = cat("U=gaussian(w=", U.width(), ")"); break;
    case InteractionKind::custom: u = "U=custom"; break;
  }
  return cat(v, ", ", u, ", sigma=", sigma, ", d=", d);
}

// ---------------------------------------------------------------------------
// drift

Vec sorted_positions(const ParticleEnsemble& ensemble) {
  const std::size_t n = ensemble.n, d = ensemble.d;
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  const double* p = ensemble.positions.data();
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return std::lexicographical_compare(p + a * d, p + (a + 1) * d, p + b * d, p + (b + 1) * d);
  });
  Vec out(n * d);
  for (std::size_t r = 0; r < n; ++r)
    std::memcpy(out.data() + r * d, p + idx[r] * d, d * sizeof(double));
  return out;
}

namespace {

// accumulates sum_j grad U(x - y_j) over the rows of `sorted`, in row order
void interaction_sum(const InteractionPotential& U, ConstSpan x, ConstSpan sorted, std::size_t d,
                     MutSpan acc) {
  const std::size_t n = sorted.size() / d;
  switch (U.kind()) {
    case InteractionKind::none:
      return;
    case InteractionKind::quadratic: {
      // grad U(z) = alpha z; accumulate differences, scale once
      if (d == 1) {
        double s = 0.0;
        const double xv = x[0];
        for (std::size_t j = 0; j < n; ++j) s += xv - sorted[j];
        acc[0] += U.alpha() * s;
      } else {
        Vec s(d, 0.0);
        for (std::size_t j = 0; j < n; ++j)
          for (std::size_t a = 0; a < d; ++a) s[a] += x[a] - sorted[j * d + a];
        for (std::size_t a = 0; a < d; ++a) acc[a] += U.alpha() * s[a];
      }
      return;
    }
    case InteractionKind::gaussian_kernel: {
      const double w2 = U.width() * U.width();
      for (std::size_t j = 0; j < n; ++j) {
        double r2 = 0.0;
        for (std::size_t a = 0; a < d; ++a) {
          const double z = x[a] - sorted[j * d + a];
          r2 += z * z;
        }
        const double e = std::exp(-0.5 * r2 / w2) / w2;
        for (std::size_t a = 0; a < d; ++a) acc[a] += (x[a] - sorted[j * d + a]) * e;
      }
      return;
    }
    case InteractionKind::custom: {
      Vec z(d), g(d);
      for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t a = 0; a < d; ++a) z[a] = x[a] - sorted[j * d + a];
        U.gradient(z, g);
        for (std::size_t a = 0; a < d; ++a) acc[a] += g[a];
      }
      return;
    }
  }
}

}  // namespace

void granular_drift_into(const GranularMediaModel& model, ConstSpan x, ConstSpan sorted,
                         MutSpan out) {
  const std::size_t d = model.d;
  const std::size_t n = sorted.size() / d;
  Vec gv(d);
  model.V.gradient(x, gv);
  Vec acc(d, 0.0);
  interaction_sum(model.U, x, sorted, d, acc);
  const double inv_n = n > 0 ? 1.0 / static_cast<double>(n) : 0.0;
  for (std::size_t a = 0; a < d; ++a) out[a] = -gv[a] - inv_n * acc[a];
  for (std::size_t a = 0; a < d; ++a)
    if (!std::isfinite(out[a]))
      throw NumericError(cat("non-finite drift component ", a, " at x[0]=", x[0]));
}

Vec drift_granular(const GranularMediaModel& model, ConstSpan x, const ParticleEnsemble& ensemble) {
  if (ensemble.n == 0) throw ShapeError("drift_granular needs a nonempty ensemble");
  if (x.size() != model.d || ensemble.d != model.d)
    throw ShapeError(cat("dimension mismatch: model d=", model.d, ", x d=", x.size(),
                         ", ensemble d=", ensemble.d));
  const Vec sorted = sorted_positions(ensemble);
  Vec out(model.d);
  granular_drift_into(model, x, sorted, out);
  return out;
}

void granular_drift_weighted(const GranularMediaModel& model, ConstSpan x,
                             const WeightedSampleMeasure& mu, MutSpan out) {
  const std::size_t d = model.d;
  Vec gv(d);
  model.V.gradient(x, gv);
  Vec acc(d, 0.0);
  switch (model.U.kind()) {
    case InteractionKind::none:
      break;
    case InteractionKind::quadratic: {
      // sum_j w_j alpha (x - y_j) = alpha (x - mean)
      const Vec mean = mu.mean();
      for (std::size_t a = 0; a < d; ++a) acc[a] = model.U.alpha() * (x[a] - mean[a]);
      break;
    }
    case InteractionKind::gaussian_kernel: {
      const double w2 = model.U.width() * model.U.width();
      for (std::size_t j = 0; j < mu.size(); ++j) {
        const auto y = mu.point(j);
        double r2 = 0.0;
        for (std::size_t a = 0; a < d; ++a) {
          const double z = x[a] - y[a];
          r2 += z * z;
        }
        const double e = mu.weights[j] * std::exp(-0.5 * r2 / w2) / w2;
        for (std::size_t a = 0; a < d; ++a) acc[a] += (x[a] - y[a]) * e;
      }
      break;
    }
    case InteractionKind::custom: {
      Vec z(d), g(d);
      for (std::size_t j = 0; j < mu.size(); ++j) {
        const auto y = mu.point(j);
        for (std::size_t a = 0; a < d; ++a) z[a] = x[a] - y[a];
        model.U.gradient(z, g);
        for (std::size_t a = 0; a < d; ++a) acc[a] += mu.weights[j] * g[a];
      }
      break;
    }
  }
  for (std::size_t a = 0; a < d; ++a) out[a] = -gv[a] - acc[a];
}

MeanFieldModel GranularMediaModel::as_mean_field() const {
  MeanFieldModel mf;
  mf.d = d;
  mf.d_prime = d;
  const GranularMediaModel self = *this;
  mf.drift = [self](ConstSpan x, const WeightedSampleMeasure& mu, MutSpan out) {
    granular_drift_weighted(self, x, mu, out);
  };
  const double s = sigma;
  const std::size_t dim = d;
  mf.diffusion = [s, dim](ConstSpan, const WeightedSampleMeasure&, MutSpan out) {
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t a = 0; a < dim; ++a) out[a * dim + a] = s;
  };
  mf.growth_constant = C;
  mf.diffusion_bound = std::fabs(sigma) * std::sqrt(static_cast<double>(d));
  return mf;
}

// ---------------------------------------------------------------------------
// test functions

TestFunctionBundle TestFunctionBundle::radial_bump(Vec center, double radius) {
  if (!(radius > 0.0)) throw Error(cat("bump radius must be positive, got ", radius));
  TestFunctionBundle b;
  b.d = center.size();
  b.center = std::move(center);
  b.support_radius = radius;
  const Vec c = b.center;
  const double r = radius;
  const std::size_t d = b.d;

  auto scaled_sq = [c, r, d](ConstSpan x) {
    double s = 0.0;
    for (std::size_t a = 0; a < d; ++a) {
      const double u = (x[a] - c[a]) / r;
      s += u * u;
    }
    return s;
  };

  b.phi = [scaled_sq](ConstSpan x) {
    const double s = scaled_sq(x);
    if (s >= 1.0) return 0.0;
    return std::exp(1.0 - 1.0 / (1.0 - s));
  };
  b.grad = [scaled_sq, c, r, d](ConstSpan x, MutSpan out) {
    const double s = scaled_sq(x);
    std::fill(out.begin(), out.end(), 0.0);
    if (s >= 1.0) return;
    const double phi = std::exp(1.0 - 1.0 / (1.0 - s));
    if (phi == 0.0) return;
    const double w = 1.0 - s;
    const double g = -2.0 * phi / (r * w * w);
    for (std::size_t a = 0; a < d; ++a) out[a] = g * (x[a] - c[a]) / r;
  };
  b.hess = [scaled_sq, c, r, d](ConstSpan x, MutSpan out) {
    const double s = scaled_sq(x);
    std::fill(out.begin(), out.end(), 0.0);
    if (s >= 1.0) return;
    const double phi = std::exp(1.0 - 1.0 / (1.0 - s));
    if (phi == 0.0) return;
    const double w = 1.0 - s;
    const double g = -2.0 * phi / (r * w * w);
    const double gp = (2.0 * phi / r) * (1.0 / (w * w * w * w) - 2.0 / (w * w * w));
    for (std::size_t a = 0; a < d; ++a) {
      const double ua = (x[a] - c[a]) / r;
      for (std::size_t e = 0; e < d; ++e) {
        const double ue = (x[e] - c[e]) / r;
        out[a * d + e] = 2.0 * gp / r * ua * ue;
      }
      out[a * d + a] += g / r;
    }
  };
  return b;
}

TestFunctionBundle TestFunctionBundle::combine(double a, const TestFunctionBundle& f, double bWeight,
                                               const TestFunctionBundle& g) {
  if (f.d != g.d) throw ShapeError("combining bundles of different dimension");
  TestFunctionBundle out;
  out.d = f.d;
  // smallest ball centered between the two that contains both supports
  out.center.resize(f.d);
  double dist = 0.0;
  for (std::size_t i = 0; i < f.d; ++i) {
    out.center[i] = 0.5 * (f.center[i] + g.center[i]);
    const double diff = f.center[i] - g.center[i];
    dist += diff * diff;
  }
  out.support_radius = 0.5 * std::sqrt(dist) + std::max(f.support_radius, g.support_radius);
  auto pf = f.phi, pg = g.phi;
  out.phi = [a, bWeight, pf, pg](ConstSpan x) { return a * pf(x) + bWeight * pg(x); };
  auto gf = f.grad, gg = g.grad;
  const std::size_t d = f.d;
  out.grad = [a, bWeight, gf, gg, d](ConstSpan x, MutSpan o) {
    Vec tmp(d);
    gf(x, o);
    gg(x, tmp);
    for (std::size_t i = 0; i < d; ++i) o[i] = a * o[i] + bWeight * tmp[i];
  };
  auto hf = f.hess, hg = g.hess;
  out.hess = [a, bWeight, hf, hg, d](ConstSpan x, MutSpan o) {
    Vec tmp(d * d);
    hf(x, o);
    hg(x, tmp);
    for (std::size_t i = 0; i < d * d; ++i) o[i] = a * o[i] + bWeight * tmp[i];
  };
  return out;
}

// ---------------------------------------------------------------------------
// generator

double generator_apply(const TestFunctionBundle& phi, ConstSpan x, const WeightedSampleMeasure& mu,
                       const MeanFieldModel& model) {
  const std::size_t d = model.d;
  if (phi.d != d || x.size() != d)
    throw ShapeError(cat("generator dimension mismatch: model d=", d, ", phi d=", phi.d, ", x d=",
                         x.size()));
  if (!all_finite(x)) throw NumericError("generator_apply: non-finite evaluation point");
  // compact support: skip the drift entirely outside the bundle's ball
  if (phi.support_radius > 0.0) {
    double r2 = 0.0;
    for (std::size_t a = 0; a < d; ++a) {
      const double z = x[a] - phi.center[a];
      r2 += z * z;
    }
    if (r2 >= phi.support_radius * phi.support_radius) return 0.0;
  }
  Vec b(d), g(d);
  model.drift(x, mu, b);
  phi.grad(x, g);
  double value = dot(b, g);
  const std::size_t dp = model.d_prime;
  Vec sig(d * dp), H(d * d);
  model.diffusion(x, mu, sig);
  phi.hess(x, H);
  // tr(sigma^T H sigma) = sum_{a} sigma_a^T H sigma_a over columns a
  for (std::size_t a = 0; a < dp; ++a)
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j)
        value += sig[i * dp + a] * H[i * d + j] * sig[j * dp + a];
  return value;
}

// ---------------------------------------------------------------------------
// assumption probes

DissipativityReport dissipativity_probe(const GranularMediaModel& model,
                                        const std::vector<WeightedSampleMeasure>& probes) {
  if (probes.empty()) throw ShapeError("dissipativity_probe needs at least one probe measure");
  DissipativityReport rep;
  rep.rows.reserve(probes.size());
  Vec b(model.d);
  for (const auto& mu : probes) {
    mu.validate();
    DissipativityRow row;
    row.kappa2 = mu.moment(2);
    row.kappa4 = mu.moment(4);
    for (std::size_t i = 0; i < mu.size(); ++i) {
      const auto x = mu.point(i);
      granular_drift_weighted(model, x, mu, b);
      const double xb = dot(x, b);
      row.D1 += mu.weights[i] * xb;
      row.D2 += mu.weights[i] * xb * norm_sq(x);
    }
    rep.rows.push_back(row);
  }
  // C = max(0, sup positive part), then c = least compatible slope
  double maxD1 = 0.0, maxD2g = 0.0;
  for (const auto& r : rep.rows) {
    maxD1 = std::max(maxD1, r.D1);
    const double g2 = (1.0 + r.kappa2) * (1.0 + std::sqrt(r.kappa4));
    maxD2g = std::max(maxD2g, r.D2 / g2);
  }
  rep.C1 = maxD1;
  rep.C2 = maxD2g;
  double c1 = std::numeric_limits<double>::infinity();
  double c2 = std::numeric_limits<double>::infinity();
  for (const auto& r : rep.rows) {
    if (r.kappa2 > 0.0) c1 = std::min(c1, (rep.C1 - r.D1) / r.kappa2);
    const double g2 = (1.0 + r.kappa2) * (1.0 + std::sqrt(r.kappa4));
    if (r.kappa4 > 0.0) c2 = std::min(c2, (rep.C2 * g2 - r.D2) / r.kappa4);
  }
  rep.c1 = std::isfinite(c1) ? c1 : 0.0;
  rep.c2 = std::isfinite(c2) ? c2 : 0.0;
  rep.dis1_ok = rep.c1 > 0.0;
  rep.dis2_ok = rep.c2 > 0.0;
  return rep;
}

std::vector<std::string> probe_assumptions(const GranularMediaModel& model, std::uint64_t seed,
                                           std::size_t n_probes, double box_halfwidth) {
  std::vector<std::string> violations;
  RngStream rng(seed);
  const std::size_t d = model.d;
  Vec x(d), mx(d), gv(d), gu(d), gun(d);
  const double slack = 1e-9;
  for (std::size_t i = 0; i < n_probes; ++i) {
    for (std::size_t a = 0; a < d; ++a)
      x[a] = box_halfwidth *
             (2.0 * rng.uniform({0, static_cast<std::uint32_t>(a), i, 7}) - 1.0);
    for (std::size_t a = 0; a < d; ++a) mx[a] = -x[a];
    model.V.gradient(x, gv);
    model.U.gradient(x, gu);
    model.U.gradient(mx, gun);
    for (std::size_t a = 0; a < d; ++a)
      if (std::fabs(gun[a] + gu[a]) > 1e-9 * (1.0 + std::fabs(gu[a])))
        violations.push_back(cat("gradU not odd at probe ", i, " axis ", a));
    const double x_gv = dot(x, gv);
    if (x_gv < model.lambda * norm_sq(x) - model.C - slack)
      violations.push_back(cat("<x,gradV> dissipativity fails at probe ", i, ": ", x_gv));
    if (dot(x, gu) < -model.C - slack)
      violations.push_back(cat("<x,gradU> lower bound fails at probe ", i));
    if (norm(gv) + norm(gu) > model.C * (1.0 + norm(x)) + slack)
      violations.push_back(cat("gradient growth bound fails at probe ", i));
  }
  return violations;
}

}  // namespace mkv
