#include "mkv/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace mkv {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double pair_cost(ConstSpan x, ConstSpan y, int p) {
  double s = 0.0;
  for (std::size_t a = 0; a < x.size(); ++a) {
    const double z = x[a] - y[a];
    s += z * z;
  }
  return p == 2 ? s : std::sqrt(s);
}

void check_pair(const WeightedSampleMeasure& mu, const WeightedSampleMeasure& nu, int p) {
  if (p != 1 && p != 2) throw Error(cat("wasserstein supports p in {1,2}, got ", p));
  if (mu.d != nu.d)
    throw ShapeError(cat("dimension mismatch: ", mu.d, " vs ", nu.d));
  mu.validate();
  nu.validate();
}

// exact W_p in d=1 through the quantile coupling (monotone rearrangement)
double quantile_1d(const WeightedSampleMeasure& mu, const WeightedSampleMeasure& nu, int p) {
  auto sorted_atoms = [](const WeightedSampleMeasure& m) {
    std::vector<std::pair<double, double>> a(m.size());
    for (std::size_t i = 0; i < m.size(); ++i) a[i] = {m.points[i], m.weights[i]};
    std::sort(a.begin(), a.end());
    return a;
  };
  const auto A = sorted_atoms(mu);
  const auto B = sorted_atoms(nu);
  double cost = 0.0;
  std::size_t i = 0, j = 0;
  double ra = A[0].second, rb = B[0].second;
  while (i < A.size() && j < B.size()) {
    const double mass = std::min(ra, rb);
    if (mass > 0.0) {
      const double z = std::fabs(A[i].first - B[j].first);
      cost += mass * (p == 2 ? z * z : z);
    }
    ra -= mass;
    rb -= mass;
    if (ra <= 0.0 && ++i < A.size()) ra = A[i].second;
    if (rb <= 0.0 && ++j < B.size()) rb = B[j].second;
  }
  return p == 2 ? std::sqrt(cost) : cost;
}

// log-sum-exp over a strided slice
double lse(const std::vector<double>& v) {
  double mx = -kInf;
  for (double x : v) mx = std::max(mx, x);
  if (!std::isfinite(mx)) return -kInf;
  double s = 0.0;
  for (double x : v) s += std::exp(x - mx);
  return mx + std::log(s);
}

struct SinkhornOut {
  double cost = 0.0;
  double eps = 0.0;
};

// entropic plan cost for an explicit cost matrix, eps-scaling, no debiasing
SinkhornOut sinkhorn_cost(const std::vector<double>& C, const std::vector<double>& wa,
                          const std::vector<double>& wb, const TransportOptions& opts) {
  const std::size_t ma = wa.size(), mb = wb.size();
  std::vector<double> all(C);
  std::nth_element(all.begin(), all.begin() + all.size() / 2, all.end());
  const double median = all[all.size() / 2];
  const double eps_floor = std::max(opts.sinkhorn_eps_floor_scale * median, 1e-12);

  std::vector<double> la(ma), lb(mb);
  for (std::size_t i = 0; i < ma; ++i) la[i] = std::log(std::max(wa[i], 1e-300));
  for (std::size_t j = 0; j < mb; ++j) lb[j] = std::log(std::max(wb[j], 1e-300));

  std::vector<double> f(ma, 0.0), g(mb, 0.0), scratch(std::max(ma, mb));

  std::vector<double> ladder;
  double eps = std::max(opts.sinkhorn_eps_start, eps_floor);
  ladder.push_back(eps);
  while (eps > eps_floor) {
    eps = std::max(eps * opts.sinkhorn_eps_factor, eps_floor);
    ladder.push_back(eps);
  }

  for (double e : ladder) {
    for (std::size_t it = 0; it < opts.sinkhorn_max_iter; ++it) {
      for (std::size_t i = 0; i < ma; ++i) {
        scratch.resize(mb);
        for (std::size_t j = 0; j < mb; ++j) scratch[j] = (g[j] - C[i * mb + j]) / e + lb[j];
        f[i] = -e * lse(scratch);
      }
      double err = 0.0;
      for (std::size_t j = 0; j < mb; ++j) {
        scratch.resize(ma);
        for (std::size_t i = 0; i < ma; ++i) scratch[i] = (f[i] - C[i * mb + j]) / e + la[i];
        const double new_g = -e * lse(scratch);
        err = std::max(err, std::fabs(new_g - g[j]));
        g[j] = new_g;
      }
      if (err < opts.sinkhorn_tol * e) break;
    }
  }

  const double e = ladder.back();
  double cost = 0.0;
  for (std::size_t i = 0; i < ma; ++i)
    for (std::size_t j = 0; j < mb; ++j) {
      const double lp = (f[i] + g[j] - C[i * mb + j]) / e + la[i] + lb[j];
      cost += std::exp(lp) * C[i * mb + j];
    }
  SinkhornOut out;
  out.cost = cost;
  out.eps = e;
  return out;
}

SinkhornOut sinkhorn(const WeightedSampleMeasure& mu, const WeightedSampleMeasure& nu, int p,
                     const TransportOptions& opts) {
  const std::size_t ma = mu.size(), mb = nu.size();
  std::vector<double> C(ma * mb);
  for (std::size_t i = 0; i < ma; ++i)
    for (std::size_t j = 0; j < mb; ++j) C[i * mb + j] = pair_cost(mu.point(i), nu.point(j), p);
  return sinkhorn_cost(C, mu.weights, nu.weights, opts);
}

}  // namespace

std::vector<std::size_t> solve_assignment(const std::vector<double>& cost, std::size_t m,
                                          double* total) {
  if (cost.size() != m * m) throw ShapeError("assignment cost matrix must be m x m");
  // successive shortest augmenting paths with dual potentials (1-based)
  std::vector<double> u(m + 1, 0.0), v(m + 1, 0.0);
  std::vector<std::size_t> match(m + 1, 0), way(m + 1, 0);
  for (std::size_t i = 1; i <= m; ++i) {
    match[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(m + 1, kInf);
    std::vector<char> used(m + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = match[j0];
      double delta = kInf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = cost[(i0 - 1) * m + (j - 1)] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= m; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::size_t> assign(m);
  double sum = 0.0;
  for (std::size_t j = 1; j <= m; ++j) {
    assign[match[j] - 1] = j - 1;
    sum += cost[(match[j] - 1) * m + (j - 1)];
  }
  if (total) *total = sum;
  return assign;
}

WassersteinResult wasserstein(const WeightedSampleMeasure& mu, const WeightedSampleMeasure& nu,
                              int p, const TransportOptions& opts) {
  check_pair(mu, nu, p);
  WassersteinResult res;
  if (mu.d == 1) {
    res.distance = quantile_1d(mu, nu, p);
    res.method = TransportMethod::quantile_1d;
    return res;
  }
  const bool exact_shape = mu.size() == nu.size() && mu.size() <= opts.exact_cap &&
                           mu.is_uniform() && nu.is_uniform();
  if (exact_shape) {
    const std::size_t m = mu.size();
    std::vector<double> C(m * m);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j) C[i * m + j] = pair_cost(mu.point(i), nu.point(j), p);
    double total = 0.0;
    solve_assignment(C, m, &total);
    const double mean = total / static_cast<double>(m);
    res.distance = p == 2 ? std::sqrt(mean) : mean;
    res.method = TransportMethod::assignment;
    return res;
  }
  const auto sk = sinkhorn(mu, nu, p, opts);
  res.distance = p == 2 ? std::sqrt(std::max(sk.cost, 0.0)) : std::max(sk.cost, 0.0);
  res.method = TransportMethod::entropic;
  res.approximate = true;
  res.epsilon = sk.eps;
  return res;
}

double wasserstein_bruteforce(const WeightedSampleMeasure& mu, const WeightedSampleMeasure& nu,
                              int p) {
  check_pair(mu, nu, p);
  const std::size_t m = mu.size();
  if (m != nu.size() || !mu.is_uniform() || !nu.is_uniform())
    throw ShapeError("bruteforce oracle needs equal-size uniform measures");
  if (m > 8) throw ShapeError(cat("bruteforce oracle capped at 8 atoms, got ", m));
  std::vector<std::size_t> perm(m);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  double best = kInf;
  do {
    double c = 0.0;
    for (std::size_t i = 0; i < m; ++i) c += pair_cost(mu.point(i), nu.point(perm[i]), p);
    best = std::min(best, c);
  } while (std::next_permutation(perm.begin(), perm.end()));
  const double mean = best / static_cast<double>(m);
  return p == 2 ? std::sqrt(mean) : mean;
}

WeightedSampleMeasure PathSampleSet::marginal(std::size_t t_idx) const {
  if (t_idx >= n_times) throw TimeRangeError(cat("marginal index ", t_idx, " out of range"));
  Vec pts(n_paths * d);
  for (std::size_t i = 0; i < n_paths; ++i) {
    const auto v = at(i, t_idx);
    std::copy(v.begin(), v.end(), pts.begin() + i * d);
  }
  return WeightedSampleMeasure::uniform(d, std::move(pts));
}

PathDistanceResult path_wasserstein(const PathSampleSet& P, const PathSampleSet& Q, int p,
                                    std::size_t horizon_terms, const TransportOptions& opts) {
  if (p != 1 && p != 2) throw Error(cat("path_wasserstein supports p in {1,2}, got ", p));
  if (P.d != Q.d || P.grid_step != Q.grid_step)
    throw ShapeError("path sample sets must share dimension and grid step");
  if (horizon_terms == 0) throw Error("horizon_terms must be >= 1");
  const double horizon = static_cast<double>(horizon_terms);
  if (P.window() + 1e-12 < horizon || Q.window() + 1e-12 < horizon)
    throw TimeRangeError(cat("window ", std::min(P.window(), Q.window()),
                             " shorter than horizon_terms=", horizon_terms));

  PathDistanceResult out;
  out.truncation_error = std::pow(2.0, -static_cast<double>(horizon_terms));

  const std::size_t na = P.n_paths, nb = Q.n_paths;
  for (std::size_t l = 1; l <= horizon_terms; ++l) {
    // grid nodes with time <= l
    const std::size_t count = std::min(
        static_cast<std::size_t>(std::floor(static_cast<double>(l) / P.grid_step + 1e-9)) + 1,
        P.n_times);
    // sup-over-grid Euclidean distance between restricted paths, to the p
    auto restricted_cost = [&](std::size_t i, std::size_t j) {
      double sup = 0.0;
      for (std::size_t t = 0; t < count; ++t) {
        double s = 0.0;
        const auto x = P.at(i, t);
        const auto y = Q.at(j, t);
        for (std::size_t a = 0; a < P.d; ++a) {
          const double z = x[a] - y[a];
          s += z * z;
        }
        sup = std::max(sup, s);
      }
      const double dist = std::sqrt(sup);
      return p == 2 ? dist * dist : dist;
    };
    std::vector<double> C(na * nb);
    for (std::size_t i = 0; i < na; ++i)
      for (std::size_t j = 0; j < nb; ++j) C[i * nb + j] = restricted_cost(i, j);
    double w;
    if (na == nb && na <= opts.exact_cap) {
      double total = 0.0;
      solve_assignment(C, na, &total);
      const double mean = total / static_cast<double>(na);
      w = p == 2 ? std::sqrt(mean) : mean;
    } else {
      const Vec wa(na, 1.0 / static_cast<double>(na));
      const Vec wb(nb, 1.0 / static_cast<double>(nb));
      const double c = std::max(sinkhorn_cost(C, wa, wb, opts).cost, 0.0);
      w = p == 2 ? std::sqrt(c) : c;
    }
    out.distance += std::pow(2.0, -static_cast<double>(l)) * std::min(1.0, w);
  }
  return out;
}

SetDistanceResult distance_to_set(const WeightedSampleMeasure& mu,
                                  const std::vector<WeightedSampleMeasure>& refs, int p,
                                  const TransportOptions& opts) {
  SetDistanceResult res;
  if (refs.empty()) {
    res.distance = kInf;  // inf over the empty set
    res.argmin = SetDistanceResult::npos;
    return res;
  }
  res.distance = kInf;
  for (std::size_t r = 0; r < refs.size(); ++r) {
    const double w = wasserstein(mu, refs[r], p, opts).distance;
    if (w < res.distance) {
      res.distance = w;
      res.argmin = r;
    }
  }
  return res;
}

}  // namespace mkv
