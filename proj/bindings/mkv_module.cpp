#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "mkv/config.hpp"
#include "mkv/diagnostics.hpp"
#include "mkv/orchestrate.hpp"
#include "mkv/stationary.hpp"

namespace py = pybind11;
using namespace mkv;

namespace {

Vec to_vec(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
  return Vec(a.data(), a.data() + a.size());
}

WeightedSampleMeasure measure_from(
    const py::array_t<double, py::array::c_style | py::array::forcecast>& points,
    const std::optional<py::array_t<double, py::array::c_style | py::array::forcecast>>& weights) {
  if (points.ndim() != 2) throw ShapeError("points must be an (m, d) array");
  const auto m = static_cast<std::size_t>(points.shape(0));
  const auto d = static_cast<std::size_t>(points.shape(1));
  Vec pts(points.data(), points.data() + m * d);
  if (!weights) return WeightedSampleMeasure::uniform(d, std::move(pts));
  return WeightedSampleMeasure(d, std::move(pts), to_vec(*weights));
}

py::array_t<double> positions_array(const TrajectoryStore& store) {
  py::array_t<double> arr({store.times.size(), store.n, store.d});
  std::copy(store.positions.begin(), store.positions.end(), arr.mutable_data());
  return arr;
}

py::dict grid_dict(const MeasureGrid& grid) {
  py::dict out;
  out["lower"] = grid.spec.lower;
  out["h"] = grid.spec.h;
  out["extent"] = grid.spec.extent;
  out["density"] = py::array_t<double>(static_cast<py::ssize_t>(grid.density.size()),
                                       grid.density.data());
  out["mean"] = grid.mean();
  out["variance"] = grid.variance();
  return out;
}

GridSpec spec_from(double lo, double hi, double h, std::size_t d) {
  if (d == 1) return GridSpec::line(lo, hi, h);
  if (d == 2) return GridSpec::square(lo, hi, h);
  throw GridError("grids support d in {1,2}");
}

PathSampleSet paths_from(
    const py::array_t<double, py::array::c_style | py::array::forcecast>& values,
    double grid_step) {
  if (values.ndim() != 3) throw ShapeError("paths must be an (n, T, d) array");
  PathSampleSet set;
  set.n_paths = static_cast<std::size_t>(values.shape(0));
  set.n_times = static_cast<std::size_t>(values.shape(1));
  set.d = static_cast<std::size_t>(values.shape(2));
  set.grid_step = grid_step;
  set.values.assign(values.data(), values.data() + values.size());
  return set;
}

}  // namespace

PYBIND11_MODULE(_mkv, m) {
  m.doc() = "mean-field interacting-particle simulation lab (C++ core)";
  m.attr("__version__") = MKV_VERSION;

  py::register_exception<Error>(m, "MkvError");

  py::class_<StepSchedule>(m, "StepSchedule")
      .def_static("power_law", &StepSchedule::power_law, py::arg("gamma0"), py::arg("exponent"))
      .def_static("constant", &StepSchedule::constant, py::arg("gamma0"))
      .def_static("table", &StepSchedule::table, py::arg("steps"))
      .def("gamma", &StepSchedule::gamma, py::arg("k"))
      .def("__repr__", &StepSchedule::describe);

  py::class_<TimeGrid, std::shared_ptr<TimeGrid>>(m, "TimeGrid")
      .def(py::init<StepSchedule>())
      .def("tau", &TimeGrid::tau, py::arg("k"))
      .def("k_of_t", &TimeGrid::k_of_t, py::arg("t"));

  py::class_<RngStream>(m, "RngStream")
      .def(py::init<std::uint64_t>(), py::arg("master_seed"))
      .def(
          "uniform",
          [](const RngStream& rng, std::uint32_t replica, std::uint32_t particle,
             std::uint64_t step, std::uint32_t draw) {
            return rng.uniform({replica, particle, step, draw});
          },
          py::arg("replica"), py::arg("particle"), py::arg("step"), py::arg("draw"))
      .def(
          "normal",
          [](const RngStream& rng, std::uint32_t replica, std::uint32_t particle,
             std::uint64_t step, std::uint32_t draw) {
            return rng.normal({replica, particle, step, draw});
          },
          py::arg("replica"), py::arg("particle"), py::arg("step"), py::arg("draw"));

  py::class_<GranularMediaModel>(m, "GranularMediaModel")
      .def_readonly("sigma", &GranularMediaModel::sigma)
      .def_readonly("d", &GranularMediaModel::d)
      .def("__repr__", &GranularMediaModel::describe);

  m.def("quadratic_model", &quadratic_model, py::arg("lam"), py::arg("alpha"), py::arg("sigma"),
        py::arg("d") = 1);
  m.def("double_well_model", &double_well_model, py::arg("alpha"), py::arg("sigma"),
        py::arg("d") = 1);
  m.def("gaussian_attraction_model", &gaussian_attraction_model, py::arg("lam"), py::arg("width"),
        py::arg("sigma"), py::arg("d") = 1);

  m.def(
      "drift_granular",
      [](const GranularMediaModel& model, const Vec& x,
         const py::array_t<double, py::array::c_style | py::array::forcecast>& positions) {
        if (positions.ndim() != 2) throw ShapeError("positions must be an (n, d) array");
        ParticleEnsemble e(static_cast<std::size_t>(positions.shape(0)),
                           static_cast<std::size_t>(positions.shape(1)));
        std::copy(positions.data(), positions.data() + positions.size(), e.positions.begin());
        return drift_granular(model, x, e);
      },
      py::arg("model"), py::arg("x"), py::arg("positions"));

  m.def(
      "simulate",
      [](const GranularMediaModel& model, const StepSchedule& schedule, std::size_t n,
         std::uint64_t seed, std::optional<double> horizon_tau, std::optional<std::size_t> steps,
         const std::string& init_kind, double init_scale, Vec init_center,
         std::size_t record_stride, std::uint32_t replica, int threads) {
        RunConfig cfg;
        cfg.n = n;
        cfg.d = model.d;
        cfg.seed = seed;
        cfg.replica = replica;
        cfg.horizon_tau = horizon_tau;
        cfg.steps = steps;
        cfg.record_stride = record_stride;
        if (init_kind == "gaussian") cfg.init.kind = InitKind::gaussian;
        else if (init_kind == "uniform_box") cfg.init.kind = InitKind::uniform_box;
        else if (init_kind == "point") cfg.init.kind = InitKind::point;
        else throw Error(cat("unknown init kind '", init_kind, "'"));
        cfg.init.scale = init_scale;
        cfg.init.point = std::move(init_center);
        const RunRecord rec = run(model, schedule, cfg, threads);
        py::dict out;
        out["times"] = rec.store.times;
        out["steps"] = rec.store.steps;
        out["positions"] = positions_array(rec.store);
        Vec taus, m2, m4;
        for (const auto& s : rec.series) {
          taus.push_back(s.tau);
          m2.push_back(s.m2);
          m4.push_back(s.m4);
        }
        out["series_tau"] = taus;
        out["series_m2"] = m2;
        out["series_m4"] = m4;
        out["failed"] = rec.failed();
        if (rec.failed()) out["error"] = *rec.error;
        return out;
      },
      py::arg("model"), py::arg("schedule"), py::arg("n"), py::arg("seed"),
      py::arg("horizon_tau") = std::nullopt, py::arg("steps") = std::nullopt,
      py::arg("init_kind") = "gaussian", py::arg("init_scale") = 1.0,
      py::arg("init_center") = Vec{}, py::arg("record_stride") = 1, py::arg("replica") = 0,
      py::arg("threads") = 1);

  m.def(
      "wasserstein",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& a,
         const py::array_t<double, py::array::c_style | py::array::forcecast>& b, int p,
         const std::optional<py::array_t<double, py::array::c_style | py::array::forcecast>>& wa,
         const std::optional<py::array_t<double, py::array::c_style | py::array::forcecast>>& wb) {
        const auto res = wasserstein(measure_from(a, wa), measure_from(b, wb), p);
        py::dict out;
        out["distance"] = res.distance;
        out["method"] = res.method == TransportMethod::quantile_1d
                            ? "quantile_1d"
                            : res.method == TransportMethod::assignment ? "assignment"
                                                                        : "entropic";
        out["approximate"] = res.approximate;
        out["epsilon"] = res.epsilon;
        return out;
      },
      py::arg("a"), py::arg("b"), py::arg("p") = 2, py::arg("weights_a") = std::nullopt,
      py::arg("weights_b") = std::nullopt);

  m.def(
      "wasserstein_bruteforce",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& a,
         const py::array_t<double, py::array::c_style | py::array::forcecast>& b, int p) {
        return wasserstein_bruteforce(measure_from(a, std::nullopt), measure_from(b, std::nullopt),
                                      p);
      },
      py::arg("a"), py::arg("b"), py::arg("p") = 2);

  m.def(
      "path_wasserstein",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& P,
         const py::array_t<double, py::array::c_style | py::array::forcecast>& Q,
         double grid_step, int p, std::size_t horizon_terms) {
        const auto res = path_wasserstein(paths_from(P, grid_step), paths_from(Q, grid_step), p,
                                          horizon_terms);
        py::dict out;
        out["distance"] = res.distance;
        out["truncation_error"] = res.truncation_error;
        return out;
      },
      py::arg("P"), py::arg("Q"), py::arg("grid_step"), py::arg("p") = 2,
      py::arg("horizon_terms") = 3);

  m.def(
      "gaussian_reference",
      [](double lam, double alpha, double sigma, double lo, double hi, double h, std::size_t d) {
        const auto ref = gaussian_reference(lam, alpha, sigma, spec_from(lo, hi, h, d));
        py::dict out = grid_dict(ref.grid);
        out["target_variance"] = ref.variance;
        return out;
      },
      py::arg("lam"), py::arg("alpha"), py::arg("sigma"), py::arg("lo") = -6.0,
      py::arg("hi") = 6.0, py::arg("h") = 0.01, py::arg("d") = 1);

  m.def(
      "fixed_point_solve",
      [](const GranularMediaModel& model, double lo, double hi, double h, Vec init_mean,
         double init_variance, double damping, double tol, std::size_t max_iter) {
        const auto spec = spec_from(lo, hi, h, model.d);
        const auto init = gaussian_on_grid(spec, init_mean, init_variance);
        const auto res = fixed_point_solve(model, init, damping, tol, max_iter);
        py::dict out = grid_dict(res.grid);
        out["update_residual"] = res.update_residual;
        out["iterations"] = res.iterations;
        out["converged"] = res.converged;
        out["stationarity_residual"] = stationarity_residual(res.grid, model);
        return out;
      },
      py::arg("model"), py::arg("lo"), py::arg("hi"), py::arg("h"), py::arg("init_mean") = Vec{},
      py::arg("init_variance") = 0.25, py::arg("damping") = 0.5, py::arg("tol") = 1e-10,
      py::arg("max_iter") = 10000);

  m.def(
      "enumerate_branches",
      [](const GranularMediaModel& model, double lo, double hi, double h, const Vec& init_means,
         double init_variance, double damping, double tol, std::size_t max_iter) {
        const auto spec = spec_from(lo, hi, h, model.d);
        std::vector<MeasureGrid> inits;
        for (double mean : init_means)
          inits.push_back(gaussian_on_grid(spec, Vec(model.d, mean), init_variance));
        const auto branches = enumerate_branches(model, spec, inits, damping, tol, max_iter);
        py::list out;
        for (const auto& b : branches) {
          py::dict j = grid_dict(b.grid);
          j["update_residual"] = b.update_residual;
          j["converged"] = b.converged;
          j["stationarity_residual"] = stationarity_residual(b.grid, model);
          out.append(j);
        }
        return out;
      },
      py::arg("model"), py::arg("lo"), py::arg("hi"), py::arg("h"), py::arg("init_means"),
      py::arg("init_variance") = 0.25, py::arg("damping") = 0.5, py::arg("tol") = 1e-10,
      py::arg("max_iter") = 10000);

  m.def(
      "estimate_density",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& points, double lo,
         double hi, double h) {
        const auto mu = measure_from(points, std::nullopt);
        const auto est = estimate_density(mu, spec_from(lo, hi, h, mu.d));
        py::dict out = grid_dict(est.grid);
        out["bandwidth"] = est.bandwidth;
        return out;
      },
      py::arg("points"), py::arg("lo") = -6.0, py::arg("hi") = 6.0, py::arg("h") = 0.01);

  m.def(
      "helmholtz",
      [](const GranularMediaModel& model,
         const py::array_t<double, py::array::c_style | py::array::forcecast>& density, double lo,
         double hi, double h) {
        const auto spec = spec_from(lo, hi, h, model.d);
        MeasureGrid grid(spec, to_vec(density));
        const auto t = helmholtz(grid, model);
        py::dict out;
        out["entropy"] = t.entropy;
        out["confinement"] = t.confinement;
        out["interaction"] = t.interaction;
        out["total"] = t.total;
        out["entropy_valid"] = t.entropy_valid;
        return out;
      },
      py::arg("model"), py::arg("density"), py::arg("lo") = -6.0, py::arg("hi") = 6.0,
      py::arg("h") = 0.01);

  m.def(
      "stationarity_residual",
      [](const GranularMediaModel& model,
         const py::array_t<double, py::array::c_style | py::array::forcecast>& density, double lo,
         double hi, double h) {
        MeasureGrid grid(spec_from(lo, hi, h, model.d), to_vec(density));
        return stationarity_residual(grid, model);
      },
      py::arg("model"), py::arg("density"), py::arg("lo") = -6.0, py::arg("hi") = 6.0,
      py::arg("h") = 0.01);

  m.def(
      "evaluate_g",
      [](const GranularMediaModel& model,
         const py::array_t<double, py::array::c_style | py::array::forcecast>& paths,
         double grid_step, double radius, double s, double t) {
        const auto set = paths_from(paths, grid_step);
        const auto g = GFunctional::default_bump(set.d, radius, s, t);
        return evaluate_G(g, set, model.as_mean_field());
      },
      py::arg("model"), py::arg("paths"), py::arg("grid_step"), py::arg("radius") = 3.0,
      py::arg("s") = 0.0, py::arg("t") = 1.0);

  m.def("parse_config", [](const std::string& text) {
    const auto res = parse_config(text);
    py::dict out;
    out["ok"] = res.config.has_value();
    out["errors"] = res.errors;
    out["warnings"] = res.warnings;
    if (res.config) out["canonical"] = render_config(*res.config);
    return out;
  });
}
