#include "mkv/orchestrate.hpp"

#include <algorithm>
#include <fstream>

#include <json.hpp>

#include "mkv/io.hpp"

namespace mkv {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

GridSpec diagnostics_grid(const ExperimentConfig& cfg) {
  if (cfg.d == 1) return GridSpec::line(cfg.grid_lo, cfg.grid_hi, cfg.grid_h);
  if (cfg.d == 2) return GridSpec::square(cfg.grid_lo, cfg.grid_hi, cfg.grid_h);
  throw GridError(cat("grid diagnostics are restricted to d <= 2, got d=", cfg.d));
}

WeightedSampleMeasure recorded_measure(const TrajectoryStore& store, std::size_t t_idx) {
  Vec pts(store.positions.begin() + static_cast<std::ptrdiff_t>(t_idx * store.n * store.d),
          store.positions.begin() + static_cast<std::ptrdiff_t>((t_idx + 1) * store.n * store.d));
  return WeightedSampleMeasure::uniform(store.d, std::move(pts));
}

json branch_summary(const std::vector<StationaryBranch>& branches,
                    const GranularMediaModel& model) {
  json arr = json::array();
  for (const auto& b : branches) {
    json j;
    j["mean"] = b.grid.mean();
    j["variance"] = b.grid.variance();
    j["update_residual"] = b.update_residual;
    j["iterations"] = b.iterations;
    j["converged"] = b.converged;
    j["stationarity_residual"] = stationarity_residual(b.grid, model);
    arr.push_back(j);
  }
  return arr;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError(cat("cannot open ", path.string(), " for writing"));
  os << text;
  if (!os) throw IoError(cat("write failed on ", path.string()));
}

std::string format_csv_value(const std::optional<double>& v) {
  if (!v) return "";
  std::ostringstream os;
  os.precision(17);
  os << *v;
  return os.str();
}

RunRecord load_run(const fs::path& traj_file, const ExperimentConfig& cfg,
                   std::uint32_t replica) {
  RunRecord rec;
  rec.store = read_trajectory(traj_file);
  rec.store.stride = cfg.record_stride;
  rec.grid = std::make_shared<TimeGrid>(cfg.make_schedule());
  rec.config = cfg.make_run_config();
  rec.config.replica = replica;
  rec.model_desc = cfg.make_model().describe();
  rec.schedule_desc = cfg.make_schedule().describe();
  rec.store.steps.resize(rec.store.times.size());
  for (std::size_t j = 0; j < rec.store.times.size(); ++j)
    rec.store.steps[j] = rec.grid->k_of_t(rec.store.times[j]);
  for (std::size_t j = 0; j < rec.store.times.size(); ++j) {
    const auto mu = recorded_measure(rec.store, j);
    rec.series.push_back({rec.store.steps[j], rec.store.times[j], mu.moment(2), mu.moment(4)});
  }
  return rec;
}

}  // namespace

std::vector<StationaryBranch> build_reference_branches(const ExperimentConfig& cfg) {
  switch (cfg.reference) {
    case ReferenceKind::none:
      return {};
    case ReferenceKind::gaussian: {
      const auto spec = diagnostics_grid(cfg);
      auto ref = gaussian_reference(cfg.lambda, cfg.alpha, cfg.sigma, spec);
      StationaryBranch b;
      b.grid = std::move(ref.grid);
      b.update_residual = 0.0;
      b.iterations = 0;
      b.converged = true;
      return {std::move(b)};
    }
    case ReferenceKind::solve: {
      const auto spec = diagnostics_grid(cfg);
      std::vector<MeasureGrid> inits;
      std::vector<double> means = cfg.solver_init_means;
      if (means.empty()) means = {0.0};
      for (double m : means)
        inits.push_back(gaussian_on_grid(spec, Vec(cfg.d, m), cfg.solver_init_variance));
      return enumerate_branches(cfg.make_model(), spec, inits, cfg.solver_damping, cfg.solver_tol,
                                cfg.solver_max_iter);
    }
  }
  throw Error("unreachable");
}

std::vector<MetricsRow> compute_metrics(const RunRecord& run, const ExperimentConfig& cfg,
                                        const std::vector<WeightedSampleMeasure>& refs) {
  const auto& store = run.store;
  const std::size_t rows = store.times.size();
  std::vector<MetricsRow> out(rows);

  const bool want_distance = cfg.instruments.count(Instrument::distance) && !refs.empty();
  const bool want_ergodic = cfg.instruments.count(Instrument::ergodic) && !refs.empty();
  const bool want_energy = cfg.instruments.count(Instrument::energy) && cfg.d <= 2;
  const bool want_residual = cfg.instruments.count(Instrument::residual) && cfg.d <= 2;
  const bool want_g = cfg.instruments.count(Instrument::gvalue);

  for (std::size_t j = 0; j < rows; ++j) {
    out[j].k = store.steps[j];
    out[j].tau = store.times[j];
    const auto mu = recorded_measure(store, j);
    out[j].m2 = mu.moment(2);
    out[j].m4 = mu.moment(4);
  }

  if (want_distance || want_ergodic) {
    const auto curve = ergodic_distance_curve(run, refs, 2);
    for (std::size_t j = 0; j < rows; ++j) {
      if (want_distance) out[j].w2_ref = curve[j].distance;
      if (want_ergodic) out[j].wp_erg = curve[j].average;
    }
  }

  if (want_energy || want_residual) {
    const auto spec = diagnostics_grid(cfg);
    const auto model = cfg.make_model();
    for (std::size_t j = 0; j < rows; ++j) {
      const auto density = estimate_density(recorded_measure(store, j), spec);
      if (want_energy) {
        const auto H = helmholtz(density, model);
        out[j].helmholtz_F = H.entropy;
        out[j].helmholtz_V = H.confinement;
        out[j].helmholtz_U = H.interaction;
        out[j].helmholtz_H = H.total;
      }
      if (want_residual) out[j].residual = stationarity_residual(density.grid, model);
    }
  }

  if (want_g) {
    // the path functional is quadratic in n; evaluate on a thinned subset
    const auto model = cfg.make_model().as_mean_field();
    const std::size_t budget = 16;
    const std::size_t every = std::max<std::size_t>(1, rows / budget);
    const double grid_step = cfg.g_window / 64.0;
    const GFunctional g = GFunctional::default_bump(cfg.d, cfg.g_radius, 0.0, cfg.g_window);
    for (std::size_t j = 0; j < rows; j += every) {
      const double t0 = store.times[j];
      if (t0 + cfg.g_window > store.t_max()) break;
      const auto paths = path_sample(store, t0, cfg.g_window, grid_step);
      out[j].g_value = evaluate_G(g, paths, model);
    }
  }
  return out;
}

void write_metrics_csv(const fs::path& path, const std::vector<MetricsRow>& rows) {
  std::ostringstream os;
  os << "k,tau,m2,m4,w2_ref,wp_erg,helmholtz_F,helmholtz_V,helmholtz_U,helmholtz_H,residual,"
        "g_value\n";
  os.precision(17);
  for (const auto& r : rows) {
    os << r.k << "," << r.tau << "," << r.m2 << "," << r.m4 << "," << format_csv_value(r.w2_ref)
       << "," << format_csv_value(r.wp_erg) << "," << format_csv_value(r.helmholtz_F) << ","
       << format_csv_value(r.helmholtz_V) << "," << format_csv_value(r.helmholtz_U) << ","
       << format_csv_value(r.helmholtz_H) << "," << format_csv_value(r.residual) << ","
       << format_csv_value(r.g_value) << "\n";
  }
  write_text(path, os.str());
}

int orchestrate(const ExperimentConfig& config, const OrchestrateOptions& opts) {
  ExperimentConfig cfg = config;
  if (opts.seed) cfg.seed = *opts.seed;
  const fs::path out = opts.out_dir.value_or(fs::path(cfg.output_dir));

  if (fs::exists(out) && !fs::is_empty(out) && !opts.force)
    throw IoError(cat(out.string(), " already exists; pass --force to overwrite"));
  fs::create_directories(out);

  const auto model = cfg.make_model();
  const auto schedule = cfg.make_schedule();

  json manifest;
  manifest["version"] = MKV_VERSION;
  manifest["seed"] = cfg.seed;
  manifest["model"] = model.describe();
  manifest["schedule"] = schedule.describe();
  manifest["replicas"] = cfg.replicas;
  manifest["config"] = render_config(cfg);

  // reference branches first: runs measure against them
  std::vector<StationaryBranch> branches;
  std::vector<WeightedSampleMeasure> refs;
  if (cfg.reference != ReferenceKind::none) {
    branches = build_reference_branches(cfg);
    const fs::path sdir = out / "stationary";
    fs::create_directories(sdir);
    for (std::size_t i = 0; i < branches.size(); ++i)
      write_grid(sdir / cat("branch_", i, ".mkvg"), branches[i].grid);
    json summary;
    summary["branches"] = branch_summary(branches, model);
    write_text(sdir / "summary.json", summary.dump(2) + "\n");
    for (const auto& b : branches) refs.push_back(b.grid.to_weighted_sample(1e-300));
  }

  RunConfig base = cfg.make_run_config();
  const auto runs = run_replicas(model, schedule, base, cfg.replicas, opts.threads);

  bool any_failed = false;
  json per_replica = json::array();
  for (std::size_t r = 0; r < runs.size(); ++r) {
    const fs::path rdir = out / cat("replica_", r);
    fs::create_directories(rdir);
    write_trajectory(rdir / "trajectory.bin", runs[r].store);
    json j;
    j["replica"] = r;
    j["failed"] = runs[r].failed();
    if (runs[r].failed()) {
      j["error"] = *runs[r].error;
      any_failed = true;
    }
    j["final_k"] = runs[r].store.steps.back();
    j["final_tau"] = runs[r].store.times.back();
    per_replica.push_back(j);
  }

  // diagnostics on replica 0
  const auto metrics = compute_metrics(runs[0], cfg, refs);
  write_metrics_csv(out / "metrics.csv", metrics);

  // report: final distances per replica, branch summaries, threshold checks
  json report;
  report["version"] = MKV_VERSION;
  report["model"] = model.describe();
  if (!branches.empty()) report["branches"] = branch_summary(branches, model);
  json checks = json::array();
  double mean_final_distance = 0.0;
  double mean_ergodic_final = 0.0;
  if (!refs.empty()) {
    for (std::size_t r = 0; r < runs.size(); ++r) {
      const auto curve = ergodic_distance_curve(runs[r], refs, 2);
      per_replica[r]["final_distance"] = curve.back().distance;
      per_replica[r]["ergodic_final"] = curve.back().average;
      mean_final_distance += curve.back().distance;
      mean_ergodic_final += curve.back().average;
    }
    mean_final_distance /= static_cast<double>(runs.size());
    mean_ergodic_final /= static_cast<double>(runs.size());
    report["mean_final_distance"] = mean_final_distance;
    report["mean_ergodic_final"] = mean_ergodic_final;
    if (cfg.threshold_final_distance) {
      json c;
      c["name"] = "final_distance";
      c["value"] = mean_final_distance;
      c["threshold"] = *cfg.threshold_final_distance;
      c["pass"] = mean_final_distance <= *cfg.threshold_final_distance;
      checks.push_back(c);
    }
    if (cfg.threshold_ergodic_final) {
      json c;
      c["name"] = "ergodic_final";
      c["value"] = mean_ergodic_final;
      c["threshold"] = *cfg.threshold_ergodic_final;
      c["pass"] = mean_ergodic_final <= *cfg.threshold_ergodic_final;
      checks.push_back(c);
    }
  }
  // last computed path-functional value, when enabled
  for (auto it = metrics.rbegin(); it != metrics.rend(); ++it)
    if (it->g_value) {
      report["g_final"] = *it->g_value;
      break;
    }
  report["replica"] = per_replica;
  bool all_pass = !any_failed;
  for (const auto& c : checks)
    if (!c["pass"].get<bool>()) all_pass = false;
  report["checks"] = checks;
  report["pass"] = all_pass;
  write_text(out / "report.json", report.dump(2) + "\n");

  manifest["status"] = any_failed ? "failed" : "ok";
  json files = json::object();
  for (const auto& entry : fs::recursive_directory_iterator(out)) {
    if (!entry.is_regular_file()) continue;
    if (entry.path().filename() == "manifest.json") continue;
    files[fs::relative(entry.path(), out).generic_string()] = file_checksum(entry.path());
  }
  manifest["files"] = files;
  write_text(out / "manifest.json", manifest.dump(2) + "\n");

  if (any_failed) return 1;
  if (!all_pass) return 2;
  return 0;
}

namespace {

ExperimentConfig config_from_manifest(const fs::path& dir) {
  std::ifstream is(dir / "manifest.json");
  if (!is) throw IoError(cat("cannot open ", (dir / "manifest.json").string()));
  json manifest = json::parse(is);
  const auto parsed = parse_config(manifest["config"].get<std::string>());
  if (!parsed.config) throw Error(cat("manifest config does not parse: ", parsed.errors.front()));
  return *parsed.config;
}

std::vector<WeightedSampleMeasure> load_reference_samples(const fs::path& dir,
                                                          const ExperimentConfig& cfg) {
  std::vector<WeightedSampleMeasure> refs;
  const fs::path sdir = dir / "stationary";
  if (fs::exists(sdir)) {
    std::vector<fs::path> paths;
    for (const auto& entry : fs::directory_iterator(sdir))
      if (entry.path().extension() == ".mkvg") paths.push_back(entry.path());
    std::sort(paths.begin(), paths.end());
    for (const auto& p : paths) refs.push_back(read_grid(p).to_weighted_sample(1e-300));
  } else if (cfg.reference != ReferenceKind::none) {
    for (const auto& b : build_reference_branches(cfg))
      refs.push_back(b.grid.to_weighted_sample(1e-300));
  }
  return refs;
}

}  // namespace

void diagnose_run_dir(const fs::path& dir) {
  const ExperimentConfig cfg = config_from_manifest(dir);
  const auto refs = load_reference_samples(dir, cfg);
  const RunRecord run = load_run(dir / "replica_0" / "trajectory.bin", cfg, 0);
  write_metrics_csv(dir / "metrics.csv", compute_metrics(run, cfg, refs));
}

int report_run_dir(const fs::path& dir) {
  const ExperimentConfig cfg = config_from_manifest(dir);
  const auto refs = load_reference_samples(dir, cfg);
  json report;
  report["version"] = MKV_VERSION;
  json per_replica = json::array();
  json checks = json::array();
  double mean_final_distance = 0.0, mean_ergodic_final = 0.0;
  std::size_t replica_count = 0;
  bool all_pass = true;
  for (std::size_t r = 0;; ++r) {
    const fs::path traj = dir / cat("replica_", r) / "trajectory.bin";
    if (!fs::exists(traj)) break;
    const RunRecord run = load_run(traj, cfg, static_cast<std::uint32_t>(r));
    json j;
    j["replica"] = r;
    j["final_k"] = run.store.steps.back();
    j["final_tau"] = run.store.times.back();
    if (!refs.empty()) {
      const auto curve = ergodic_distance_curve(run, refs, 2);
      j["final_distance"] = curve.back().distance;
      j["ergodic_final"] = curve.back().average;
      mean_final_distance += curve.back().distance;
      mean_ergodic_final += curve.back().average;
    }
    per_replica.push_back(j);
    ++replica_count;
  }
  if (replica_count == 0) throw IoError(cat("no replica_*/trajectory.bin under ", dir.string()));
  if (!refs.empty()) {
    mean_final_distance /= static_cast<double>(replica_count);
    mean_ergodic_final /= static_cast<double>(replica_count);
    report["mean_final_distance"] = mean_final_distance;
    report["mean_ergodic_final"] = mean_ergodic_final;
    if (cfg.threshold_final_distance) {
      const bool pass = mean_final_distance <= *cfg.threshold_final_distance;
      checks.push_back({{"name", "final_distance"},
                        {"value", mean_final_distance},
                        {"threshold", *cfg.threshold_final_distance},
                        {"pass", pass}});
      all_pass = all_pass && pass;
    }
    if (cfg.threshold_ergodic_final) {
      const bool pass = mean_ergodic_final <= *cfg.threshold_ergodic_final;
      checks.push_back({{"name", "ergodic_final"},
                        {"value", mean_ergodic_final},
                        {"threshold", *cfg.threshold_ergodic_final},
                        {"pass", pass}});
      all_pass = all_pass && pass;
    }
  }
  report["replica"] = per_replica;
  report["checks"] = checks;
  report["pass"] = all_pass;
  write_text(dir / "report.json", report.dump(2) + "\n");
  return all_pass ? 0 : 2;
}

}  // namespace mkv
