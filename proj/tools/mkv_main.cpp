#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "mkv/io.hpp"
#include "mkv/orchestrate.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

mkv::ExperimentConfig load_config_or_die(const std::string& path) {
  const auto parsed = mkv::parse_config_file(path);
  for (const auto& w : parsed.warnings) std::cerr << "warning: " << w << "\n";
  if (!parsed.config) {
    std::cerr << "config " << path << " is invalid:\n";
    for (const auto& e : parsed.errors) std::cerr << "  - " << e << "\n";
    std::exit(1);
  }
  return *parsed.config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mkv: interacting-particle simulation lab for mean-field dynamics"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int threads = 1;
  bool force = false;

  auto add_common = [&](CLI::App* cmd, bool need_config) {
    auto* copt = cmd->add_option("--config", config_path, "experiment config file");
    if (need_config) copt->required();
    cmd->add_option("--out", out_dir, "output directory (overrides output.dir)");
    cmd->add_option("--seed", seed, "seed override")->each([&](const std::string&) {
      seed_set = true;
    });
    cmd->add_option("--threads", threads, "replica-level worker threads");
    cmd->add_flag("--force", force, "allow writing into an existing directory");
  };

  auto* simulate = app.add_subcommand("simulate", "run the full pipeline into a run directory");
  add_common(simulate, true);

  auto* stationary =
      app.add_subcommand("stationary", "compute the stationary reference branches only");
  add_common(stationary, true);

  auto* distance = app.add_subcommand("distance", "Wasserstein distance between two sample files");
  std::string file_a, file_b;
  int p = 2;
  std::ptrdiff_t slice = -1;
  distance->add_option("a", file_a, "first trajectory file (MKVT)")->required();
  distance->add_option("b", file_b, "second trajectory file (MKVT)")->required();
  distance->add_option("--p", p, "order of the distance (1 or 2)");
  distance->add_option("--index", slice, "record index within each file (-1 = last)");

  auto* diagnose = app.add_subcommand("diagnose", "recompute metrics.csv for a run directory");
  std::string run_dir;
  diagnose->add_option("run", run_dir, "run directory")->required();

  auto* ergodic = app.add_subcommand("ergodic", "print the ergodic distance curve as CSV");
  ergodic->add_option("run", run_dir, "run directory")->required();

  auto* report = app.add_subcommand("report", "recompute report.json and print pass/fail");
  report->add_option("run", run_dir, "run directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (simulate->parsed() || stationary->parsed()) {
      const auto cfg = load_config_or_die(config_path);
      mkv::OrchestrateOptions opts;
      if (!out_dir.empty()) opts.out_dir = fs::path(out_dir);
      if (seed_set) opts.seed = seed;
      opts.threads = threads;
      opts.force = force;

      if (stationary->parsed()) {
        const auto branches = mkv::build_reference_branches(cfg);
        const fs::path out = opts.out_dir.value_or(fs::path(cfg.output_dir));
        if (fs::exists(out) && !fs::is_empty(out) && !force) {
          std::cerr << out << " already exists; pass --force to overwrite\n";
          return 1;
        }
        fs::create_directories(out);
        json summary;
        json arr = json::array();
        const auto model = cfg.make_model();
        for (std::size_t i = 0; i < branches.size(); ++i) {
          mkv::write_grid(out / mkv::cat("branch_", i, ".mkvg"), branches[i].grid);
          json j;
          j["file"] = mkv::cat("branch_", i, ".mkvg");
          j["mean"] = branches[i].grid.mean();
          j["variance"] = branches[i].grid.variance();
          j["update_residual"] = branches[i].update_residual;
          j["stationarity_residual"] = mkv::stationarity_residual(branches[i].grid, model);
          j["converged"] = branches[i].converged;
          arr.push_back(j);
        }
        summary["branches"] = arr;
        std::ofstream os(out / "summary.json");
        os << summary.dump(2) << "\n";
        std::cout << summary.dump(2) << "\n";
        return 0;
      }
      return mkv::orchestrate(cfg, opts);
    }

    if (distance->parsed()) {
      const auto mu = mkv::read_trajectory_slice(file_a, slice);
      const auto nu = mkv::read_trajectory_slice(file_b, slice);
      const auto res = mkv::wasserstein(mu, nu, p);
      json j;
      j["w"] = res.distance;
      j["p"] = p;
      j["method"] = res.method == mkv::TransportMethod::quantile_1d
                        ? "quantile_1d"
                        : res.method == mkv::TransportMethod::assignment ? "assignment"
                                                                         : "entropic";
      j["approximate"] = res.approximate;
      if (res.approximate) j["epsilon"] = res.epsilon;
      std::cout << j.dump() << "\n";
      return 0;
    }

    if (diagnose->parsed()) {
      mkv::diagnose_run_dir(run_dir);
      std::cout << "wrote " << (fs::path(run_dir) / "metrics.csv").string() << "\n";
      return 0;
    }

    if (ergodic->parsed()) {
      // rebuild the curve from the persisted run
      const auto cfgdir = fs::path(run_dir);
      mkv::diagnose_run_dir(cfgdir);
      std::ifstream is(cfgdir / "metrics.csv");
      std::cout << is.rdbuf();
      return 0;
    }

    if (report->parsed()) {
      const int code = mkv::report_run_dir(run_dir);
      std::ifstream is(fs::path(run_dir) / "report.json");
      std::cout << is.rdbuf();
      return code;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
