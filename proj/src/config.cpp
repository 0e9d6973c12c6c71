#include "mkv/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace mkv {

namespace {

const std::vector<std::string>& known_keys() {
  static const std::vector<std::string> keys = {
      "model.kind", "model.lambda", "model.alpha", "model.kernel_width", "model.sigma",
      "schedule.kind", "schedule.gamma0", "schedule.exponent", "schedule.table",
      "run.n", "run.d", "run.horizon_tau", "run.steps", "run.replicas", "run.seed",
      "run.init.kind", "run.init.scale", "run.init.center", "run.record.stride",
      "noise.zeta", "noise.bias.scale", "noise.bias.exponent", "noise.bias.vector",
      "diagnostics.instruments", "diagnostics.reference",
      "diagnostics.grid.lo", "diagnostics.grid.hi", "diagnostics.grid.h",
      "diagnostics.g.radius", "diagnostics.g.window",
      "diagnostics.solver.damping", "diagnostics.solver.tol", "diagnostics.solver.max_iter",
      "diagnostics.solver.init_means", "diagnostics.solver.init_variance",
      "thresholds.final_distance", "thresholds.ergodic_final",
      "output.dir",
  };
  return keys;
}

std::size_t edit_distance(const std::string& a, const std::string& b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

std::string nearest_key(const std::string& key) {
  std::size_t best = static_cast<std::size_t>(-1);
  std::string best_key;
  for (const auto& k : known_keys()) {
    const std::size_t dist = edit_distance(key, k);
    if (dist < best) {
      best = dist;
      best_key = k;
    }
  }
  return best_key;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<double> parse_double_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    std::size_t pos = 0;
    const double v = std::stod(item, &pos);
    if (pos != item.size()) throw Error(cat("bad number '", item, "'"));
    out.push_back(v);
  }
  return out;
}

std::string render_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

std::string render_list(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i > 0) s += ",";
    s += render_double(v[i]);
  }
  return s;
}

const std::map<std::string, Instrument>& instrument_names() {
  static const std::map<std::string, Instrument> names = {
      {"distance", Instrument::distance}, {"ergodic", Instrument::ergodic},
      {"energy", Instrument::energy},     {"residual", Instrument::residual},
      {"gvalue", Instrument::gvalue},
  };
  return names;
}

}  // namespace

ConfigParseResult parse_config(const std::string& text) {
  ConfigParseResult result;
  auto& errors = result.errors;

  std::map<std::string, std::string> kv;
  std::istringstream is(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      errors.push_back(cat("line ", lineno, ": expected 'key = value'"));
      continue;
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (std::find(known_keys().begin(), known_keys().end(), key) == known_keys().end()) {
      errors.push_back(cat("line ", lineno, ": unknown key '", key, "' (did you mean '",
                           nearest_key(key), "'?)"));
      continue;
    }
    if (kv.count(key)) errors.push_back(cat("line ", lineno, ": duplicate key '", key, "'"));
    kv[key] = value;
  }

  ExperimentConfig cfg;
  auto take = [&](const char* key) -> std::optional<std::string> {
    auto it = kv.find(key);
    if (it == kv.end()) return std::nullopt;
    return it->second;
  };
  auto take_double = [&](const char* key, double& dst) {
    if (auto v = take(key)) {
      try {
        std::size_t pos = 0;
        dst = std::stod(*v, &pos);
        if (pos != v->size()) throw Error("");
      } catch (...) {
        errors.push_back(cat(key, ": '", *v, "' is not a number"));
      }
    }
  };
  auto take_size = [&](const char* key, std::size_t& dst) {
    if (auto v = take(key)) {
      try {
        const long long x = std::stoll(*v);
        if (x < 0) throw Error("");
        dst = static_cast<std::size_t>(x);
      } catch (...) {
        errors.push_back(cat(key, ": '", *v, "' is not a nonnegative integer"));
      }
    }
  };

  if (auto v = take("model.kind")) {
    if (*v == "quadratic") cfg.model_kind = ModelKind::quadratic;
    else if (*v == "double_well") cfg.model_kind = ModelKind::double_well;
    else if (*v == "gaussian_attraction") cfg.model_kind = ModelKind::gaussian_attraction;
    else errors.push_back(cat("model.kind: unknown kind '", *v,
                              "' (quadratic | double_well | gaussian_attraction)"));
  }
  take_double("model.lambda", cfg.lambda);
  take_double("model.alpha", cfg.alpha);
  take_double("model.kernel_width", cfg.kernel_width);
  take_double("model.sigma", cfg.sigma);

  if (auto v = take("schedule.kind")) {
    if (*v == "power_law") cfg.schedule_kind = ScheduleKind::power_law;
    else if (*v == "constant") cfg.schedule_kind = ScheduleKind::constant;
    else if (*v == "table") cfg.schedule_kind = ScheduleKind::table;
    else errors.push_back(cat("schedule.kind: unknown kind '", *v,
                              "' (power_law | constant | table)"));
  }
  take_double("schedule.gamma0", cfg.gamma0);
  take_double("schedule.exponent", cfg.exponent);
  if (auto v = take("schedule.table")) {
    try {
      cfg.table = parse_double_list(*v);
    } catch (const Error& e) {
      errors.push_back(cat("schedule.table: ", e.what()));
    }
  }

  take_size("run.n", cfg.n);
  take_size("run.d", cfg.d);
  if (auto v = take("run.horizon_tau")) {
    try {
      cfg.horizon_tau = std::stod(*v);
    } catch (...) {
      errors.push_back(cat("run.horizon_tau: '", *v, "' is not a number"));
    }
  }
  if (auto v = take("run.steps")) {
    try {
      const long long x = std::stoll(*v);
      if (x < 0) throw Error("");
      cfg.steps = static_cast<std::size_t>(x);
    } catch (...) {
      errors.push_back(cat("run.steps: '", *v, "' is not a nonnegative integer"));
    }
  }
  take_size("run.replicas", cfg.replicas);
  if (auto v = take("run.seed")) {
    try {
      cfg.seed = std::stoull(*v);
    } catch (...) {
      errors.push_back(cat("run.seed: '", *v, "' is not an unsigned integer"));
    }
  }
  if (auto v = take("run.init.kind")) {
    if (*v == "gaussian") cfg.init.kind = InitKind::gaussian;
    else if (*v == "uniform_box") cfg.init.kind = InitKind::uniform_box;
    else if (*v == "point") cfg.init.kind = InitKind::point;
    else errors.push_back(cat("run.init.kind: unknown kind '", *v,
                              "' (gaussian | uniform_box | point)"));
  }
  take_double("run.init.scale", cfg.init.scale);
  if (auto v = take("run.init.center")) {
    try {
      cfg.init.point = parse_double_list(*v);
    } catch (const Error& e) {
      errors.push_back(cat("run.init.center: ", e.what()));
    }
  }
  take_size("run.record.stride", cfg.record_stride);

  if (auto v = take("noise.zeta")) {
    if (*v == "zero") cfg.noise.zeta_kind = ZetaKind::zero;
    else if (*v == "vanishing_bias") cfg.noise.zeta_kind = ZetaKind::vanishing_bias;
    else errors.push_back(cat("noise.zeta: unknown kind '", *v, "' (zero | vanishing_bias)"));
  }
  take_double("noise.bias.scale", cfg.noise.bias_scale);
  take_double("noise.bias.exponent", cfg.noise.bias_exponent);
  if (auto v = take("noise.bias.vector")) {
    try {
      cfg.noise.bias_vector = parse_double_list(*v);
    } catch (const Error& e) {
      errors.push_back(cat("noise.bias.vector: ", e.what()));
    }
  }

  if (auto v = take("diagnostics.instruments")) {
    std::stringstream ss(*v);
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      if (item.empty()) continue;
      auto it = instrument_names().find(item);
      if (it == instrument_names().end())
        errors.push_back(cat("diagnostics.instruments: unknown instrument '", item, "'"));
      else
        cfg.instruments.insert(it->second);
    }
  }
  if (auto v = take("diagnostics.reference")) {
    if (*v == "none") cfg.reference = ReferenceKind::none;
    else if (*v == "gaussian") cfg.reference = ReferenceKind::gaussian;
    else if (*v == "solve") cfg.reference = ReferenceKind::solve;
    else errors.push_back(cat("diagnostics.reference: unknown kind '", *v,
                              "' (none | gaussian | solve)"));
  }
  take_double("diagnostics.grid.lo", cfg.grid_lo);
  take_double("diagnostics.grid.hi", cfg.grid_hi);
  take_double("diagnostics.grid.h", cfg.grid_h);
  take_double("diagnostics.g.radius", cfg.g_radius);
  take_double("diagnostics.g.window", cfg.g_window);
  take_double("diagnostics.solver.damping", cfg.solver_damping);
  take_double("diagnostics.solver.tol", cfg.solver_tol);
  take_size("diagnostics.solver.max_iter", cfg.solver_max_iter);
  if (auto v = take("diagnostics.solver.init_means")) {
    try {
      cfg.solver_init_means = parse_double_list(*v);
    } catch (const Error& e) {
      errors.push_back(cat("diagnostics.solver.init_means: ", e.what()));
    }
  }
  take_double("diagnostics.solver.init_variance", cfg.solver_init_variance);

  if (auto v = take("thresholds.final_distance")) {
    try {
      cfg.threshold_final_distance = std::stod(*v);
    } catch (...) {
      errors.push_back(cat("thresholds.final_distance: '", *v, "' is not a number"));
    }
  }
  if (auto v = take("thresholds.ergodic_final")) {
    try {
      cfg.threshold_ergodic_final = std::stod(*v);
    } catch (...) {
      errors.push_back(cat("thresholds.ergodic_final: '", *v, "' is not a number"));
    }
  }
  if (auto v = take("output.dir")) cfg.output_dir = *v;

  // cross-field validation: collect everything, fail at the end
  if (cfg.n < 1) errors.push_back("run.n must be >= 1");
  if (cfg.d < 1) errors.push_back("run.d must be >= 1");
  if (cfg.replicas < 1) errors.push_back("run.replicas must be >= 1");
  if (cfg.record_stride < 1) errors.push_back("run.record.stride must be >= 1");
  if (cfg.horizon_tau && cfg.steps)
    errors.push_back("run.horizon_tau and run.steps are mutually exclusive; set exactly one");
  if (!cfg.horizon_tau && !cfg.steps)
    errors.push_back("one of run.horizon_tau / run.steps must be set");
  if (cfg.horizon_tau && !(*cfg.horizon_tau > 0.0))
    errors.push_back("run.horizon_tau must be positive");
  if (cfg.schedule_kind == ScheduleKind::power_law &&
      !(cfg.exponent > 0.0 && cfg.exponent <= 1.0))
    errors.push_back(cat("schedule.exponent = ", cfg.exponent,
                         " rejected: a power-law step sequence needs an exponent in (0,1] so the "
                         "steps vanish while their partial sums diverge"));
  if (!(cfg.gamma0 > 0.0)) errors.push_back("schedule.gamma0 must be positive");
  if (cfg.schedule_kind == ScheduleKind::table && cfg.table.empty())
    errors.push_back("schedule.table must list at least one positive step");
  for (double g : cfg.table)
    if (!(g > 0.0)) errors.push_back(cat("schedule.table entry ", g, " must be positive"));
  if (cfg.model_kind != ModelKind::double_well && !(cfg.lambda > 0.0))
    errors.push_back("model.lambda must be positive for quadratic confinement");
  if (!(cfg.kernel_width > 0.0)) errors.push_back("model.kernel_width must be positive");
  if (cfg.sigma < 0.0) errors.push_back("model.sigma must be nonnegative");
  if (cfg.reference == ReferenceKind::gaussian && cfg.model_kind != ModelKind::quadratic)
    errors.push_back(
        "diagnostics.reference = gaussian has a closed form only for model.kind = quadratic; "
        "use 'solve'");
  if ((cfg.instruments.count(Instrument::energy) || cfg.instruments.count(Instrument::residual)) &&
      cfg.d > 2)
    errors.push_back("energy/residual instruments are restricted to d <= 2");
  if (!(cfg.grid_hi > cfg.grid_lo) || !(cfg.grid_h > 0.0))
    errors.push_back("diagnostics.grid must satisfy lo < hi and h > 0");
  if (!(cfg.solver_damping > 0.0 && cfg.solver_damping <= 1.0))
    errors.push_back("diagnostics.solver.damping must lie in (0,1]");

  // stability advisory, not an error: the theory never fixes gamma_1's scale
  double stiffness = 0.0;
  switch (cfg.model_kind) {
    case ModelKind::quadratic: stiffness = cfg.lambda + std::fabs(cfg.alpha); break;
    case ModelKind::double_well: stiffness = 2.0 + std::fabs(cfg.alpha); break;
    case ModelKind::gaussian_attraction:
      stiffness = cfg.lambda + 1.0 / (cfg.kernel_width * cfg.kernel_width);
      break;
  }
  if (cfg.gamma0 * stiffness > 1.0)
    result.warnings.push_back(cat("schedule.gamma0 = ", cfg.gamma0,
                                  " is large for this model's drift stiffness (~", stiffness,
                                  "); early iterates may be unstable"));

  if (errors.empty()) result.config = cfg;
  return result;
}

ConfigParseResult parse_config_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) {
    ConfigParseResult r;
    r.errors.push_back(cat("cannot open config file ", path));
    return r;
  }
  std::ostringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str());
}

std::string render_config(const ExperimentConfig& c) {
  std::ostringstream os;
  os << "model.kind = "
     << (c.model_kind == ModelKind::quadratic
             ? "quadratic"
             : c.model_kind == ModelKind::double_well ? "double_well" : "gaussian_attraction")
     << "\n";
  os << "model.lambda = " << render_double(c.lambda) << "\n";
  os << "model.alpha = " << render_double(c.alpha) << "\n";
  os << "model.kernel_width = " << render_double(c.kernel_width) << "\n";
  os << "model.sigma = " << render_double(c.sigma) << "\n";
  os << "schedule.kind = "
     << (c.schedule_kind == ScheduleKind::power_law
             ? "power_law"
             : c.schedule_kind == ScheduleKind::constant ? "constant" : "table")
     << "\n";
  os << "schedule.gamma0 = " << render_double(c.gamma0) << "\n";
  os << "schedule.exponent = " << render_double(c.exponent) << "\n";
  if (!c.table.empty()) os << "schedule.table = " << render_list(c.table) << "\n";
  os << "run.n = " << c.n << "\n";
  os << "run.d = " << c.d << "\n";
  if (c.horizon_tau) os << "run.horizon_tau = " << render_double(*c.horizon_tau) << "\n";
  if (c.steps) os << "run.steps = " << *c.steps << "\n";
  os << "run.replicas = " << c.replicas << "\n";
  os << "run.seed = " << c.seed << "\n";
  os << "run.init.kind = "
     << (c.init.kind == InitKind::gaussian
             ? "gaussian"
             : c.init.kind == InitKind::uniform_box ? "uniform_box" : "point")
     << "\n";
  os << "run.init.scale = " << render_double(c.init.scale) << "\n";
  if (!c.init.point.empty()) os << "run.init.center = " << render_list(c.init.point) << "\n";
  os << "run.record.stride = " << c.record_stride << "\n";
  os << "noise.zeta = " << (c.noise.zeta_kind == ZetaKind::zero ? "zero" : "vanishing_bias")
     << "\n";
  os << "noise.bias.scale = " << render_double(c.noise.bias_scale) << "\n";
  os << "noise.bias.exponent = " << render_double(c.noise.bias_exponent) << "\n";
  if (!c.noise.bias_vector.empty())
    os << "noise.bias.vector = " << render_list(c.noise.bias_vector) << "\n";
  if (!c.instruments.empty()) {
    os << "diagnostics.instruments = ";
    bool first = true;
    for (const auto& [name, inst] : instrument_names()) {
      if (!c.instruments.count(inst)) continue;
      if (!first) os << ",";
      os << name;
      first = false;
    }
    os << "\n";
  }
  os << "diagnostics.reference = "
     << (c.reference == ReferenceKind::none
             ? "none"
             : c.reference == ReferenceKind::gaussian ? "gaussian" : "solve")
     << "\n";
  os << "diagnostics.grid.lo = " << render_double(c.grid_lo) << "\n";
  os << "diagnostics.grid.hi = " << render_double(c.grid_hi) << "\n";
  os << "diagnostics.grid.h = " << render_double(c.grid_h) << "\n";
  os << "diagnostics.g.radius = " << render_double(c.g_radius) << "\n";
  os << "diagnostics.g.window = " << render_double(c.g_window) << "\n";
  os << "diagnostics.solver.damping = " << render_double(c.solver_damping) << "\n";
  os << "diagnostics.solver.tol = " << render_double(c.solver_tol) << "\n";
  os << "diagnostics.solver.max_iter = " << c.solver_max_iter << "\n";
  if (!c.solver_init_means.empty())
    os << "diagnostics.solver.init_means = " << render_list(c.solver_init_means) << "\n";
  os << "diagnostics.solver.init_variance = " << render_double(c.solver_init_variance) << "\n";
  if (c.threshold_final_distance)
    os << "thresholds.final_distance = " << render_double(*c.threshold_final_distance) << "\n";
  if (c.threshold_ergodic_final)
    os << "thresholds.ergodic_final = " << render_double(*c.threshold_ergodic_final) << "\n";
  os << "output.dir = " << c.output_dir << "\n";
  return os.str();
}

GranularMediaModel ExperimentConfig::make_model() const {
  switch (model_kind) {
    case ModelKind::quadratic:
      return quadratic_model(lambda, alpha, sigma, d);
    case ModelKind::double_well:
      return double_well_model(alpha, sigma, d);
    case ModelKind::gaussian_attraction:
      return gaussian_attraction_model(lambda, kernel_width, sigma, d);
  }
  throw Error("unreachable");
}

StepSchedule ExperimentConfig::make_schedule() const {
  switch (schedule_kind) {
    case ScheduleKind::power_law:
      return StepSchedule::power_law(gamma0, exponent);
    case ScheduleKind::constant:
      return StepSchedule::constant(gamma0);
    case ScheduleKind::table:
      return StepSchedule::table(table);
  }
  throw Error("unreachable");
}

RunConfig ExperimentConfig::make_run_config() const {
  RunConfig rc;
  rc.n = n;
  rc.d = d;
  rc.seed = seed;
  rc.horizon_tau = horizon_tau;
  rc.steps = steps;
  rc.init = init;
  rc.noise = noise;
  rc.record_stride = record_stride;
  return rc;
}

}  // namespace mkv
