#include "ahr/config.hpp"

#include "ahr/error.hpp"
#include "ahr/text.hpp"

#include <cmath>
#include <functional>
#include <map>

namespace ahr {

std::string to_string(Estimator e) { return e == Estimator::ahr ? "ahr" : "lasso"; }

Estimator parse_estimator(const std::string& name) {
  if (name == "ahr") return Estimator::ahr;
  if (name == "lasso") return Estimator::lasso;
  throw InvalidInput("unknown estimator '" + name + "' (expected ahr or lasso)");
}

std::string to_string(DesignKind k) {
  switch (k) {
    case DesignKind::gaussian: return "gaussian";
    case DesignKind::indicator: return "indicator";
    case DesignKind::constant: return "constant";
  }
  return "unknown";
}

DesignKind parse_design(const std::string& name) {
  if (name == "gaussian") return DesignKind::gaussian;
  if (name == "indicator") return DesignKind::indicator;
  if (name == "constant") return DesignKind::constant;
  throw InvalidInput("unknown design '" + name + "'");
}

std::size_t SweepConfig::state_count() const {
  switch (design) {
    case DesignKind::gaussian: return m > 0 ? m : 5 * d;
    case DesignKind::indicator: return d;
    case DesignKind::constant: return 1;
  }
  return m;
}

void SweepConfig::validate() const {
  if (n_grid.empty()) throw InvalidInput("config: n_grid must be nonempty");
  for (auto n : n_grid) {
    if (n < 1) throw InvalidInput("config: n_grid entries must be >= 1");
  }
  if (d < 2) throw InvalidInput("config: d must be >= 2");
  if (s < 1 || s > d) throw InvalidInput("config: s must lie in [1, d]");
  if (delta_list.empty() || gamma_list.empty()) {
    throw InvalidInput("config: delta_list and gamma_list must be nonempty");
  }
  for (double delta : delta_list) {
    if (!(delta > 0.0)) throw InvalidInput("config: delta values must be > 0");
  }
  for (double g : gamma_list) {
    if (!(g >= 0.0 && g < 1.0)) throw InvalidInput("config: gamma values must lie in [0, 1)");
  }
  if (replicates < 1) throw InvalidInput("config: replicates must be >= 1");
  if (estimators.empty()) throw InvalidInput("config: estimators must be nonempty");
  if (!(c_tau > 0.0) || !(c_lambda > 0.0)) throw InvalidInput("config: c_tau and c_lambda must be > 0");
  if (design != DesignKind::gaussian && m != 0 && m != state_count()) {
    throw InvalidInput("config: m is fixed by design '" + to_string(design) + "'");
  }
  if (!(scale >= 0.0) || !(heteroskedasticity >= 0.0)) {
    throw InvalidInput("config: scale and heteroskedasticity must be >= 0");
  }
  if (!(lre_radius > 0.0)) throw InvalidInput("config: lre_radius must be > 0");
  solver.validate();
  // Every (family, delta) pair must have a finite moment.
  for (double delta : delta_list) {
    ErrorModel probe(family, family_shape, Vector::Ones(1), delta);
    (void)probe;
  }
}

namespace {

std::vector<std::size_t> parse_size_list(const std::string& v, const char* what) {
  std::vector<std::size_t> out;
  for (const auto& item : text::split(v, ',')) {
    out.push_back(static_cast<std::size_t>(text::parse_uint(item, what)));
  }
  return out;
}

bool parse_bool(const std::string& v, const char* what) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw InvalidInput(std::string(what) + ": expected a boolean, got '" + v + "'");
}

// "student-t(5)" -> (student_t, 5)
void parse_family(const std::string& v, SweepConfig& cfg) {
  const auto open = v.find('(');
  if (open == std::string::npos) {
    cfg.family = parse_error_family(std::string(text::trim(v)));
    return;
  }
  const auto close = v.find(')', open);
  if (close == std::string::npos) throw InvalidInput("family: missing ')' in '" + v + "'");
  cfg.family = parse_error_family(std::string(text::trim(std::string_view(v).substr(0, open))));
  cfg.family_shape = text::parse_real(std::string_view(v).substr(open + 1, close - open - 1), "family");
}

std::string join(const std::vector<double>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? "," : "") + text::format_real(xs[i]);
  return out;
}

}  // namespace

SweepConfig parse_sweep_config(const Metadata& entries) {
  SweepConfig cfg;
  using Setter = std::function<void(const std::string&)>;
  const std::map<std::string, Setter> setters{
      {"n_grid", [&](const std::string& v) { cfg.n_grid = parse_size_list(v, "n_grid"); }},
      {"d", [&](const std::string& v) { cfg.d = text::parse_uint(v, "d"); }},
      {"s", [&](const std::string& v) { cfg.s = text::parse_uint(v, "s"); }},
      {"delta_list", [&](const std::string& v) { cfg.delta_list = text::parse_real_list(v, "delta_list"); }},
      {"gamma_list", [&](const std::string& v) { cfg.gamma_list = text::parse_real_list(v, "gamma_list"); }},
      {"replicates", [&](const std::string& v) { cfg.replicates = text::parse_uint(v, "replicates"); }},
      {"family", [&](const std::string& v) { parse_family(v, cfg); }},
      {"alpha", [&](const std::string& v) { cfg.family_shape = text::parse_real(v, "alpha"); }},
      {"nu", [&](const std::string& v) { cfg.family_shape = text::parse_real(v, "nu"); }},
      {"c_tau", [&](const std::string& v) { cfg.c_tau = text::parse_real(v, "c_tau"); }},
      {"c_lambda", [&](const std::string& v) { cfg.c_lambda = text::parse_real(v, "c_lambda"); }},
      {"base_seed", [&](const std::string& v) { cfg.base_seed = text::parse_uint(v, "base_seed"); }},
      {"estimators",
       [&](const std::string& v) {
         cfg.estimators.clear();
         for (const auto& e : text::split(v, ',')) cfg.estimators.push_back(parse_estimator(std::string(text::trim(e))));
       }},
      {"design", [&](const std::string& v) { cfg.design = parse_design(v); }},
      {"m", [&](const std::string& v) { cfg.m = text::parse_uint(v, "m"); }},
      {"beta_value", [&](const std::string& v) { cfg.beta_value = text::parse_real(v, "beta_value"); }},
      {"scale", [&](const std::string& v) { cfg.scale = text::parse_real(v, "scale"); }},
      {"heteroskedasticity",
       [&](const std::string& v) { cfg.heteroskedasticity = text::parse_real(v, "heteroskedasticity"); }},
      {"precondition_threshold",
       [&](const std::string& v) { cfg.precondition_threshold = text::parse_real(v, "precondition_threshold"); }},
      {"timing", [&](const std::string& v) { cfg.timing = parse_bool(v, "timing"); }},
      {"tol", [&](const std::string& v) { cfg.solver.tol = text::parse_real(v, "tol"); }},
      {"max_iter", [&](const std::string& v) { cfg.solver.max_iter = static_cast<int>(text::parse_int(v, "max_iter")); }},
      {"acceleration",
       [&](const std::string& v) {
         if (v == "auto") {
           cfg.solver.acceleration.reset();
         } else {
           cfg.solver.acceleration = parse_bool(v, "acceleration");
         }
       }},
      {"lre_radius", [&](const std::string& v) { cfg.lre_radius = text::parse_real(v, "lre_radius"); }},
      {"lre_directions", [&](const std::string& v) { cfg.lre_directions = text::parse_uint(v, "lre_directions"); }},
      {"lre_centers", [&](const std::string& v) { cfg.lre_centers = text::parse_uint(v, "lre_centers"); }},
      {"bernstein_replicas",
       [&](const std::string& v) { cfg.bernstein_replicas = text::parse_uint(v, "bernstein_replicas"); }},
      {"epsilon_grid", [&](const std::string& v) { cfg.epsilon_grid = text::parse_real_list(v, "epsilon_grid"); }},
  };
  for (const auto& [key, value] : entries) {
    const auto it = setters.find(key);
    if (it == setters.end()) throw InvalidInput("config: unknown key '" + key + "'");
    it->second(value);
  }
  cfg.validate();
  return cfg;
}

SweepConfig load_sweep_config(const std::filesystem::path& path) {
  return parse_sweep_config(read_metadata(path));
}

Metadata to_metadata(const SweepConfig& cfg) {
  Metadata m;
  std::string n_grid;
  for (std::size_t i = 0; i < cfg.n_grid.size(); ++i) n_grid += (i ? "," : "") + std::to_string(cfg.n_grid[i]);
  m["n_grid"] = n_grid;
  m["d"] = std::to_string(cfg.d);
  m["s"] = std::to_string(cfg.s);
  m["delta_list"] = join(cfg.delta_list);
  m["gamma_list"] = join(cfg.gamma_list);
  m["replicates"] = std::to_string(cfg.replicates);
  m["family"] = cfg.family == ErrorFamily::gaussian
                    ? to_string(cfg.family)
                    : to_string(cfg.family) + "(" + text::format_real(cfg.family_shape) + ")";
  m["c_tau"] = text::format_real(cfg.c_tau);
  m["c_lambda"] = text::format_real(cfg.c_lambda);
  m["base_seed"] = std::to_string(cfg.base_seed);
  std::string est;
  for (std::size_t i = 0; i < cfg.estimators.size(); ++i) est += (i ? "," : "") + to_string(cfg.estimators[i]);
  m["estimators"] = est;
  m["design"] = to_string(cfg.design);
  m["m"] = std::to_string(cfg.m);
  m["beta_value"] = text::format_real(cfg.beta_value);
  m["scale"] = text::format_real(cfg.scale);
  m["heteroskedasticity"] = text::format_real(cfg.heteroskedasticity);
  m["precondition_threshold"] = text::format_real(cfg.precondition_threshold);
  m["timing"] = cfg.timing ? "true" : "false";
  m["tol"] = text::format_real(cfg.solver.tol);
  m["max_iter"] = std::to_string(cfg.solver.max_iter);
  m["acceleration"] = cfg.solver.acceleration ? (*cfg.solver.acceleration ? "true" : "false") : "auto";
  m["lre_radius"] = text::format_real(cfg.lre_radius);
  m["lre_directions"] = std::to_string(cfg.lre_directions);
  m["lre_centers"] = std::to_string(cfg.lre_centers);
  m["bernstein_replicas"] = std::to_string(cfg.bernstein_replicas);
  m["epsilon_grid"] = join(cfg.epsilon_grid);
  return m;
}

}  // namespace ahr
