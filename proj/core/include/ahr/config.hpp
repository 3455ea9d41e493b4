#pragma once

#include "ahr/dataset_io.hpp"
#include "ahr/markov.hpp"
#include "ahr/solver.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace ahr {

enum class Estimator { ahr, lasso };

std::string to_string(Estimator e);
Estimator parse_estimator(const std::string& name);

/// How covariates are generated from chain states.
///   gaussian:  m states, i.i.d. N(0,1) rows (m defaults to 5 d)
///   indicator: m = d states, f(a) = e_a
///   constant:  m = 1, f = all-ones row
enum class DesignKind { gaussian, indicator, constant };

std::string to_string(DesignKind k);
DesignKind parse_design(const std::string& name);

/// Everything an experiment grid needs. Read from a flat `key = value` file
/// whose keys are the field names below; lists are comma separated.
struct SweepConfig {
  std::vector<std::size_t> n_grid{1000};
  std::size_t d = 200;
  std::size_t s = 5;
  std::vector<double> delta_list{1.0};
  std::vector<double> gamma_list{0.0};
  std::size_t replicates = 1;
  ErrorFamily family = ErrorFamily::student_t;
  /// alpha for symmetric-pareto, nu for student-t.
  double family_shape = 5.0;
  double c_tau = 1.0;
  double c_lambda = 1.0;
  std::uint64_t base_seed = 0;
  std::vector<Estimator> estimators{Estimator::ahr};

  // Scenario shape.
  DesignKind design = DesignKind::gaussian;
  std::size_t m = 0;  // 0: design default
  double beta_value = 1.0;
  double scale = 1.0;
  /// Per-state error scale grows linearly from scale to scale*(1+h) across states.
  double heteroskedasticity = 0.0;

  double precondition_threshold = 0.5;
  /// Record wall_time_ms; off keeps results byte-reproducible.
  bool timing = false;
  SolverConfig solver;

  // Diagnostics.
  double lre_radius = 1.0;
  std::size_t lre_directions = 200;
  std::size_t lre_centers = 10;
  std::size_t bernstein_replicas = 10000;
  std::vector<double> epsilon_grid{0.05, 0.1, 0.2, 0.3, 0.5};

  std::size_t state_count() const;
  void validate() const;
};

/// Throws InvalidInput on unknown keys or malformed values.
SweepConfig parse_sweep_config(const Metadata& entries);
SweepConfig load_sweep_config(const std::filesystem::path& path);

/// Inverse of parse_sweep_config (every key written).
Metadata to_metadata(const SweepConfig& cfg);

}  // namespace ahr
