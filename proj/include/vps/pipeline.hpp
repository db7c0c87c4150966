#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "vps/config.hpp"
#include "vps/sweep.hpp"

namespace vps {

/// One verification result. `relation` is how value compares to bound when the
/// check passes: "<=", ">=", ">" or "==".
struct CheckResult {
  std::string name;
  std::string condition;  ///< the property of the construction being tested
  double value = 0.0;
  std::string relation = "<=";
  double bound = 0.0;
  bool passed = false;
  std::string detail;
};

struct StageFailure {
  std::string stage;
  std::string kind;
  std::string message;
};

struct Table {
  std::string name;  ///< file stem
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  std::string csv() const;
};

struct Report {
  std::string command;
  ProblemConfig config;
  std::optional<StageFailure> failure;  ///< first stage error, if any
  std::vector<CheckResult> checks;
  std::vector<std::string> skipped;     ///< checks not run because a stage failed
  std::vector<Table> tables;
  std::vector<std::pair<std::string, double>> timings;  ///< seconds per stage

  bool passed() const;
  /// Machine-readable report with stable key order. Without timings the text is
  /// a deterministic function of the configuration.
  std::string to_json(bool with_timings = true) const;
  /// Writes every table as <dir>/<name>.csv (creating dir).
  void write_tables(const std::string& dir) const;
};

struct PipelineOptions {
  Exec exec = Exec::Parallel;
};

/// Configuration and field checks only: positive time component, zero divergence.
Report run_validate(const ProblemConfig& cfg, const PipelineOptions& opts = {});

/// validate, then build the suspension; reports the construction status and
/// samples of U and rho.
Report run_build(const ProblemConfig& cfg, const PipelineOptions& opts = {});

/// The full residual suite. Stage errors are recorded and checks that do not
/// depend on the failed stage still run.
Report run_pipeline(const ProblemConfig& cfg, const PipelineOptions& opts = {});

struct OrbitRow {
  int k = 0;
  Vec pu;          ///< P_u^k(x0)
  Vec q;           ///< Q^k(x0)
  double residual = 0.0;
};

/// Iterated first-return images of the built u next to iterated Q.
std::vector<OrbitRow> trace_orbit(const ProblemConfig& cfg, const TorusPoint& x0, int n_returns);

struct LadderResult {
  std::vector<PerturbationRow> rows;
  std::vector<double> ratios;  ///< sup_diff[i] / sup_diff[i + 1]
  bool strictly_decreasing = false;
};

/// sup |u - v| for the map scaled by each entry of `scales` (largest first).
LadderResult perturbation_ladder(const ProblemConfig& cfg, const std::vector<double>& scales, int n_grid = 10);

}  // namespace vps
