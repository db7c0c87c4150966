#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vps/field.hpp"
#include "vps/flow.hpp"
#include "vps/maps.hpp"
#include "vps/suspension.hpp"

namespace vps {

/// Tolerances of the verification suite. Defaults are the acceptance values.
struct Tolerances {
  double return_coincidence = 1e-8;
  double lambda_preservation = 1e-8;
  double poincare = 1e-6;
  double rescaling = 1e-8;
  double divergence = 1e-5;
  double divergence_halving_ratio = 4.0;
  double rho_periodicity = 1e-8;
  double flatness = 1e-12;
  double group_law = 1e-7;
  double min_order = 3.5;
};

struct VerifySettings {
  int poincare_grid = 20;
  int rescaling_grid = 5;
  int divergence_grid = 15;
  double divergence_step = 1e-4;
  int density_grid = 20;
  int flatness_grid = 10;
  int group_law_samples = 50;
  std::uint64_t seed = 20240601;
  /// Optional step ladder for the convergence-order check, evaluated on order_grid.
  std::vector<double> order_steps;
  int order_grid = 20;
  Tolerances tol;
};

struct OutputSettings {
  std::string report;  ///< JSON report path; empty: stdout only
  std::string tables;  ///< directory for CSV residual tables; empty: none
};

/// A validated problem: the field v, the map E (so that Q = P_v o E), the
/// isotopy from the identity to E, integration settings and verification grids.
struct ProblemConfig {
  std::string source;  ///< file path or "<string>"
  int dimension = 0;
  std::vector<std::string> field_text;  ///< (v_T, v_1, ..., v_m) as written
  std::shared_ptr<const TrigField> field;
  MapExpr map{1};
  std::vector<std::string> schedule;  ///< one flag per map factor
  FlowConfig flow;
  VerifySettings verify;
  OutputSettings output;

  /// Throws UnsupportedIsotopy when a factor cannot be deformed to the identity.
  Isotopy isotopy() const;
  /// Q(x) = P_v(E(x)), with P_v by crossing detection.
  TorusPoint q(const TorusPoint& x) const;
};

/// Schema violations, each with the 1-based line of the offending node.
class ConfigError : public Error {
 public:
  explicit ConfigError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

/// Parses and validates a YAML problem description. Every problem found is
/// reported together in one ConfigError.
ProblemConfig parse_config(const std::string& text, const std::string& source = "<string>");
ProblemConfig load_config(const std::string& path);

}  // namespace vps
