// vpsuspend: build a divergence-free suspension u with a prescribed first-return
// map and verify it. Exit status: 0 when every check passes, 1 when a check or
// construction stage fails, 2 on configuration or usage errors.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "vps/config.hpp"
#include "vps/pipeline.hpp"

namespace {

constexpr int kExitFail = 1;
constexpr int kExitUsage = 2;

struct Common {
  std::string config;
  std::string report;
  std::string tables;
  bool serial = false;
  bool no_timings = false;
};

void add_common(CLI::App* cmd, Common& c, bool outputs) {
  cmd->add_option("config", c.config, "problem description (YAML)")->required()->check(CLI::ExistingFile);
  cmd->add_flag("--serial", c.serial, "run grid sweeps on one thread (reference path)");
  if (outputs) {
    cmd->add_option("--report", c.report, "write the JSON report here (overrides output.report)");
    cmd->add_option("--tables", c.tables, "write CSV residual tables into this directory (overrides output.tables)");
    cmd->add_flag("--no-timings", c.no_timings, "omit timings so the report is byte-reproducible");
  }
}

void print_summary(const vps::Report& rep, std::ostream& os) {
  if (rep.failure) {
    os << "construction failed at stage '" << rep.failure->stage << "' (" << rep.failure->kind
       << "): " << rep.failure->message << "\n";
  }
  for (const auto& c : rep.checks) {
    char line[160];
    std::snprintf(line, sizeof line, "%-26s %s  value %.3e %s %.3e", c.name.c_str(), c.passed ? "PASS" : "FAIL",
                  c.value, c.relation.c_str(), c.bound);
    os << line;
    if (!c.passed) os << "  [" << c.condition << "]";
    os << "\n";
  }
  for (const auto& s : rep.skipped) os << s << " skipped\n";
  os << (rep.passed() ? "all checks passed" : "FAILED") << "\n";
}

int emit(const vps::Report& rep, const vps::ProblemConfig& cfg, const Common& c) {
  const std::string report_path = !c.report.empty() ? c.report : cfg.output.report;
  const std::string tables_dir = !c.tables.empty() ? c.tables : cfg.output.tables;
  const std::string json = rep.to_json(!c.no_timings);
  if (report_path.empty()) {
    std::cout << json;
    print_summary(rep, std::cerr);
  } else {
    std::ofstream out(report_path);
    if (!out) throw vps::Error(vps::ErrorKind::Resource, "cannot write report " + report_path);
    out << json;
    print_summary(rep, std::cout);
  }
  if (!tables_dir.empty()) rep.write_tables(tables_dir);
  return rep.passed() ? 0 : kExitFail;
}

vps::PipelineOptions options(const Common& c) {
  vps::PipelineOptions o;
  o.exec = c.serial ? vps::Exec::Serial : vps::Exec::Parallel;
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Suspension of a torus map by a volume-preserving flow: build and verify"};
  app.require_subcommand(1);

  Common validate_opts, build_opts, verify_opts, trace_opts, perturb_opts;
  auto* validate = app.add_subcommand("validate", "check the configuration and the field hypotheses");
  add_common(validate, validate_opts, true);
  auto* build = app.add_subcommand("build", "validate, then construct u and print samples of U and rho");
  add_common(build, build_opts, true);
  auto* verify = app.add_subcommand("verify", "construct u and run the full residual suite");
  add_common(verify, verify_opts, true);

  auto* trace = app.add_subcommand("trace", "iterate the first-return map of u from x0 next to Q");
  add_common(trace, trace_opts, false);
  std::vector<double> x0;
  int n_returns = 1;
  std::string trace_csv;
  trace->add_option("--x0", x0, "starting point on the torus")->required();
  trace->add_option("--n", n_returns, "number of returns")->check(CLI::PositiveNumber);
  trace->add_option("--csv", trace_csv, "write the table here instead of stdout");

  auto* perturb = app.add_subcommand("perturb", "sup |u - v| for a ladder of map scales");
  add_common(perturb, perturb_opts, false);
  std::vector<double> scales{0.2, 0.1, 0.05, 0.025};
  int perturb_grid = 10;
  perturb->add_option("--scales", scales, "map amplitudes, largest first");
  perturb->add_option("--grid", perturb_grid, "space-time grid size")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (validate->parsed()) {
      const auto cfg = vps::load_config(validate_opts.config);
      return emit(vps::run_validate(cfg, options(validate_opts)), cfg, validate_opts);
    }
    if (build->parsed()) {
      const auto cfg = vps::load_config(build_opts.config);
      return emit(vps::run_build(cfg, options(build_opts)), cfg, build_opts);
    }
    if (verify->parsed()) {
      const auto cfg = vps::load_config(verify_opts.config);
      return emit(vps::run_pipeline(cfg, options(verify_opts)), cfg, verify_opts);
    }
    if (trace->parsed()) {
      const auto cfg = vps::load_config(trace_opts.config);
      if (static_cast<int>(x0.size()) != cfg.dimension) {
        std::cerr << "error: --x0 needs " << cfg.dimension << " coordinates\n";
        return kExitUsage;
      }
      vps::Vec x(cfg.dimension);
      for (int i = 0; i < cfg.dimension; ++i) x[i] = x0[static_cast<std::size_t>(i)];
      const auto rows = vps::trace_orbit(cfg, vps::TorusPoint::wrap(x), n_returns);
      const auto names = vps::TrigField::variable_names(cfg.dimension);
      std::ostringstream os;
      os.precision(17);
      os << "k";
      for (const char* p : {"pu_", "q_"})
        for (int i = 1; i <= cfg.dimension; ++i) os << "," << p << names[static_cast<std::size_t>(i)];
      os << ",residual\n";
      double worst = 0.0;
      for (const auto& r : rows) {
        os << r.k;
        for (int i = 0; i < cfg.dimension; ++i) os << "," << r.pu[i];
        for (int i = 0; i < cfg.dimension; ++i) os << "," << r.q[i];
        os << "," << r.residual << "\n";
        worst = std::max(worst, r.residual);
      }
      if (trace_csv.empty()) {
        std::cout << os.str();
      } else {
        std::ofstream(trace_csv) << os.str();
      }
      std::cerr << "max residual vs iterated Q: " << worst << "\n";
      return 0;
    }
    if (perturb->parsed()) {
      const auto cfg = vps::load_config(perturb_opts.config);
      const auto lad = vps::perturbation_ladder(cfg, scales, perturb_grid);
      std::cout.precision(17);
      std::cout << "scale,sup_diff,ratio_to_next\n";
      bool ratios_ok = true;
      for (std::size_t i = 0; i < lad.rows.size(); ++i) {
        std::cout << lad.rows[i].scale << "," << lad.rows[i].sup_diff << ",";
        if (i < lad.ratios.size()) {
          std::cout << lad.ratios[i];
          ratios_ok = ratios_ok && lad.ratios[i] >= 1.5 && lad.ratios[i] <= 3.0;
        }
        std::cout << "\n";
      }
      const bool ok = lad.strictly_decreasing && ratios_ok;
      std::cerr << (lad.strictly_decreasing ? "strictly decreasing" : "NOT strictly decreasing") << "; ratios "
                << (ratios_ok ? "within" : "outside") << " [1.5, 3]\n";
      return ok ? 0 : kExitFail;
    }
  } catch (const vps::ConfigError& e) {
    std::cerr << e.what() << "\n";
    return kExitUsage;
  } catch (const vps::Error& e) {
    std::cerr << "error";
    if (!e.stage().empty()) std::cerr << " at stage '" << e.stage() << "'";
    std::cerr << " (" << vps::to_string(e.kind()) << "): " << e.what() << "\n";
    return kExitFail;
  }
  return kExitUsage;
}
