#include "vps/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include <json.hpp>

namespace vps {
namespace {

using Json = nlohmann::ordered_json;
using Clock = std::chrono::steady_clock;

class StageTimer {
 public:
  StageTimer(Report& rep, std::string name) : rep_(rep), name_(std::move(name)), start_(Clock::now()) {}
  ~StageTimer() {
    rep_.timings.emplace_back(name_, std::chrono::duration<double>(Clock::now() - start_).count());
  }
  StageTimer(const StageTimer&) = delete;
  StageTimer& operator=(const StageTimer&) = delete;

 private:
  Report& rep_;
  std::string name_;
  Clock::time_point start_;
};

std::string point_str(const Vec& x) {
  std::ostringstream os;
  os.precision(6);
  os << "(";
  for (int i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x[i];
  os << ")";
  return os.str();
}

CheckResult make_check(std::string name, std::string condition, double value, std::string relation, double bound,
                       std::string detail = {}) {
  CheckResult c;
  c.name = std::move(name);
  c.condition = std::move(condition);
  c.value = value;
  c.relation = std::move(relation);
  c.bound = bound;
  c.detail = std::move(detail);
  if (c.relation == "<=") {
    c.passed = value <= bound;
  } else if (c.relation == ">=") {
    c.passed = value >= bound;
  } else if (c.relation == ">") {
    c.passed = value > bound;
  } else {
    c.passed = value == bound;
  }
  return c;
}

CheckResult errored_check(std::string name, std::string condition, const std::exception& e) {
  CheckResult c;
  c.name = std::move(name);
  c.condition = std::move(condition);
  c.value = std::numeric_limits<double>::quiet_NaN();
  c.passed = false;
  c.detail = std::string("error: ") + e.what();
  return c;
}

StageFailure failure_from(const Error& e, const std::string& fallback_stage) {
  return {e.stage().empty() ? fallback_stage : e.stage(), std::string(to_string(e.kind())), e.what()};
}

std::vector<std::string> coord_names(const std::string& prefix, int m) {
  const auto names = TrigField::variable_names(m);
  std::vector<std::string> out;
  for (int i = 1; i <= m; ++i) out.push_back(prefix + names[static_cast<std::size_t>(i)]);
  return out;
}

std::vector<std::string> concat(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

void append(std::vector<double>& row, const Vec& v) {
  for (int i = 0; i < v.size(); ++i) row.push_back(v[i]);
}

// Field hypotheses: positive time component and zero divergence.
void field_checks(Report& rep, const ProblemConfig& cfg) {
  StageTimer timer(rep, "validate");
  try {
    const FieldReport fr = field_validate(*cfg.field, 16, 1e-9);
    rep.checks.push_back(make_check("positive_time_component", "the time component of v is positive",
                                    fr.min_time_speed, ">", 0.0, "min v_T over a 16^(1+m) space-time grid"));
    rep.checks.push_back(make_check("field_divergence_free", "v preserves the volume form (zero divergence)",
                                    fr.max_abs_divergence, "<=", fr.tolerance,
                                    "max |div v| from closed-form partials on a 16^(1+m) space-time grid"));
  } catch (const Error& e) {
    if (!rep.failure) rep.failure = failure_from(e, "validate");
    rep.skipped.push_back("positive_time_component");
    rep.skipped.push_back("field_divergence_free");
  }
}

// The isotopy must consist of lambda-preserving maps, lambda = v_T(0, .) dx.
void hypothesis_checks(Report& rep, const ProblemConfig& cfg, Exec exec) {
  StageTimer timer(rep, "hypotheses");
  const int m = cfg.dimension;
  const auto pts = grid(cfg.verify.poincare_grid, m);

  try {
    const NormalizedField vhat(cfg.field);
    const auto r = sweep(
        pts.size(),
        [&](std::size_t i) {
          const auto a = poincare(*cfg.field, pts[i], cfg.flow).image;
          const auto b = poincare(vhat, pts[i], cfg.flow).image;
          return torus_dist(a, b);
        },
        exec);
    rep.checks.push_back(make_check("return_map_coincidence",
                                    "P_v by crossing detection equals the time-one map of v_hat", r.max, "<=",
                                    cfg.verify.tol.return_coincidence,
                                    "worst at x = " + point_str(pts[r.argmax].coords())));
  } catch (const std::exception& e) {
    rep.checks.push_back(errored_check("return_map_coincidence",
                                       "P_v by crossing detection equals the time-one map of v_hat", e));
  }

  const char* lambda_cond = "every map of the isotopy preserves lambda = v_T(0, x) dx";
  try {
    const Isotopy iso = cfg.isotopy();
    const auto dens = grid(cfg.verify.density_grid, m);
    const auto& v = *cfg.field;
    const auto r = sweep(
        dens.size(),
        [&](std::size_t i) {
          const Vec& x = dens[i].coords();
          const double lx = section_density(v, x);
          double worst = 0.0;
          for (double s : {0.25, 0.5, 0.75, 1.0}) {
            const double d = section_density(v, iso.eval(s, x)) * iso.jacobian_det(s, x) - lx;
            worst = std::max(worst, std::abs(d));
          }
          return worst;
        },
        exec);
    rep.checks.push_back(make_check("lambda_preservation", lambda_cond, r.max, "<=",
                                    cfg.verify.tol.lambda_preservation,
                                    "max |lambda(eta_s x) det D eta_s(x) - lambda(x)| over s in {1/4, 1/2, 3/4, 1}; "
                                    "worst at x = " + point_str(dens[r.argmax].coords())));
  } catch (const Error& e) {
    rep.checks.push_back(errored_check("lambda_preservation", lambda_cond, e));
  }
}

std::optional<Suspension> build_stage(Report& rep, const ProblemConfig& cfg) {
  StageTimer timer(rep, "build");
  try {
    return suspension_build(cfg.field, cfg.isotopy(), cfg.flow);
  } catch (const Error& e) {
    if (!rep.failure) rep.failure = failure_from(e, "transport");
    return std::nullopt;
  }
}

void poincare_check(Report& rep, const ProblemConfig& cfg, const Suspension& sus, Exec exec) {
  StageTimer timer(rep, "poincare_identity");
  const char* cond = "the first-return map of u equals Q";
  const int m = cfg.dimension;
  const auto pts = grid(cfg.verify.poincare_grid, m);
  std::vector<Vec> pu(pts.size()), qx(pts.size());
  try {
    const auto r = sweep(
        pts.size(),
        [&](std::size_t i) {
          const auto a = poincare(*sus.u, pts[i], cfg.flow).image;
          const auto b = cfg.q(pts[i]);
          pu[i] = a.coords();
          qx[i] = b.coords();
          return torus_dist(a, b);
        },
        exec);
    rep.checks.push_back(make_check("poincare_identity", cond, r.max, "<=", cfg.verify.tol.poincare,
                                    "grid(" + std::to_string(cfg.verify.poincare_grid) + "), step " +
                                        std::to_string(cfg.flow.step) + "; worst at x = " +
                                        point_str(pts[r.argmax].coords())));
    Table t{"poincare", concat(concat(coord_names("", m), coord_names("pu_", m)), coord_names("q_", m)), {}};
    t.header.push_back("residual");
    for (std::size_t i = 0; i < pts.size(); ++i) {
      std::vector<double> row;
      append(row, pts[i].coords());
      append(row, pu[i]);
      append(row, qx[i]);
      row.push_back(r.values[i]);
      t.rows.push_back(std::move(row));
    }
    rep.tables.push_back(std::move(t));
  } catch (const std::exception& e) {
    rep.checks.push_back(errored_check("poincare_identity", cond, e));
  }
}

void order_check(Report& rep, const ProblemConfig& cfg, Exec exec) {
  const auto& steps = cfg.verify.order_steps;
  if (steps.size() < 2) return;
  StageTimer timer(rep, "convergence_order");
  const char* cond = "the first-return residual decays at the order of the integrator";
  const int m = cfg.dimension;
  const auto pts = grid(cfg.verify.order_grid, m);
  try {
    // reference Q at the configured (finest) step, shared by every rung
    std::vector<TorusPoint> qx;
    qx.reserve(pts.size());
    for (const auto& p : pts) qx.push_back(cfg.q(p));
    std::vector<double> res;
    for (double h : steps) {
      FlowConfig fc = cfg.flow;
      fc.step = h;
      fc.crossing_tol = std::min(cfg.flow.crossing_tol, h * h);
      const auto sus = suspension_build(cfg.field, cfg.isotopy(), fc);
      const auto r = sweep(
          pts.size(), [&](std::size_t i) { return torus_dist(poincare(*sus.u, pts[i], fc).image, qx[i]); }, exec);
      res.push_back(r.max);
    }
    double worst = std::numeric_limits<double>::infinity();
    std::ostringstream detail;
    detail.precision(4);
    detail << "residuals";
    Table t{"order", {"step", "residual", "observed_order"}, {}};
    for (std::size_t k = 0; k < steps.size(); ++k) {
      double order = std::numeric_limits<double>::quiet_NaN();
      if (k > 0) {
        order = std::log(res[k - 1] / res[k]) / std::log(steps[k - 1] / steps[k]);
        worst = std::min(worst, std::isnan(order) ? -std::numeric_limits<double>::infinity() : order);
      }
      detail << (k ? ", " : " ") << res[k] << " at h = " << steps[k];
      t.rows.push_back({steps[k], res[k], order});
    }
    rep.checks.push_back(make_check("convergence_order", cond, worst, ">=", cfg.verify.tol.min_order, detail.str()));
    rep.tables.push_back(std::move(t));
  } catch (const std::exception& e) {
    rep.checks.push_back(errored_check("convergence_order", cond, e));
  }
}

void rescaling_check(Report& rep, const ProblemConfig& cfg, const Suspension& sus, Exec exec) {
  StageTimer timer(rep, "time_rescaling");
  const char* cond = "u = rho U and U have the same first-return map";
  const auto pts = grid(cfg.verify.rescaling_grid, cfg.dimension);
  try {
    const auto r = sweep(
        pts.size(),
        [&](std::size_t i) {
          return torus_dist(poincare(*sus.u, pts[i], cfg.flow).image, poincare(*sus.U, pts[i], cfg.flow).image);
        },
        exec);
    rep.checks.push_back(make_check("time_rescaling", cond, r.max, "<=", cfg.verify.tol.rescaling,
                                    "grid(" + std::to_string(cfg.verify.rescaling_grid) + ")"));
  } catch (const std::exception& e) {
    rep.checks.push_back(errored_check("time_rescaling", cond, e));
  }
}

void divergence_check(Report& rep, const ProblemConfig& cfg, const Suspension& sus, Exec exec) {
  StageTimer timer(rep, "divergence");
  const char* cond = "u preserves the volume form (zero divergence)";
  const char* cond2 = "the divergence residual is discretization error, not a trend";
  const int m = cfg.dimension;
  const double h = cfg.verify.divergence_step;
  const auto states = spacetime_grid(cfg.verify.divergence_grid, m);
  try {
    const auto a = divergence_residuals(*sus.u, states, h, exec);
    const auto b = divergence_residuals(*sus.u, states, 0.5 * h, exec);
    std::ostringstream d;
    d.precision(4);
    d << cfg.verify.divergence_grid << "^" << (m + 1) << " space-time grid, central differences, step " << h;
    rep.checks.push_back(make_check("divergence", cond, a.max, "<=", cfg.verify.tol.divergence, d.str()));
    // both residuals below this floor count as agreeing
    const double floor = cfg.verify.tol.divergence * 1e-6;
    const double ratio = std::max(b.max, floor) / std::max(a.max, floor);
    std::ostringstream d2;
    d2.precision(4);
    d2 << "max residual " << a.max << " at step " << h << ", " << b.max << " at step " << 0.5 * h;
    rep.checks.push_back(
        make_check("divergence_step_halving", cond2, ratio, "<=", cfg.verify.tol.divergence_halving_ratio, d2.str()));
    Table t{"divergence", {"t"}, {}};
    t.header = concat(t.header, coord_names("", m));
    t.header.push_back("div_h");
    t.header.push_back("div_half_h");
    for (std::size_t i = 0; i < states.size(); ++i) {
      std::vector<double> row;
      append(row, states[i]);
      row.push_back(a.values[i]);
      row.push_back(b.values[i]);
      t.rows.push_back(std::move(row));
    }
    rep.tables.push_back(std::move(t));
  } catch (const std::exception& e) {
    rep.checks.push_back(errored_check("divergence", cond, e));
  }
}

void density_checks(Report& rep, const ProblemConfig& cfg, const Suspension& sus, Exec exec) {
  StageTimer timer(rep, "density");
  const int m = cfg.dimension;
  const auto pts = grid(cfg.verify.density_grid, m);
  const auto& fam = *sus.family;
  const char* cond0 = "rho(0, x) equals v_T(0, x)";
  const char* cond1 = "rho is 1-periodic in t";
  try {
    std::vector<double> r0(pts.size()), r1(pts.size());
    const auto init = sweep(
        pts.size(),
        [&](std::size_t i) {
          const Vec& x = pts[i].coords();
          r0[i] = fam.sample(0.0, x).rho;
          r1[i] = fam.sample(1.0, x).rho;
          return std::abs(r0[i] - section_density(*cfg.field, x));
        },
        exec);
    rep.checks.push_back(make_check("rho_initial", cond0, init.max, "==", 0.0,
                                    "grid(" + std::to_string(cfg.verify.density_grid) + ")"));
    std::size_t worst = 0;
    double per = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const double d = std::abs(r1[i] - r0[i]);
      if (d > per || std::isnan(d)) {
        per = d;
        worst = i;
      }
    }
    rep.checks.push_back(make_check("rho_periodicity", cond1, per, "<=", cfg.verify.tol.rho_periodicity,
                                    "worst at x = " + point_str(pts[worst].coords())));
    Table t{"rho", concat(coord_names("", m), {"rho_0", "rho_1", "difference"}), {}};
    for (std::size_t i = 0; i < pts.size(); ++i) {
      std::vector<double> row;
      append(row, pts[i].coords());
      row.push_back(r0[i]);
      row.push_back(r1[i]);
      row.push_back(r1[i] - r0[i]);
      t.rows.push_back(std::move(row));
    }
    rep.tables.push_back(std::move(t));
  } catch (const std::exception& e) {
    rep.checks.push_back(errored_check("rho_periodicity", cond1, e));
  }
}

void flatness_check(Report& rep, const ProblemConfig& cfg, const Suspension& sus, Exec exec) {
  StageTimer timer(rep, "boundary_flatness");
  const char* cond = "U coincides with v_hat near t = 0 and t = 1";
  const int m = cfg.dimension;
  const auto pts = grid(cfg.verify.flatness_grid, m);
  std::vector<Vec> states;
  for (int k = 0; k <= 8; ++k) {
    for (double t : {0.0025 * k, 0.98 + 0.0025 * k}) {
      for (const auto& p : pts) {
        Vec z(m + 1);
        z[0] = t;
        z.tail(m) = p.coords();
        states.push_back(z);
      }
    }
  }
  try {
    const auto r = flatness_residuals(*sus.family, states, exec);
    rep.checks.push_back(make_check("boundary_flatness", cond, r.max, "<=", cfg.verify.tol.flatness,
                                    "t in [0, 0.02] and [0.98, 1] in steps of 0.0025, grid(" +
                                        std::to_string(cfg.verify.flatness_grid) + ")"));
  } catch (const std::exception& e) {
    rep.checks.push_back(errored_check("boundary_flatness", cond, e));
  }
}

void group_law_check(Report& rep, const ProblemConfig& cfg, const Suspension& sus, Exec exec) {
  if (cfg.verify.group_law_samples == 0) return;
  StageTimer timer(rep, "group_law");
  const char* cond = "the transport flow satisfies T^s2 o T^s1 = T^(s1 + s2)";
  const int m = cfg.dimension;
  std::mt19937_64 rng(cfg.verify.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  struct Triple {
    double s1, s2;
    CylPoint p;
  };
  std::vector<Triple> samples;
  for (int i = 0; i < cfg.verify.group_law_samples; ++i) {
    const double t = unit(rng);
    Vec x(m);
    for (int j = 0; j < m; ++j) x[j] = unit(rng);
    const double s1 = unit(rng) - 0.5;
    const double s2 = unit(rng) - 0.5;
    samples.push_back({s1, s2, CylPoint(t, TorusPoint::wrap(x))});
  }
  try {
    const auto r = sweep(
        samples.size(),
        [&](std::size_t i) { return transport_flow_check(*sus.family, samples[i].s1, samples[i].s2, {samples[i].p}); },
        exec);
    rep.checks.push_back(make_check("group_law", cond, r.max, "<=", cfg.verify.tol.group_law,
                                    std::to_string(samples.size()) + " random (s1, s2, t, x), seed " +
                                        std::to_string(cfg.verify.seed)));
  } catch (const std::exception& e) {
    rep.checks.push_back(errored_check("group_law", cond, e));
  }
}

Json check_json(const CheckResult& c) {
  Json j;
  j["name"] = c.name;
  j["condition"] = c.condition;
  j["value"] = std::isfinite(c.value) ? Json(c.value) : Json(nullptr);
  j["relation"] = c.relation;
  j["bound"] = c.bound;
  j["passed"] = c.passed;
  if (!c.detail.empty()) j["detail"] = c.detail;
  return j;
}

Json config_json(const ProblemConfig& cfg) {
  Json j;
  j["source"] = cfg.source;
  j["dimension"] = cfg.dimension;
  const auto names = TrigField::variable_names(cfg.dimension);
  Json field = Json::object();
  for (std::size_t i = 0; i < cfg.field_text.size() && i < names.size(); ++i) field[names[i]] = cfg.field_text[i];
  j["field"] = field;
  Json map = Json::array();
  for (const auto& f : cfg.map.factors()) map.push_back(f.describe());
  j["map"] = map;
  j["isotopy_schedule"] = cfg.schedule;
  j["flow"] = {{"method", "rk4"},
               {"step", cfg.flow.step},
               {"crossing_tolerance", cfg.flow.crossing_tol},
               {"jacobian", cfg.flow.jacobian == JacobianMode::Auto          ? "auto"
                            : cfg.flow.jacobian == JacobianMode::Variational ? "variational"
                                                                             : "finite-difference"}};
  const auto& v = cfg.verify;
  j["verify"] = {{"poincare_grid", v.poincare_grid},     {"rescaling_grid", v.rescaling_grid},
                 {"divergence_grid", v.divergence_grid}, {"divergence_step", v.divergence_step},
                 {"density_grid", v.density_grid},       {"flatness_grid", v.flatness_grid},
                 {"group_law_samples", v.group_law_samples}, {"seed", v.seed},
                 {"order_steps", v.order_steps},         {"order_grid", v.order_grid}};
  return j;
}

}  // namespace

std::string Table::csv() const {
  std::ostringstream os;
  os.precision(17);
  for (std::size_t i = 0; i < header.size(); ++i) os << (i ? "," : "") << header[i];
  os << "\n";
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << row[i];
    os << "\n";
  }
  return os.str();
}

bool Report::passed() const {
  if (failure) return false;
  for (const auto& c : checks)
    if (!c.passed) return false;
  return true;
}

std::string Report::to_json(bool with_timings) const {
  Json j;
  j["command"] = command;
  j["config"] = config_json(config);
  if (failure) {
    j["construction"] = {{"status", "failed"},
                         {"stage", failure->stage},
                         {"kind", failure->kind},
                         {"message", failure->message}};
  } else {
    j["construction"] = {{"status", "ok"}};
  }
  Json checks_j = Json::array();
  for (const auto& c : checks) checks_j.push_back(check_json(c));
  j["checks"] = checks_j;
  j["skipped"] = skipped;
  j["passed"] = passed();
  if (with_timings) {
    Json t = Json::object();
    for (const auto& [name, sec] : timings) t[name] = sec;
    j["timings_seconds"] = t;
  }
  return j.dump(2) + "\n";
}

void Report::write_tables(const std::string& dir) const {
  std::filesystem::create_directories(dir);
  for (const auto& t : tables) {
    const auto path = std::filesystem::path(dir) / (t.name + ".csv");
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::Resource, "cannot write " + path.string());
    out << t.csv();
  }
}

Report run_validate(const ProblemConfig& cfg, const PipelineOptions& opts) {
  Report rep;
  rep.command = "validate";
  rep.config = cfg;
  field_checks(rep, cfg);
  hypothesis_checks(rep, cfg, opts.exec);
  return rep;
}

Report run_build(const ProblemConfig& cfg, const PipelineOptions& opts) {
  Report rep = run_validate(cfg, opts);
  rep.command = "build";
  if (rep.failure) return rep;
  const auto sus = build_stage(rep, cfg);
  if (!sus) return rep;
  const int m = cfg.dimension;
  Table t{"samples", {"t"}, {}};
  t.header = concat(concat(t.header, coord_names("", m)), {"rho"});
  t.header = concat(t.header, coord_names("U_", m));
  for (double s : {0.0, 0.25, 0.5, 0.75}) {
    for (const auto& p : grid(2, m)) {
      const auto smp = sus->family->sample(s, p.coords());
      std::vector<double> row{s};
      append(row, p.coords());
      row.push_back(smp.rho);
      append(row, smp.U.tail(m));
      t.rows.push_back(std::move(row));
    }
  }
  rep.tables.push_back(std::move(t));
  return rep;
}

Report run_pipeline(const ProblemConfig& cfg, const PipelineOptions& opts) {
  Report rep = run_validate(cfg, opts);
  rep.command = "verify";
  const std::vector<std::string> dependent{"poincare_identity", "convergence_order",  "time_rescaling",
                                           "divergence",        "divergence_step_halving", "rho_initial",
                                           "rho_periodicity",   "boundary_flatness", "group_law"};
  std::optional<Suspension> sus;
  if (!rep.failure) sus = build_stage(rep, cfg);
  if (!sus) {
    rep.skipped.insert(rep.skipped.end(), dependent.begin(), dependent.end());
    return rep;
  }
  poincare_check(rep, cfg, *sus, opts.exec);
  order_check(rep, cfg, opts.exec);
  rescaling_check(rep, cfg, *sus, opts.exec);
  divergence_check(rep, cfg, *sus, opts.exec);
  density_checks(rep, cfg, *sus, opts.exec);
  flatness_check(rep, cfg, *sus, opts.exec);
  group_law_check(rep, cfg, *sus, opts.exec);
  return rep;
}

std::vector<OrbitRow> trace_orbit(const ProblemConfig& cfg, const TorusPoint& x0, int n_returns) {
  if (n_returns < 1) throw Error(ErrorKind::Precondition, "trace needs at least one return");
  if (x0.dim() != cfg.dimension) throw Error(ErrorKind::DimensionMismatch, "trace: x0 has the wrong dimension");
  const auto sus = suspension_build(cfg.field, cfg.isotopy(), cfg.flow);
  std::vector<OrbitRow> rows;
  TorusPoint x = x0, q = x0;
  for (int k = 1; k <= n_returns; ++k) {
    x = poincare(*sus.u, x, cfg.flow).image;
    q = cfg.q(q);
    rows.push_back({k, x.coords(), q.coords(), torus_dist(x, q)});
  }
  return rows;
}

LadderResult perturbation_ladder(const ProblemConfig& cfg, const std::vector<double>& scales, int n_grid) {
  LadderResult out;
  out.rows = perturbation_experiment(cfg.field, cfg.map, scales, cfg.flow, n_grid);
  out.strictly_decreasing = true;
  for (std::size_t i = 0; i + 1 < out.rows.size(); ++i) {
    out.ratios.push_back(out.rows[i].sup_diff / out.rows[i + 1].sup_diff);
    if (!(out.rows[i + 1].sup_diff < out.rows[i].sup_diff)) out.strictly_decreasing = false;
  }
  return out;
}

}  // namespace vps
