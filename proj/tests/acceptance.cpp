// Acceptance suite for the suspension construction. Prints one PASS/FAIL line per
// criterion with the measured value next to its pinned tolerance, then a summary.
// Exit status is the number of failed criteria (capped at 1).
//
// Reference values are independent of the library wherever a closed form exists:
// the bump derivative, the analytic suspension of the drift field, and the
// first-return map of the nontrivial base field (y is conserved along its orbits,
// so the return time is 1 / v_T and the map is explicit).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <memory>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "vps/config.hpp"
#include "vps/pipeline.hpp"
#include "vps/suspension.hpp"
#include "vps/sweep.hpp"

using namespace vps;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// pinned tolerances
constexpr double kTolClosedForm = 1e-10;
constexpr double kTolDriftReturn = 1e-9;
constexpr double kMaxSecondsDrift = 10.0;
constexpr double kTolReturn = 1e-6;
constexpr double kMinOrder = 3.5;
constexpr double kMaxSecondsNontrivial = 300.0;
constexpr double kTolDivergence = 1e-5;
constexpr double kDivergenceStep = 1e-4;
constexpr double kTolRhoPeriodic = 1e-8;
constexpr double kTolFlatness = 1e-12;
constexpr double kTolGroupLaw = 1e-7;
constexpr double kRatioLo = 1.5;
constexpr double kRatioHi = 3.0;
constexpr double kTolDriftRatio = 1e-9;
constexpr double kTolReturnPaths = 1e-8;

constexpr double kShearAmp = 0.2;  // drift case: Q(x, y) = (x + 0.2 sin(2 pi y), y)
constexpr double kBaseAmp = 0.5;   // nontrivial case: v = (1 + 0.5 sin(2 pi y), 0.2, 0)
constexpr double kBaseDrift = 0.2;
constexpr double kMapAmp = 0.1;    // E(x, y) = (x, y + 0.1 sin(2 pi x))

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

int g_failed = 0;

void report(const char* id, const char* title, bool pass, const std::string& detail) {
  std::printf("[%s] %s %s: %s\n", pass ? "PASS" : "FAIL", id, title, detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failed;
}

std::string fmt(const char* f, double a) {
  char buf[96];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string fmt(const char* f, double a, double b) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

// tau'(s) for tau = phi(s) / (phi(s) + phi(1 - s)), phi(r) = exp(-1 / r)
double bump_prime_oracle(double s) {
  if (s <= 0.0 || s >= 1.0) return 0.0;
  const double a = std::exp(-1.0 / s), b = std::exp(-1.0 / (1.0 - s));
  const double d = a + b;
  return a * b * (1.0 / (s * s) + 1.0 / ((1.0 - s) * (1.0 - s))) / (d * d);
}

double base_vt(double y) { return 1.0 + kBaseAmp * std::sin(kTwoPi * y); }

// Q = P_v o E for the nontrivial case, in closed form.
TorusPoint q_nontrivial(const TorusPoint& p) {
  Vec z(2);
  const double y = p[1] + kMapAmp * std::sin(kTwoPi * p[0]);
  z << p[0] + kBaseDrift / base_vt(y), y;
  return TorusPoint::wrap(z);
}

// rho(1, x) predicted for the nontrivial case: lambda(Q^{-1} x).
double rho_one_prediction(const Vec& x) {
  const double y1 = x[0] - kBaseDrift / base_vt(x[1]);
  const double y2 = x[1] - kMapAmp * std::sin(kTwoPi * y1);
  return base_vt(y2);
}

std::shared_ptr<const VectorField> field(std::vector<std::string> comps) {
  return std::make_shared<const TrigField>(TrigField::parse(comps));
}

MapExpr shear(int axis, const std::string& profile) {
  MapExpr map(2);
  map.then(ElementaryMap::shear(2, axis, TrigPoly::parse(profile, {"x", "y"})));
  return map;
}

FlowConfig flow_at(double h) {
  FlowConfig cfg;
  cfg.step = h;
  cfg.crossing_tol = std::min(1e-12, h * h);
  return cfg;
}

struct Problem {
  const char* name;
  std::shared_ptr<const VectorField> v;
  MapExpr map;
  Suspension sus;
};

Problem make_drift() {
  auto v = field({"1", "0", "0"});
  auto map = shear(0, "0.2*sin(y)");
  return {"drift", v, map, suspension_build(v, Isotopy(map), flow_at(1e-3))};
}

Problem make_nontrivial() {
  auto v = field({"1 + 0.5*sin(y)", "0.2", "0"});
  auto map = shear(1, "0.1*sin(x)");
  return {"nontrivial", v, map, suspension_build(v, Isotopy(map), flow_at(1e-3))};
}

Problem make_general() {
  auto v = field({"1 + 0.3*sin(t)*sin(x)", "0.3*cos(t)*cos(x) + 0.1*cos(y)", "0.2*sin(x)"});
  auto map = shear(1, "0.1*sin(x)");
  map.then(ElementaryMap::shear(2, 0, TrigPoly::parse("0.05*cos(y) + 0.02*sin(2y)", {"x", "y"})));
  return {"general", v, map, suspension_build(v, Isotopy(map), flow_at(1e-3))};
}

std::vector<Vec> states_at(const std::vector<double>& times, int n) {
  std::vector<Vec> out;
  for (double t : times) {
    for (const auto& p : grid(n, 2)) {
      Vec z(3);
      z << t, p[0], p[1];
      out.push_back(z);
    }
  }
  return out;
}

void criterion_closed_form(const Problem& drift, double build_seconds) {
  const auto start = Clock::now();
  const int n = 20;
  const auto states = states_at([&] {
    std::vector<double> ts;
    for (int j = 0; j < n; ++j) ts.push_back(static_cast<double>(j) / n);
    return ts;
  }(), n);
  const auto field_err = sweep(states.size(), [&](std::size_t i) {
    const Vec& z = states[i];
    Vec u(3), exact(3);
    drift.sus.u->eval(z, u);
    exact << 1.0, bump_prime_oracle(z[0]) * kShearAmp * std::sin(kTwoPi * z[2]), 0.0;
    return (u - exact).cwiseAbs().maxCoeff();
  });
  const auto pts = grid(n, 2);
  const auto ret = poincare_residuals(
      *drift.sus.u, pts,
      [](const TorusPoint& p) {
        Vec z(2);
        z << p[0] + kShearAmp * std::sin(kTwoPi * p[1]), p[1];
        return TorusPoint::wrap(z);
      },
      flow_at(1e-3));
  const double secs = build_seconds + seconds_since(start);
  const bool pass = field_err.max <= kTolClosedForm && ret.max <= kTolDriftReturn && secs < kMaxSecondsDrift;
  report("C1", "closed-form suspension (drift field, single shear)", pass,
         fmt("max|u - u_exact| = %.2e <= 1e-10 on 20^3", field_err.max) +
             fmt(", max dist(P_u, Q) = %.2e <= 1e-9 on grid(20)", ret.max) + fmt(", %.2f s < 10 s", secs));
}

void criterion_nontrivial(const Problem& nt, double build_seconds) {
  const auto start = Clock::now();
  const auto pts = grid(20, 2);
  const auto res = poincare_residuals(*nt.sus.u, pts, q_nontrivial, flow_at(1e-3), Exec::Serial);

  const std::vector<double> steps{0.02, 0.01, 0.005};
  std::vector<double> ladder;
  for (double h : steps) {
    const auto sus = suspension_build(nt.v, Isotopy(nt.map), flow_at(h));
    ladder.push_back(poincare_residuals(*sus.u, pts, q_nontrivial, flow_at(h), Exec::Serial).max);
  }
  double order = std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k < ladder.size(); ++k)
    order = std::min(order, std::log2(ladder[k - 1] / ladder[k]));
  if (std::isnan(order)) order = -std::numeric_limits<double>::infinity();
  const double secs = build_seconds + seconds_since(start);
  const bool pass = res.max <= kTolReturn && order >= kMinOrder && secs < kMaxSecondsNontrivial;
  char ladder_txt[160];
  std::snprintf(ladder_txt, sizeof ladder_txt, " (residuals %.2e, %.2e, %.2e at h = 0.02, 0.01, 0.005)", ladder[0],
                ladder[1], ladder[2]);
  report("C2", "nontrivial base field", pass,
         fmt("max dist(P_u, Q) = %.2e <= 1e-6 on grid(20) at h = 1e-3", res.max) +
             fmt(", observed order %.2f >= 3.5", order) + ladder_txt +
             fmt(", %.1f s < 300 s single-threaded", secs));
}

void criterion_divergence(const std::vector<const Problem*>& problems) {
  std::string detail;
  bool pass = true;
  std::vector<double> ts;
  for (int j = 0; j < 15; ++j) ts.push_back(j / 15.0);
  const auto states = states_at(ts, 15);
  for (const auto* p : problems) {
    const auto r = divergence_residuals(*p->sus.u, states, kDivergenceStep);
    pass = pass && r.max <= kTolDivergence;
    detail += std::string(detail.empty() ? "" : ", ") + p->name + fmt(" max|div u| = %.2e", r.max);
  }
  report("C3", "divergence-free suspension", pass, detail + " <= 1e-5 on 15^3 (difference step 1e-4)");
}

void criterion_density(const std::vector<const Problem*>& preserving, const Problem& nt) {
  const auto pts = grid(20, 2);
  bool pass = true;
  std::string detail;
  for (const auto* p : preserving) {
    const auto& fam = *p->sus.family;
    const auto init = sweep(pts.size(), [&](std::size_t i) {
      const Vec& x = pts[i].coords();
      return std::abs(fam.sample(0.0, x).rho - (*p->v)(0.0, x)[0]);
    });
    const auto per = rho_periodicity(fam, pts);
    pass = pass && init.max == 0.0 && per.max <= kTolRhoPeriodic;
    detail += std::string(detail.empty() ? "" : "; ") + p->name +
              fmt(": max|rho(0) - v_T(0)| = %.1e, max|rho(1) - rho(0)| = %.2e", init.max, per.max);
  }
  report("C4", "density identities (lambda-preserving maps)", pass, detail + " (== 0, <= 1e-8, grid(20))");

  const auto& fam = *nt.sus.family;
  const auto init = sweep(pts.size(), [&](std::size_t i) {
    const Vec& x = pts[i].coords();
    return std::abs(fam.sample(0.0, x).rho - (*nt.v)(0.0, x)[0]);
  });
  const auto jump = rho_periodicity(fam, pts);
  const auto pred = sweep(pts.size(), [&](std::size_t i) {
    const Vec& x = pts[i].coords();
    return std::abs(fam.sample(1.0, x).rho - rho_one_prediction(x));
  });
  std::printf("[INFO] C4 nontrivial case: E does not preserve lambda, so rho(1) != rho(0): "
              "max|rho(0) - v_T(0)| = %.1e, max|rho(1) - rho(0)| = %.3e, "
              "max|rho(1) - lambda(Q^-1 x)| = %.2e\n",
              init.max, jump.max, pred.max);
}

void criterion_flatness(const std::vector<const Problem*>& problems) {
  std::vector<double> ts;
  for (int k = 0; k <= 8; ++k) {
    ts.push_back(0.0025 * k);
    ts.push_back(0.98 + 0.0025 * k);
  }
  const auto states = states_at(ts, 10);
  bool pass = true;
  std::string detail;
  for (const auto* p : problems) {
    const auto r = flatness_residuals(*p->sus.family, states);
    pass = pass && r.max <= kTolFlatness;
    detail += std::string(detail.empty() ? "" : ", ") + p->name + fmt(" %.2e", r.max);
  }
  report("C5", "boundary flatness", pass,
         "sup|U - v_hat| over t in [0, 0.02] u [0.98, 1], grid(10): " + detail + " <= 1e-12");
}

void criterion_group_law(const std::vector<const Problem*>& problems) {
  std::mt19937_64 rng(20240601);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  struct Triple {
    double s1, s2;
    CylPoint p;
  };
  std::vector<Triple> samples;
  for (int i = 0; i < 50; ++i) {
    const double t = unit(rng), x = unit(rng), y = unit(rng);
    const double s1 = unit(rng) - 0.5, s2 = unit(rng) - 0.5;
    samples.push_back({s1, s2, CylPoint(t, TorusPoint({x, y}))});
  }
  bool pass = true;
  std::string detail;
  for (const auto* p : problems) {
    const auto r = sweep(samples.size(), [&](std::size_t i) {
      return transport_flow_check(*p->sus.family, samples[i].s1, samples[i].s2, {samples[i].p});
    });
    pass = pass && r.max <= kTolGroupLaw;
    detail += std::string(detail.empty() ? "" : ", ") + p->name + fmt(" %.2e", r.max);
  }
  report("C6", "flow group law", pass, "max defect over 50 random (s1, s2, t, x): " + detail + " <= 1e-7");
}

void criterion_ladder(const Problem& drift, const Problem& nt) {
  const std::vector<double> scales{0.2, 0.1, 0.05, 0.025};
  bool pass = true;
  std::string detail;
  for (const auto* p : {&nt, &drift}) {
    const auto rows = perturbation_experiment(p->v, p->map, scales, flow_at(1e-3), 10);
    detail += std::string(detail.empty() ? "" : "; ") + p->name + " sup|u - v| =";
    for (const auto& r : rows) detail += fmt(" %.4e", r.sup_diff);
    detail += ", ratios";
    for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
      const double ratio = rows[i].sup_diff / rows[i + 1].sup_diff;
      detail += fmt(" %.10f", ratio);
      pass = pass && rows[i + 1].sup_diff < rows[i].sup_diff && ratio >= kRatioLo && ratio <= kRatioHi;
      if (p == &drift) pass = pass && std::abs(ratio - 2.0) <= kTolDriftRatio;
    }
  }
  report("C7", "perturbation ladder", pass,
         detail + " (strictly decreasing, ratios in [1.5, 3], drift ratio 2 +- 1e-9)");
}

void criterion_return_paths(const std::vector<const Problem*>& problems) {
  const auto pts = grid(20, 2);
  bool pass = true;
  std::string detail;
  const auto cfg = flow_at(1e-3);
  for (const auto* p : problems) {
    const auto vhat = normalize(p->v);
    const auto r = poincare_residuals(
        *p->v, pts, [&](const TorusPoint& x) { return poincare(*vhat, x, cfg).image; }, cfg);
    pass = pass && r.max <= kTolReturnPaths;
    detail += std::string(detail.empty() ? "" : ", ") + p->name + fmt(" %.2e", r.max);
  }
  report("C8", "event-detected P_v equals time-one P_v_hat", pass, "max dist on grid(20): " + detail + " <= 1e-8");
}

void criterion_negative() {
  const auto cfg = parse_config(R"yaml(dimension: 2
field: {t: "1", x: "0", y: "0"}
map:
  - shear: {axis: y, profile: "0.1*sin(x)"}
  - stretch: {axis: x, profile: "0.1*sin(x)"}
)yaml",
                                "negative.yaml");
  const auto rep = run_pipeline(cfg);
  const bool stage_ok = rep.failure && rep.failure->stage == "density" &&
                        rep.failure->kind == to_string(ErrorKind::ConstructionFailure) &&
                        rep.failure->message.find("lambda-preservation hypothesis") != std::string::npos;
  bool direct_ok = false;
  std::string direct_msg;
  try {
    (void)suspension_build(cfg.field, cfg.isotopy(), cfg.flow);
  } catch (const Error& e) {
    direct_ok = e.kind() == ErrorKind::ConstructionFailure && e.stage() == "density";
    direct_msg = e.what();
  }
  const bool pass = stage_ok && direct_ok && !rep.passed();
  report("C9", "non-unit Jacobian isotopy is rejected", pass,
         rep.failure ? "stage '" + rep.failure->stage + "' (" + rep.failure->kind + "): " + rep.failure->message
                     : std::string("no construction failure reported"));
}

}  // namespace

int main() {
  std::printf("acceptance suite: %d sweep threads\n", sweep_threads());
  try {
    auto t0 = Clock::now();
    const Problem drift = make_drift();
    const double drift_build = seconds_since(t0);
    t0 = Clock::now();
    const Problem nt = make_nontrivial();
    const double nt_build = seconds_since(t0);
    const Problem general = make_general();

    criterion_closed_form(drift, drift_build);
    criterion_nontrivial(nt, nt_build);
    criterion_divergence({&drift, &nt});
    criterion_density({&drift, &general}, nt);
    criterion_flatness({&drift, &nt});
    criterion_group_law({&drift, &nt});
    criterion_ladder(drift, nt);
    criterion_return_paths({&nt, &general});
    criterion_negative();
  } catch (const std::exception& e) {
    std::printf("[FAIL] unexpected error: %s\n", e.what());
    ++g_failed;
  }
  std::printf("%s: %d criteria failed\n", g_failed ? "FAILED" : "ALL PASSED", g_failed);
  return g_failed ? 1 : 0;
}
