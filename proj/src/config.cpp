#include "vps/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

namespace vps {
namespace {

std::string join_problems(const std::vector<std::string>& problems) {
  std::ostringstream os;
  os << "invalid configuration:";
  for (const auto& p : problems) os << "\n  " << p;
  return os.str();
}

// Collects problems instead of stopping at the first one.
class Checker {
 public:
  explicit Checker(std::string source) : source_(std::move(source)) {}

  void fail(const YAML::Node& at, const std::string& msg) {
    std::ostringstream os;
    os << source_;
    if (at.IsDefined() && at.Mark().line >= 0) os << ":" << at.Mark().line + 1;
    os << ": " << msg;
    problems_.push_back(os.str());
  }
  void fail(const std::string& msg) { problems_.push_back(source_ + ": " + msg); }

  bool ok() const { return problems_.empty(); }
  const std::vector<std::string>& problems() const { return problems_; }

  // Rejects keys of a mapping that are not in `allowed`.
  bool keys(const YAML::Node& node, const std::string& where, const std::set<std::string>& allowed) {
    if (!node.IsMap()) {
      fail(node, where + " must be a mapping");
      return false;
    }
    for (const auto& kv : node) {
      const auto key = kv.first.as<std::string>();
      if (!allowed.count(key)) fail(kv.first, "unknown key '" + key + "' in " + where);
    }
    return true;
  }

  template <class T>
  std::optional<T> scalar(const YAML::Node& node, const std::string& what) {
    if (!node.IsScalar()) {
      fail(node, what + " must be a scalar");
      return std::nullopt;
    }
    try {
      return node.as<T>();
    } catch (const YAML::Exception&) {
      fail(node, what + " has the wrong type: '" + node.Scalar() + "'");
      return std::nullopt;
    }
  }

  void read_int(const YAML::Node& parent, const char* key, int& out, int lo, int hi, const std::string& where) {
    const auto n = parent[key];
    if (!n) return;
    if (auto v = scalar<int>(n, where + "." + key)) {
      if (*v < lo || *v > hi) {
        fail(n, where + "." + key + " must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
      } else {
        out = *v;
      }
    }
  }

  void read_positive(const YAML::Node& parent, const char* key, double& out, const std::string& where) {
    const auto n = parent[key];
    if (!n) return;
    if (auto v = scalar<double>(n, where + "." + key)) {
      if (!(*v > 0.0) || !std::isfinite(*v)) {
        fail(n, where + "." + key + " must be a positive number");
      } else {
        out = *v;
      }
    }
  }

 private:
  std::string source_;
  std::vector<std::string> problems_;
};

int axis_index(Checker& ck, const YAML::Node& node, const std::vector<std::string>& names) {
  const auto name = ck.scalar<std::string>(node, "axis");
  if (!name) return -1;
  for (std::size_t i = 1; i < names.size(); ++i)
    if (names[i] == *name) return static_cast<int>(i) - 1;
  ck.fail(node, "unknown axis '" + *name + "'");
  return -1;
}

std::optional<TrigPoly> spatial_profile(Checker& ck, const YAML::Node& node, const std::vector<std::string>& names) {
  const auto text = ck.scalar<std::string>(node, "profile");
  if (!text) return std::nullopt;
  const std::vector<std::string> spatial(names.begin() + 1, names.end());
  try {
    return TrigPoly::parse(*text, spatial);
  } catch (const Error& e) {
    ck.fail(node, e.what());
    return std::nullopt;
  }
}

long long integer_det(const Eigen::MatrixXi& a) {
  // Bareiss fraction-free elimination: exact for integer matrices.
  const int n = static_cast<int>(a.rows());
  Eigen::Matrix<long long, Eigen::Dynamic, Eigen::Dynamic> m = a.cast<long long>();
  long long sign = 1, prev = 1;
  for (int k = 0; k < n - 1; ++k) {
    if (m(k, k) == 0) {
      int p = k + 1;
      while (p < n && m(p, k) == 0) ++p;
      if (p == n) return 0;
      m.row(k).swap(m.row(p));
      sign = -sign;
    }
    for (int i = k + 1; i < n; ++i)
      for (int j = k + 1; j < n; ++j) m(i, j) = (m(i, j) * m(k, k) - m(i, k) * m(k, j)) / prev;
    prev = m(k, k);
  }
  return sign * m(n - 1, n - 1);
}

std::optional<ElementaryMap> parse_factor(Checker& ck, const YAML::Node& node, int m,
                                          const std::vector<std::string>& names) {
  if (!node.IsMap() || node.size() != 1) {
    ck.fail(node, "each map factor must be a mapping with exactly one of shear, linear, translate, stretch");
    return std::nullopt;
  }
  const auto kind = node.begin()->first.as<std::string>();
  const YAML::Node body = node.begin()->second;

  if (kind == "shear" || kind == "stretch") {
    if (!ck.keys(body, kind, {"axis", "profile"})) return std::nullopt;
    if (!body["axis"] || !body["profile"]) {
      ck.fail(body, kind + " needs axis and profile");
      return std::nullopt;
    }
    const int axis = axis_index(ck, body["axis"], names);
    auto profile = spatial_profile(ck, body["profile"], names);
    if (axis < 0 || !profile) return std::nullopt;
    try {
      return kind == "shear" ? ElementaryMap::shear(m, axis, std::move(*profile))
                             : ElementaryMap::stretch(m, axis, std::move(*profile));
    } catch (const Error& e) {
      ck.fail(body, e.what());
      return std::nullopt;
    }
  }

  if (kind == "translate") {
    if (!body.IsSequence() || static_cast<int>(body.size()) != m) {
      ck.fail(body, "translate needs a list of " + std::to_string(m) + " offsets (dimension mismatch)");
      return std::nullopt;
    }
    Vec off(m);
    for (int i = 0; i < m; ++i) {
      auto v = ck.scalar<double>(body[i], "translate offset");
      if (!v) return std::nullopt;
      off[i] = *v;
    }
    return ElementaryMap::translate(off);
  }

  if (kind == "linear") {
    if (!body.IsSequence() || static_cast<int>(body.size()) != m) {
      ck.fail(body, "linear needs an " + std::to_string(m) + " x " + std::to_string(m) +
                        " integer matrix (dimension mismatch)");
      return std::nullopt;
    }
    Eigen::MatrixXi a(m, m);
    for (int i = 0; i < m; ++i) {
      const auto row = body[i];
      if (!row.IsSequence() || static_cast<int>(row.size()) != m) {
        ck.fail(row, "linear matrix row must have " + std::to_string(m) + " entries (dimension mismatch)");
        return std::nullopt;
      }
      for (int j = 0; j < m; ++j) {
        auto v = ck.scalar<int>(row[j], "linear matrix entry");
        if (!v) return std::nullopt;
        a(i, j) = *v;
      }
    }
    const long long det = integer_det(a);
    if (det != 1 && det != -1) {
      ck.fail(body, "linear factor is non-unimodular (det = " + std::to_string(det) + ")");
      return std::nullopt;
    }
    return ElementaryMap::linear(a);
  }

  ck.fail(node.begin()->first, "unknown map factor '" + kind + "'");
  return std::nullopt;
}

void parse_tolerances(Checker& ck, const YAML::Node& n, Tolerances& t) {
  const std::string w = "verify.tolerances";
  if (!ck.keys(n, w,
               {"return_coincidence", "lambda_preservation", "poincare", "rescaling", "divergence",
                "divergence_halving_ratio", "rho_periodicity", "flatness", "group_law", "min_order"}))
    return;
  ck.read_positive(n, "return_coincidence", t.return_coincidence, w);
  ck.read_positive(n, "lambda_preservation", t.lambda_preservation, w);
  ck.read_positive(n, "poincare", t.poincare, w);
  ck.read_positive(n, "rescaling", t.rescaling, w);
  ck.read_positive(n, "divergence", t.divergence, w);
  ck.read_positive(n, "divergence_halving_ratio", t.divergence_halving_ratio, w);
  ck.read_positive(n, "rho_periodicity", t.rho_periodicity, w);
  ck.read_positive(n, "flatness", t.flatness, w);
  ck.read_positive(n, "group_law", t.group_law, w);
  ck.read_positive(n, "min_order", t.min_order, w);
}

void parse_verify(Checker& ck, const YAML::Node& n, VerifySettings& v) {
  const std::string w = "verify";
  if (!ck.keys(n, w,
               {"poincare_grid", "rescaling_grid", "divergence_grid", "divergence_step", "density_grid",
                "flatness_grid", "group_law_samples", "seed", "order_steps", "order_grid", "tolerances"}))
    return;
  ck.read_int(n, "poincare_grid", v.poincare_grid, 1, 1000, w);
  ck.read_int(n, "rescaling_grid", v.rescaling_grid, 1, 1000, w);
  ck.read_int(n, "divergence_grid", v.divergence_grid, 1, 200, w);
  ck.read_positive(n, "divergence_step", v.divergence_step, w);
  ck.read_int(n, "density_grid", v.density_grid, 1, 1000, w);
  ck.read_int(n, "flatness_grid", v.flatness_grid, 1, 1000, w);
  ck.read_int(n, "group_law_samples", v.group_law_samples, 0, 100000, w);
  ck.read_int(n, "order_grid", v.order_grid, 1, 1000, w);
  if (const auto s = n["seed"]) {
    if (auto x = ck.scalar<std::uint64_t>(s, "verify.seed")) v.seed = *x;
  }
  if (const auto s = n["order_steps"]) {
    if (!s.IsSequence() || s.size() < 2) {
      ck.fail(s, "verify.order_steps must be a list of at least two steps");
    } else {
      v.order_steps.clear();
      for (const auto& e : s) {
        auto x = ck.scalar<double>(e, "verify.order_steps entry");
        if (x && (!(*x > 0.0) || *x > 0.1)) ck.fail(e, "order steps must lie in (0, 1/10]");
        if (x) v.order_steps.push_back(*x);
      }
    }
  }
  if (const auto t = n["tolerances"]) parse_tolerances(ck, t, v.tol);
}

void parse_flow(Checker& ck, const YAML::Node& n, FlowConfig& f) {
  const std::string w = "flow";
  if (!ck.keys(n, w, {"method", "step", "crossing_tolerance", "jacobian"})) return;
  if (const auto mth = n["method"]) {
    auto s = ck.scalar<std::string>(mth, "flow.method");
    if (s && *s != "rk4") ck.fail(mth, "flow.method must be rk4 (fixed-step classical Runge-Kutta)");
  }
  ck.read_positive(n, "step", f.step, w);
  ck.read_positive(n, "crossing_tolerance", f.crossing_tol, w);
  if (const auto j = n["jacobian"]) {
    auto s = ck.scalar<std::string>(j, "flow.jacobian");
    if (s) {
      if (*s == "auto") {
        f.jacobian = JacobianMode::Auto;
      } else if (*s == "variational") {
        f.jacobian = JacobianMode::Variational;
      } else if (*s == "finite-difference") {
        f.jacobian = JacobianMode::FiniteDifference;
      } else {
        ck.fail(j, "flow.jacobian must be auto, variational or finite-difference");
      }
    }
  }
  try {
    f.validate();
  } catch (const Error& e) {
    ck.fail(n, e.what());
  }
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> problems)
    : Error(ErrorKind::Schema, join_problems(problems)), problems_(std::move(problems)) {}

Isotopy ProblemConfig::isotopy() const { return Isotopy(map); }

TorusPoint ProblemConfig::q(const TorusPoint& x) const { return poincare(*field, map_eval(map, x), flow).image; }

ProblemConfig parse_config(const std::string& text, const std::string& source) {
  Checker ck(source);
  YAML::Node loaded;
  try {
    loaded = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    std::ostringstream os;
    os << source << ":" << e.mark.line + 1 << ": YAML syntax error: " << e.msg;
    throw ConfigError({os.str()});
  }
  const YAML::Node root = loaded;
  if (!root.IsMap()) throw ConfigError({source + ": top level must be a mapping"});

  ProblemConfig cfg;
  cfg.source = source;
  ck.keys(root, "configuration", {"dimension", "field", "map", "isotopy", "flow", "verify", "output"});

  if (!root["dimension"]) ck.fail("missing required key 'dimension'");
  if (!root["field"]) ck.fail("missing required key 'field'");
  if (!ck.ok()) throw ConfigError(ck.problems());

  const auto dim = ck.scalar<int>(root["dimension"], "dimension");
  if (!dim) throw ConfigError(ck.problems());
  if (*dim < 1 || *dim > kMaxDim) {
    ck.fail(root["dimension"], "dimension must lie in [1, " + std::to_string(kMaxDim) + "]");
    throw ConfigError(ck.problems());
  }
  const int m = *dim;
  cfg.dimension = m;
  cfg.map = MapExpr(m);
  const auto names = TrigField::variable_names(m);

  // field
  const YAML::Node field = root["field"];
  if (!field.IsMap()) {
    ck.fail(field, "field must be a mapping from variable names to expressions");
  } else {
    int spatial = 0;
    for (const auto& kv : field) {
      const auto key = kv.first.as<std::string>();
      if (key != "t") ++spatial;
    }
    if (spatial != m || !field["t"]) {
      std::ostringstream os;
      os << "dimension mismatch: dimension is " << m << " but field has " << spatial << " spatial component"
         << (spatial == 1 ? "" : "s") << (field["t"] ? "" : " and no t component") << " (expected keys";
      for (const auto& n : names) os << " " << n;
      os << ")";
      ck.fail(field, os.str());
    } else {
      ck.keys(field, "field", std::set<std::string>(names.begin(), names.end()));
    }
    if (ck.ok()) {
      std::vector<TrigPoly> comps;
      for (const auto& name : names) {
        const auto node = field[name];
        auto text_v = ck.scalar<std::string>(node, "field." + name);
        if (!text_v) continue;
        cfg.field_text.push_back(*text_v);
        try {
          comps.push_back(TrigPoly::parse(*text_v, names));
        } catch (const Error& e) {
          ck.fail(node, e.what());
        }
      }
      if (ck.ok()) cfg.field = std::make_shared<const TrigField>(std::move(comps));
    }
  }

  // map
  if (const auto map = root["map"]) {
    if (!map.IsSequence()) {
      ck.fail(map, "map must be a list of factors");
    } else {
      for (const auto& f : map) {
        if (auto e = parse_factor(ck, f, m, names)) cfg.map.then(std::move(*e));
      }
    }
  }

  // isotopy
  const std::size_t nf = cfg.map.factors().size();
  cfg.schedule.assign(nf, "linear");
  if (const auto iso = root["isotopy"]) {
    if (ck.keys(iso, "isotopy", {"schedule"}) && iso["schedule"]) {
      const auto s = iso["schedule"];
      std::vector<std::pair<YAML::Node, std::string>> flags;
      if (s.IsScalar()) {
        for (std::size_t i = 0; i < std::max<std::size_t>(nf, 1); ++i) flags.emplace_back(s, s.Scalar());
      } else if (s.IsSequence()) {
        if (s.size() != nf) ck.fail(s, "isotopy.schedule needs one flag per map factor");
        for (const auto& e : s) flags.emplace_back(e, e.IsScalar() ? e.Scalar() : std::string());
      } else {
        ck.fail(s, "isotopy.schedule must be a flag or a list of flags");
      }
      for (std::size_t i = 0; i < flags.size(); ++i) {
        if (flags[i].second != "linear") {
          ck.fail(flags[i].first, "unsupported isotopy schedule '" + flags[i].second +
                                      "' (only linear: every factor scaled by s)");
        } else if (i < nf) {
          cfg.schedule[i] = flags[i].second;
        }
      }
    }
  }

  if (const auto f = root["flow"]) parse_flow(ck, f, cfg.flow);
  if (const auto v = root["verify"]) parse_verify(ck, v, cfg.verify);
  if (const auto o = root["output"]) {
    if (ck.keys(o, "output", {"report", "tables"})) {
      if (o["report"])
        if (auto s = ck.scalar<std::string>(o["report"], "output.report")) cfg.output.report = *s;
      if (o["tables"])
        if (auto s = ck.scalar<std::string>(o["tables"], "output.tables")) cfg.output.tables = *s;
    }
  }

  if (!ck.ok()) throw ConfigError(ck.problems());
  return cfg;
}

ProblemConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Schema, "cannot open configuration file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path);
}

}  // namespace vps
