#include "vps/suspension.hpp"

#include <cmath>
#include <sstream>

namespace vps {
namespace {

// The cover formula is used directly on [-1, 2); this keeps the field smooth
// across t = 0 and t = 1 even when rho is not periodic (an isotopy that is not
// lambda-preserving), and reduces to the periodic extension when it is.
double reduce_time(double t) {
  if (t >= -1.0 && t < 2.0) return t;
  return t - std::floor(t);
}

std::string point_str(const Vec& x) {
  std::ostringstream os;
  os << "(";
  for (int i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x[i];
  os << ")";
  return os.str();
}

}  // namespace

TransportFamily::TransportFamily(std::shared_ptr<const VectorField> v, Isotopy iso, FlowConfig cfg, Route route)
    : v_(std::move(v)), iso_(std::move(iso)), cfg_(cfg), route_(route) {
  if (!v_) throw Error(ErrorKind::Precondition, "transport family: null field");
  if (iso_.dim() != v_->dim()) throw Error(ErrorKind::DimensionMismatch, "isotopy and field dimensions differ");
  cfg_.validate();
  vhat_ = std::make_shared<const NormalizedField>(v_);

  if (const auto* tf = dynamic_cast<const TrigField*>(v_.get())) {
    const auto& c = tf->components();
    if (c[0].is_constant() && c[0].constant() > 0.0) {
      UniformDrift d;
      d.vt = c[0].constant();
      for (std::size_t i = 1; i < c.size(); ++i) {
        auto g = c[i].antiderivative(0);
        if (!g) return;
        d.mean.push_back(c[i].constant());
        d.osc.push_back(std::move(*g));
      }
      drift_ = std::move(d);
    }
  }
}

Vec TransportFamily::UniformDrift::shift(double s) const {
  const int m = static_cast<int>(mean.size());
  double z[kMaxDim + 1] = {};
  double z0[kMaxDim + 1] = {};
  z[0] = s;
  Vec d(m);
  for (int i = 0; i < m; ++i) {
    const auto& g = osc[static_cast<std::size_t>(i)];
    d[i] = (mean[static_cast<std::size_t>(i)] * s + g.value(z) - g.value(z0)) / vt;
  }
  return d;
}

Vec TransportFamily::sigma(const Vec& y, double s) const {
  if (drift_ && route_ == Route::Reduced) return y + drift_->shift(s);
  return unit_flow(y, s);
}

Vec TransportFamily::unit_flow(const Vec& y, double dur) const {
  Vec z(y.size() + 1);
  z[0] = 0.0;
  z.tail(y.size()) = y;
  integrate(*vhat_, z, dur, cfg_.step);
  return z.tail(y.size());
}

Vec TransportFamily::return_map(const Vec& y) const {
  return poincare(*v_, TorusPoint::wrap(y), cfg_).image.coords();
}

Vec TransportFamily::eval(double s, const Vec& x) const {
  const double r = bump(s);
  Vec y = iso_.eval(r, x);
  if (route_ == Route::Literal) y = unit_flow(return_map(y), -1.0);
  return sigma(y, s);
}

Vec TransportFamily::inverse(double s, const Vec& x) const {
  if (drift_ && route_ == Route::Reduced) return iso_.inverse(bump(s), x - drift_->shift(s));
  const int m = dim();
  Vec z(m + 1);
  z[0] = s;
  z.tail(m) = x;
  integrate(*vhat_, z, -s, cfg_.step);
  Vec a = z.tail(m);
  if (route_ == Route::Literal) a = unit_flow(unit_flow(a, 1.0), -1.0);
  return iso_.inverse(bump(s), a);
}

TransportFamily::Sample TransportFamily::sample(double t, const Vec& x) const {
  if (x.size() != dim()) throw Error(ErrorKind::DimensionMismatch, "transport sample: point dimension mismatch");
  t = reduce_time(t);
  Sample s = route_ == Route::Reduced ? sample_reduced(t, x) : sample_literal(t, x);
  if (!(s.det > 0.0) || !std::isfinite(s.rho)) {
    std::ostringstream os;
    os << "non-positive transport determinant " << s.det << " at t = " << t << ", x = " << point_str(x)
       << "; the isotopy does not satisfy the lambda-preservation hypothesis";
    throw Error(ErrorKind::ConstructionFailure, os.str(), "density");
  }
  return s;
}

TransportFamily::Sample TransportFamily::sample_reduced(double t, const Vec& x) const {
  const int m = dim();
  Vec z0(m + 1);
  z0[0] = t;
  z0.tail(m) = x;

  // sigma_t^{-1}(x) and its derivative from one reverse flow
  Vec xp = x;
  Mat back_spatial = Mat::Identity(m, m);
  if (drift_) {
    xp = x - drift_->shift(t);
  } else if (t != 0.0) {
    const auto fj = flow_jacobian(*vhat_, {t, x}, -t, cfg_);
    xp = fj.end.x;
    back_spatial = fj.spatial();
  }

  Sample out;
  vhat_->eval(z0, out.U);
  const double dr = bump_derivative(t);
  const double r = bump(t);
  if (dr != 0.0) {
    const Mat dsigma = back_spatial.inverse();
    out.U.tail(m) += dr * (dsigma * iso_.generator(r, xp));
  }
  out.preimage = iso_.inverse(r, xp);
  out.det = iso_.jacobian_det(r, out.preimage) / back_spatial.determinant();
  out.rho = section_density(*v_, out.preimage) / out.det;
  return out;
}

TransportFamily::Sample TransportFamily::sample_literal(double t, const Vec& x) const {
  const int m = dim();
  Vec z0(m + 1);
  z0[0] = t;
  z0.tail(m) = x;

  Vec zb = z0;
  integrate(*vhat_, zb, -t, cfg_.step);
  const Vec xp = zb.tail(m);                  // sigma_t^{-1}(x)
  const Vec zs = unit_flow(xp, 1.0);          // P_hat(sigma_t^{-1}(x))
  const auto pinv = flow_jacobian(*vhat_, {0.0, zs}, -1.0, cfg_);
  const Vec a = pinv.end.x;                   // P_hat^{-1}(zs)
  const Mat d_pinv = pinv.spatial();
  const Mat d_ret = flow_jacobian(*vhat_, {0.0, a}, 1.0, cfg_).spatial();
  const Mat d_sigma = flow_jacobian(*vhat_, {0.0, a}, t, cfg_).spatial();

  const double r = bump(t);
  const double dr = bump_derivative(t);
  Sample out;
  vhat_->eval(z0, out.U);
  if (dr != 0.0) {
    const Vec gamma_gen = d_ret * iso_.generator(r, a);
    out.U.tail(m) += dr * (d_sigma * (d_pinv * gamma_gen));
  }
  out.preimage = iso_.inverse(r, a);
  out.det = d_sigma.determinant() * d_pinv.determinant() * d_ret.determinant() * iso_.jacobian_det(r, out.preimage);
  out.rho = section_density(*v_, out.preimage) / out.det;
  return out;
}

Vec TransportFamily::correction(double t, const Vec& x) const {
  const int m = dim();
  const Vec U = sample(t, x).U;
  Vec z(m + 1);
  z[0] = reduce_time(t);
  z.tail(m) = x;
  Vec vh;
  vhat_->eval(z, vh);
  return (U - vh).tail(m);
}

TorusPoint transport_eval(const TransportFamily& family, double s, const TorusPoint& x) {
  return TorusPoint::wrap(family.eval(s, x.coords()));
}

double transport_flow_check(const TransportFamily& family, double s1, double s2, const std::vector<CylPoint>& samples) {
  double worst = 0.0;
  for (const auto& p : samples) {
    const double t = p.t();
    const Vec& x = p.x().coords();
    const Vec y = family.inverse(t, x);
    // T^{s1}(t, x), then T^{s2} of that
    const double t1 = t + s1;
    const Vec x1 = family.eval(t1, y);
    const double t2 = t1 + s2;
    const Vec lhs = family.eval(t2, family.inverse(t1, x1));
    // T^{s1 + s2}(t, x)
    const double t3 = t + (s1 + s2);
    const Vec rhs = family.eval(t3, y);
    worst = std::max(worst, std::abs(t2 - t3));
    worst = std::max(worst, torus_dist(TorusPoint::wrap(lhs), TorusPoint::wrap(rhs)));
  }
  return worst;
}

void SuspensionField::eval(const Vec& z, Vec& out) const {
  const auto s = family_->sample(z[0], z.tail(z.size() - 1));
  out = s.rho * s.U;
}

void GeneratedField::eval(const Vec& z, Vec& out) const { out = family_->sample(z[0], z.tail(z.size() - 1)).U; }

Vec field_U(const TransportFamily& family, double t, const TorusPoint& x) { return family.sample(t, x.coords()).U; }

double density_rho(const TransportFamily& family, double t, const TorusPoint& x) {
  return family.sample(t, x.coords()).rho;
}

Suspension suspension_build(std::shared_ptr<const VectorField> v, const Isotopy& iso, const FlowConfig& cfg,
                            const BuildOptions& opts) {
  if (!v) throw Error(ErrorKind::Precondition, "suspension_build: null field", "validate");
  const int m = v->dim();

  const FieldReport rep = field_validate(*v, opts.validation_grid, opts.divergence_tolerance);
  if (!rep.positive_time) {
    std::ostringstream os;
    os << "field violates condition A (positive time component): min v_T = " << rep.min_time_speed;
    throw Error(ErrorKind::Precondition, os.str(), "validate");
  }
  if (!rep.volume_preserving) {
    std::ostringstream os;
    os << "field violates condition B (volume preservation): max |div v| = " << rep.max_abs_divergence;
    throw Error(ErrorKind::Precondition, os.str(), "validate");
  }

  try {
    (void)normalize(v, opts.validation_grid);
  } catch (const Error& e) {
    throw e.with_stage("normalize");
  }

  std::shared_ptr<const TransportFamily> family;
  try {
    family = std::make_shared<const TransportFamily>(v, iso, cfg, opts.route);
  } catch (const Error& e) {
    throw e.with_stage("transport");
  }

  // every eta_s must have unit Jacobian determinant
  const auto pts = grid(opts.hypothesis_grid, m);
  for (double s : {0.25, 0.5, 0.75, 1.0}) {
    for (const auto& p : pts) {
      const double d = iso.jacobian_det(s, p.coords());
      if (!(std::abs(d - 1.0) <= opts.determinant_tolerance)) {
        std::ostringstream os;
        os << "isotopy violates the lambda-preservation hypothesis: det D gamma_s = " << d << " at s = " << s
           << ", x = " << point_str(p.coords());
        throw Error(ErrorKind::ConstructionFailure, os.str(), "density");
      }
    }
  }
  try {
    for (double t : {0.0, 0.5}) (void)family->sample(t, pts.front().coords());
  } catch (const Error& e) {
    throw e.with_stage("density");
  }

  Suspension out;
  out.family = family;
  out.u = std::make_shared<const SuspensionField>(family);
  out.U = std::make_shared<const GeneratedField>(family);
  return out;
}

std::vector<PerturbationRow> perturbation_experiment(std::shared_ptr<const VectorField> v, const MapExpr& base,
                                                     const std::vector<double>& scales, const FlowConfig& cfg,
                                                     int n_grid) {
  const int m = v->dim();
  const auto pts = grid(n_grid, m);
  std::vector<PerturbationRow> rows;
  for (double scale : scales) {
    const auto sus = suspension_build(v, Isotopy(base.scaled(scale)), cfg);
    double sup = 0.0;
    Vec z(m + 1), uu(m + 1), vv(m + 1);
    for (int j = 0; j < n_grid; ++j) {
      z[0] = static_cast<double>(j) / n_grid;
      for (const auto& p : pts) {
        z.tail(m) = p.coords();
        sus.u->eval(z, uu);
        v->eval(z, vv);
        sup = std::max(sup, (uu - vv).cwiseAbs().maxCoeff());
      }
    }
    rows.push_back({scale, sup});
  }
  return rows;
}

}  // namespace vps
