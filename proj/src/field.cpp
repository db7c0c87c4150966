#include "vps/field.hpp"

#include <cmath>
#include <sstream>

namespace vps {

void VectorField::eval_jacobian(const Vec& z, Vec& out, Mat& jac) const {
  constexpr double h = 1e-5;
  const int n = dim() + 1;
  eval(z, out);
  jac.resize(n, n);
  Vec zp = z, fp(n), fm(n);
  for (int j = 0; j < n; ++j) {
    zp[j] = z[j] + h;
    eval(zp, fp);
    zp[j] = z[j] - h;
    eval(zp, fm);
    zp[j] = z[j];
    jac.col(j) = (fp - fm) / (2.0 * h);
  }
}

void VectorField::eval_jacobian_raw(const double* z, double* out, double* jac) const {
  const int n = dim() + 1;
  Vec zv(n), v;
  Mat j;
  for (int i = 0; i < n; ++i) zv[i] = z[i];
  eval_jacobian(zv, v, j);
  for (int i = 0; i < n; ++i) {
    out[i] = v[i];
    for (int k = 0; k < n; ++k) jac[i * n + k] = j(i, k);
  }
}

Vec VectorField::operator()(double t, const Vec& x) const {
  Vec z(dim() + 1);
  z[0] = t;
  z.tail(dim()) = x;
  Vec out(dim() + 1);
  eval(z, out);
  return out;
}

TrigField::TrigField(std::vector<TrigPoly> components) : m_(static_cast<int>(components.size()) - 1), comps_(std::move(components)) {
  if (m_ < 1 || m_ > kMaxDim) throw Error(ErrorKind::DimensionMismatch, "field needs 1 + m components with m in [1, 7]");
  for (const auto& c : comps_) {
    if (c.nvars() != m_ + 1) throw Error(ErrorKind::DimensionMismatch, "field component has wrong number of variables");
  }
  sys_ = TrigSystem(comps_);
}

std::vector<std::string> TrigField::variable_names(int m) {
  std::vector<std::string> names{"t"};
  static const char* kShort[] = {"x", "y", "z"};
  for (int i = 0; i < m; ++i) names.emplace_back(m <= 3 ? kShort[i] : "x" + std::to_string(i + 1));
  return names;
}

TrigField TrigField::parse(const std::vector<std::string>& expressions) {
  const int m = static_cast<int>(expressions.size()) - 1;
  const auto names = variable_names(m);
  std::vector<TrigPoly> comps;
  comps.reserve(expressions.size());
  for (const auto& e : expressions) comps.push_back(TrigPoly::parse(e, names));
  return TrigField(std::move(comps));
}

void TrigField::eval(const Vec& z, Vec& out) const {
  out.resize(m_ + 1);
  sys_.values(z.data(), out.data());
}

void TrigField::eval_jacobian(const Vec& z, Vec& out, Mat& jac) const {
  const int n = m_ + 1;
  out.resize(n);
  jac.resize(n, n);
  double g[(kMaxDim + 1) * (kMaxDim + 1)];
  sys_.values_grads(z.data(), out.data(), g);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) jac(i, j) = g[i * n + j];
}

void TrigField::eval_jacobian_raw(const double* z, double* out, double* jac) const {
  sys_.values_grads(z, out, jac);
}

bool TrigField::unit_time() const { return comps_[0].is_constant() && comps_[0].constant() == 1.0; }

std::optional<double> TrigField::time_speed_bound() const {
  const double lb = comps_[0].lower_bound();
  if (lb > 0.0) return lb;
  return std::nullopt;
}

NormalizedField::NormalizedField(std::shared_ptr<const VectorField> base) : base_(std::move(base)) {
  if (!base_) throw Error(ErrorKind::Precondition, "normalize: null field");
  trig_ = dynamic_cast<const TrigField*>(base_.get());
}

void NormalizedField::eval(const Vec& z, Vec& out) const {
  base_->eval(z, out);
  const double vt = out[0];
  if (!(vt > 0.0)) throw Error(ErrorKind::Domain, "normalize: time component is not positive");
  out.tail(out.size() - 1) /= vt;
  out[0] = 1.0;
}

namespace {

// v / v_0 and its Jacobian (dv_i v_0 - v_i dv_0) / v_0^2, row-major.
template <int N>
void quotient(const double* v, const double* dv, double* out, double* jac) {
  const double inv = 1.0 / v[0];
  out[0] = 1.0;
  for (int j = 0; j < N; ++j) jac[j] = 0.0;
  for (int i = 1; i < N; ++i) {
    const double w = v[i] * inv;
    out[i] = w;
    for (int j = 0; j < N; ++j) jac[i * N + j] = (dv[i * N + j] - w * dv[j]) * inv;
  }
}

}  // namespace

void NormalizedField::eval_jacobian_raw(const double* z, double* out, double* jac) const {
  const int n = base_->dim() + 1;
  double v[kMaxDim + 1];
  double dv[(kMaxDim + 1) * (kMaxDim + 1)];
  if (trig_ != nullptr) {
    trig_->system().values_grads(z, v, dv);
  } else {
    base_->eval_jacobian_raw(z, v, dv);
  }
  if (!(v[0] > 0.0)) throw Error(ErrorKind::Domain, "normalize: time component is not positive");
  switch (n) {
    case 2: return quotient<2>(v, dv, out, jac);
    case 3: return quotient<3>(v, dv, out, jac);
    case 4: return quotient<4>(v, dv, out, jac);
    case 5: return quotient<5>(v, dv, out, jac);
    case 6: return quotient<6>(v, dv, out, jac);
    case 7: return quotient<7>(v, dv, out, jac);
    default: return quotient<kMaxDim + 1>(v, dv, out, jac);
  }
}

void NormalizedField::eval_jacobian(const Vec& z, Vec& out, Mat& jac) const {
  const int n = base_->dim() + 1;
  double g[(kMaxDim + 1) * (kMaxDim + 1)];
  out.resize(n);
  jac.resize(n, n);
  eval_jacobian_raw(z.data(), out.data(), g);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) jac(i, j) = g[i * n + j];
}

void ConstTimeField::eval(const Vec& z, Vec& out) const {
  (void)z;
  out = Vec::Zero(m_ + 1);
  out[0] = 1.0;
}

void ConstTimeField::eval_jacobian(const Vec& z, Vec& out, Mat& jac) const {
  eval(z, out);
  jac = Mat::Zero(m_ + 1, m_ + 1);
}

double divergence(const VectorField& v, const Vec& z) {
  Vec out;
  Mat jac;
  v.eval_jacobian(z, out, jac);
  return jac.trace();
}

double divergence_fd(const VectorField& v, const Vec& z, double h) {
  const int n = v.dim() + 1;
  Vec zp = z, fp(n), fm(n);
  double div = 0.0;
  for (int j = 0; j < n; ++j) {
    zp[j] = z[j] + h;
    v.eval(zp, fp);
    zp[j] = z[j] - h;
    v.eval(zp, fm);
    zp[j] = z[j];
    div += (fp[j] - fm[j]) / (2.0 * h);
  }
  return div;
}

double section_density(const VectorField& v, const Vec& x) { return v(0.0, x)[0]; }

FieldReport field_validate(const VectorField& v, int n_grid, double tolerance) {
  const int m = v.dim();
  const auto pts = grid(n_grid, m);
  FieldReport rep;
  rep.tolerance = tolerance;
  rep.min_time_speed = std::numeric_limits<double>::infinity();
  Vec z(m + 1), a(m + 1), b(m + 1);
  for (int j = 0; j < n_grid; ++j) {
    z[0] = static_cast<double>(j) / n_grid;
    for (const auto& p : pts) {
      z.tail(m) = p.coords();
      v.eval(z, a);
      rep.min_time_speed = std::min(rep.min_time_speed, a[0]);
      const double div = v.has_partials() ? divergence(v, z) : divergence_fd(v, z, 1e-5);
      rep.max_abs_divergence = std::max(rep.max_abs_divergence, std::abs(div));
    }
  }
  // wrap-consistency spot check: shifting any variable by one period must not change the value
  for (std::size_t k = 0; k < pts.size(); k += std::max<std::size_t>(1, pts.size() / 7)) {
    z[0] = 0.37;
    z.tail(m) = pts[k].coords();
    v.eval(z, a);
    for (int j = 0; j <= m; ++j) {
      Vec zs = z;
      zs[j] += 1.0;
      v.eval(zs, b);
      if ((a - b).cwiseAbs().maxCoeff() > 1e-9 * (1.0 + a.cwiseAbs().maxCoeff())) {
        std::ostringstream os;
        os << "field is not 1-periodic in variable " << j;
        throw Error(ErrorKind::InvalidField, os.str());
      }
    }
  }
  rep.positive_time = rep.min_time_speed > 0.0;
  rep.volume_preserving = rep.max_abs_divergence <= tolerance;
  return rep;
}

std::shared_ptr<const NormalizedField> normalize(std::shared_ptr<const VectorField> v, int n_grid) {
  if (!v) throw Error(ErrorKind::Precondition, "normalize: null field");
  const int m = v->dim();
  const auto pts = grid(n_grid, m);
  Vec z(m + 1), a(m + 1);
  for (int j = 0; j < n_grid; ++j) {
    z[0] = static_cast<double>(j) / n_grid;
    for (const auto& p : pts) {
      z.tail(m) = p.coords();
      v->eval(z, a);
      if (!(a[0] > 0.0)) {
        std::ostringstream os;
        os << "normalize: time component " << a[0] << " <= 0 at t = " << z[0];
        throw Error(ErrorKind::Domain, os.str(), "normalize");
      }
    }
  }
  return std::make_shared<const NormalizedField>(std::move(v));
}

}  // namespace vps
