#include "vps/maps.hpp"

#include <cmath>
#include <sstream>

namespace vps {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

std::vector<std::string> axis_names(int dim) {
  static const char* kShort[] = {"x", "y", "z"};
  std::vector<std::string> names;
  for (int i = 0; i < dim; ++i) names.emplace_back(dim <= 3 ? kShort[i] : "x" + std::to_string(i + 1));
  return names;
}

Eigen::MatrixXi unimodular_inverse(const Eigen::MatrixXi& a) {
  const Eigen::MatrixXd ad = a.cast<double>();
  const double det = ad.determinant();
  if (std::abs(std::abs(det) - 1.0) > 1e-9) {
    std::ostringstream os;
    os << "linear factor is non-unimodular (det = " << det << ")";
    throw Error(ErrorKind::InvalidMap, os.str());
  }
  const Eigen::MatrixXd inv = ad.inverse();
  Eigen::MatrixXi out(a.rows(), a.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) out(i, j) = static_cast<int>(std::lround(inv(i, j)));
  if (a * out != Eigen::MatrixXi::Identity(a.rows(), a.cols())) {
    throw Error(ErrorKind::InvalidMap, "linear factor has no integer inverse");
  }
  return out;
}

void require_dim(const Vec& x, int dim) {
  if (x.size() != dim) throw Error(ErrorKind::DimensionMismatch, "map applied to point of wrong dimension");
}

// Solve z + s g(z) = target for z, where 1 + s g' > 0 everywhere.
double invert_circle_map(const TrigPoly& g, int axis, Vec pt, double s, double target) {
  double z = target;
  pt[axis] = z;
  z = target - s * g.value(pt.data());
  std::vector<double> grad(static_cast<std::size_t>(pt.size()));
  for (int it = 0; it < 100; ++it) {
    pt[axis] = z;
    const double f = z + s * g.value_grad(pt.data(), grad.data()) - target;
    const double df = 1.0 + s * grad[static_cast<std::size_t>(axis)];
    const double step = f / df;
    z -= step;
    if (std::abs(step) <= 1e-16 * std::max(1.0, std::abs(z))) return z;
  }
  pt[axis] = z;
  if (std::abs(z + s * g.value(pt.data()) - target) < 1e-13) return z;
  throw Error(ErrorKind::Inversion, "stretch inverse did not converge");
}

}  // namespace

ElementaryMap::ElementaryMap(Variant v, int dim) : v_(std::move(v)), dim_(dim) {
  if (dim_ < 1 || dim_ > kMaxDim) throw Error(ErrorKind::DimensionMismatch, "map dimension must be in [1, 7]");
  std::visit(Overloaded{
                 [&](const Shear& sh) {
                   if (sh.axis < 0 || sh.axis >= dim_) throw Error(ErrorKind::InvalidMap, "shear axis out of range");
                   if (sh.profile.nvars() != dim_)
                     throw Error(ErrorKind::DimensionMismatch, "shear profile has wrong number of variables");
                   if (sh.profile.depends_on(sh.axis))
                     throw Error(ErrorKind::InvalidMap, "shear profile depends on its own target axis");
                 },
                 [&](const Linear& li) {
                   if (li.matrix.rows() != dim_ || li.matrix.cols() != dim_)
                     throw Error(ErrorKind::DimensionMismatch, "linear factor has wrong shape");
                   inverse_ = unimodular_inverse(li.matrix);
                 },
                 [&](const Translate& tr) {
                   if (tr.offset.size() != dim_) throw Error(ErrorKind::DimensionMismatch, "translation has wrong length");
                   if (!tr.offset.allFinite()) throw Error(ErrorKind::InvalidMap, "non-finite translation");
                 },
                 [&](const Stretch& st) {
                   if (st.axis < 0 || st.axis >= dim_) throw Error(ErrorKind::InvalidMap, "stretch axis out of range");
                   if (st.profile.nvars() != dim_)
                     throw Error(ErrorKind::DimensionMismatch, "stretch profile has wrong number of variables");
                   for (int v = 0; v < dim_; ++v)
                     if (v != st.axis && st.profile.depends_on(v))
                       throw Error(ErrorKind::InvalidMap, "stretch profile may only depend on its own axis");
                   if (st.profile.derivative_bound(st.axis) >= 1.0)
                     throw Error(ErrorKind::InvalidMap, "stretch is not a diffeomorphism (|profile'| may reach 1)");
                 },
             },
             v_);
}

ElementaryMap ElementaryMap::shear(int dim, int axis, TrigPoly profile) {
  return ElementaryMap(Shear{axis, std::move(profile)}, dim);
}
ElementaryMap ElementaryMap::linear(Eigen::MatrixXi matrix) {
  const int dim = static_cast<int>(matrix.rows());
  return ElementaryMap(Linear{std::move(matrix)}, dim);
}
ElementaryMap ElementaryMap::translate(Vec offset) {
  const int dim = static_cast<int>(offset.size());
  return ElementaryMap(Translate{std::move(offset)}, dim);
}
ElementaryMap ElementaryMap::stretch(int dim, int axis, TrigPoly profile) {
  return ElementaryMap(Stretch{axis, std::move(profile)}, dim);
}

std::string ElementaryMap::describe() const {
  const auto names = axis_names(dim_);
  std::ostringstream os;
  std::visit(Overloaded{
                 [&](const Shear& sh) { os << "shear(" << names[sh.axis] << " += " << sh.profile.to_string(names) << ")"; },
                 [&](const Linear& li) {
                   os << "linear([";
                   for (int i = 0; i < li.matrix.rows(); ++i) {
                     os << (i ? ", [" : "[");
                     for (int j = 0; j < li.matrix.cols(); ++j) os << (j ? ", " : "") << li.matrix(i, j);
                     os << "]";
                   }
                   os << "])";
                 },
                 [&](const Translate& tr) {
                   os << "translate(";
                   for (int i = 0; i < tr.offset.size(); ++i) os << (i ? ", " : "") << tr.offset[i];
                   os << ")";
                 },
                 [&](const Stretch& st) {
                   os << "stretch(" << names[st.axis] << " += " << st.profile.to_string(names) << ")";
                 },
             },
             v_);
  return os.str();
}

Vec ElementaryMap::apply(const Vec& x, double s) const {
  require_dim(x, dim_);
  return std::visit(Overloaded{
                        [&](const Shear& sh) -> Vec {
                          Vec y = x;
                          y[sh.axis] += s * sh.profile.value(x.data());
                          return y;
                        },
                        [&](const Linear& li) -> Vec {
                          if (s != 1.0) throw Error(ErrorKind::UnsupportedIsotopy, "linear factor cannot be scaled");
                          return li.matrix.cast<double>() * x;
                        },
                        [&](const Translate& tr) -> Vec { return x + s * tr.offset; },
                        [&](const Stretch& st) -> Vec {
                          Vec y = x;
                          y[st.axis] += s * st.profile.value(x.data());
                          return y;
                        },
                    },
                    v_);
}

Vec ElementaryMap::apply_inverse(const Vec& y, double s) const {
  require_dim(y, dim_);
  return std::visit(Overloaded{
                        [&](const Shear& sh) -> Vec {
                          Vec x = y;
                          x[sh.axis] -= s * sh.profile.value(y.data());
                          return x;
                        },
                        [&](const Linear&) -> Vec {
                          if (s != 1.0) throw Error(ErrorKind::UnsupportedIsotopy, "linear factor cannot be scaled");
                          return inverse_.cast<double>() * y;
                        },
                        [&](const Translate& tr) -> Vec { return y - s * tr.offset; },
                        [&](const Stretch& st) -> Vec {
                          Vec x = y;
                          x[st.axis] = invert_circle_map(st.profile, st.axis, y, s, y[st.axis]);
                          return x;
                        },
                    },
                    v_);
}

Mat ElementaryMap::jacobian(const Vec& x, double s) const {
  require_dim(x, dim_);
  Mat j = Mat::Identity(dim_, dim_);
  std::visit(Overloaded{
                 [&](const Shear& sh) {
                   Vec g(dim_);
                   sh.profile.value_grad(x.data(), g.data());
                   for (int c = 0; c < dim_; ++c) j(sh.axis, c) += s * g[c];
                 },
                 [&](const Linear& li) {
                   if (s != 1.0) throw Error(ErrorKind::UnsupportedIsotopy, "linear factor cannot be scaled");
                   j = li.matrix.cast<double>();
                 },
                 [&](const Translate&) {},
                 [&](const Stretch& st) {
                   Vec g(dim_);
                   st.profile.value_grad(x.data(), g.data());
                   j(st.axis, st.axis) += s * g[st.axis];
                 },
             },
             v_);
  return j;
}

double ElementaryMap::jacobian_det(const Vec& x, double s) const {
  return std::visit(Overloaded{
                        [&](const Shear&) { return 1.0; },
                        [&](const Linear& li) { return li.matrix.cast<double>().determinant(); },
                        [&](const Translate&) { return 1.0; },
                        [&](const Stretch& st) {
                          Vec g(dim_);
                          st.profile.value_grad(x.data(), g.data());
                          return 1.0 + s * g[st.axis];
                        },
                    },
                    v_);
}

Vec ElementaryMap::ds(const Vec& x, double s) const {
  (void)s;
  Vec d = Vec::Zero(dim_);
  std::visit(Overloaded{
                 [&](const Shear& sh) { d[sh.axis] = sh.profile.value(x.data()); },
                 [&](const Linear&) {
                   throw Error(ErrorKind::UnsupportedIsotopy, "no scaling schedule for a linear factor");
                 },
                 [&](const Translate& tr) { d = tr.offset; },
                 [&](const Stretch& st) { d[st.axis] = st.profile.value(x.data()); },
             },
             v_);
  return d;
}

MapExpr::MapExpr(int dim, std::vector<ElementaryMap> factors) : dim_(dim) {
  for (auto& f : factors) then(std::move(f));
}

MapExpr& MapExpr::then(ElementaryMap f) {
  if (f.dim() != dim_) throw Error(ErrorKind::DimensionMismatch, "map factor dimension mismatch");
  factors_.push_back(std::move(f));
  return *this;
}

MapExpr MapExpr::scaled(double amplitude) const {
  MapExpr out(dim_);
  for (const auto& f : factors_) {
    out.then(std::visit(Overloaded{
                            [&](const Shear& sh) { return ElementaryMap::shear(dim_, sh.axis, sh.profile.scaled(amplitude)); },
                            [&](const Linear&) -> ElementaryMap {
                              throw Error(ErrorKind::UnsupportedIsotopy, "linear factor cannot be scaled");
                            },
                            [&](const Translate& tr) { return ElementaryMap::translate(amplitude * tr.offset); },
                            [&](const Stretch& st) {
                              return ElementaryMap::stretch(dim_, st.axis, st.profile.scaled(amplitude));
                            },
                        },
                        f.variant()));
  }
  return out;
}

Vec MapExpr::apply(const Vec& x, double s) const {
  Vec y = x;
  for (const auto& f : factors_) y = f.apply(y, s);
  return y;
}

Vec MapExpr::apply_inverse(const Vec& y, double s) const {
  Vec x = y;
  for (auto it = factors_.rbegin(); it != factors_.rend(); ++it) x = it->apply_inverse(x, s);
  return x;
}

Mat MapExpr::jacobian(const Vec& x, double s) const {
  Mat j = Mat::Identity(dim_, dim_);
  Vec p = x;
  for (const auto& f : factors_) {
    j = f.jacobian(p, s) * j;
    p = f.apply(p, s);
  }
  return j;
}

double MapExpr::jacobian_det(const Vec& x, double s) const {
  double d = 1.0;
  Vec p = x;
  for (const auto& f : factors_) {
    d *= f.jacobian_det(p, s);
    p = f.apply(p, s);
  }
  return d;
}

TorusPoint map_eval(const MapExpr& map, const TorusPoint& x) { return TorusPoint::wrap(map.apply(x.coords())); }
TorusPoint map_inverse(const MapExpr& map, const TorusPoint& y) {
  return TorusPoint::wrap(map.apply_inverse(y.coords()));
}
Mat map_jacobian(const MapExpr& map, const TorusPoint& x) { return map.jacobian(x.coords()); }

Isotopy::Isotopy(MapExpr target) : target_(std::move(target)) {
  for (const auto& f : target_.factors()) {
    if (f.is_linear()) {
      throw Error(ErrorKind::UnsupportedIsotopy,
                  "linear factor " + f.describe() + " has no scaling schedule; supply it as a shear decomposition");
    }
  }
}

namespace {
double clamp01(double s) { return s <= 0.0 ? 0.0 : (s >= 1.0 ? 1.0 : s); }
}  // namespace

Vec Isotopy::eval(double s, const Vec& x) const { return target_.apply(x, clamp01(s)); }
Vec Isotopy::inverse(double s, const Vec& y) const { return target_.apply_inverse(y, clamp01(s)); }
Mat Isotopy::jacobian(double s, const Vec& x) const { return target_.jacobian(x, clamp01(s)); }
double Isotopy::jacobian_det(double s, const Vec& x) const { return target_.jacobian_det(x, clamp01(s)); }

Vec Isotopy::generator(double s, const Vec& y) const {
  const int m = dim();
  if (s < 0.0 || s > 1.0 || target_.empty()) return Vec::Zero(m);
  const auto& fs = target_.factors();
  const std::size_t n = fs.size();
  // chain[k] is the point entering factor k
  std::vector<Vec> chain(n + 1);
  chain[n] = y;
  for (std::size_t k = n; k-- > 0;) chain[k] = fs[k].apply_inverse(chain[k + 1], s);
  Vec g = Vec::Zero(m);
  for (std::size_t k = 0; k < n; ++k) g = fs[k].jacobian(chain[k], s) * g + fs[k].ds(chain[k], s);
  return g;
}

TorusPoint isotopy_eval(const Isotopy& iso, double s, const TorusPoint& x) {
  return TorusPoint::wrap(iso.eval(s, x.coords()));
}
Vec isotopy_generator(const Isotopy& iso, double s, const TorusPoint& x) { return iso.generator(s, x.coords()); }

namespace {
// exp(-1/r) underflows to zero for r below ~1/745
constexpr double kPhiCutoff = 1.0 / 750.0;
double phi(double r) { return r > kPhiCutoff ? std::exp(-1.0 / r) : 0.0; }
double dphi(double r) { return r > kPhiCutoff ? std::exp(-1.0 / r) / (r * r) : 0.0; }
}  // namespace

double bump(double s) {
  if (s <= 0.0) return 0.0;
  if (s >= 1.0) return 1.0;
  const double a = phi(s);
  const double b = phi(1.0 - s);
  return a / (a + b);
}

double bump_derivative(double s) {
  if (s <= 0.0 || s >= 1.0) return 0.0;
  const double a = phi(s);
  const double b = phi(1.0 - s);
  const double den = a + b;
  return (dphi(s) * b + a * dphi(1.0 - s)) / (den * den);
}

}  // namespace vps
