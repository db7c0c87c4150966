#pragma once

#include <string>
#include <variant>
#include <vector>

#include "vps/geometry.hpp"
#include "vps/trig_poly.hpp"

namespace vps {

/// x[axis] += profile(x); profile must not depend on x[axis]. Unit Jacobian determinant.
struct Shear {
  int axis = 0;
  TrigPoly profile;
};

/// x -> A x with A an integer matrix. Torus automorphism when det A = +-1.
struct Linear {
  Eigen::MatrixXi matrix;
};

/// x -> x + offset.
struct Translate {
  Vec offset;
};

/// x[axis] += profile(x[axis]) with |profile'| < 1: a circle diffeomorphism in one
/// coordinate that does NOT preserve volume. Exists so that configurations can
/// describe maps violating the volume hypothesis and have the construction reject them.
struct Stretch {
  int axis = 0;
  TrigPoly profile;
};

/// One factor of a map composition. Every variant supports a scale s so that
/// s = 0 is the identity and s = 1 is the full map (Linear only supports s = 1).
class ElementaryMap {
 public:
  using Variant = std::variant<Shear, Linear, Translate, Stretch>;

  ElementaryMap(Variant v, int dim);

  static ElementaryMap shear(int dim, int axis, TrigPoly profile);
  static ElementaryMap linear(Eigen::MatrixXi matrix);
  static ElementaryMap translate(Vec offset);
  static ElementaryMap stretch(int dim, int axis, TrigPoly profile);

  int dim() const { return dim_; }
  const Variant& variant() const { return v_; }
  bool is_linear() const { return std::holds_alternative<Linear>(v_); }
  bool volume_preserving() const { return !std::holds_alternative<Stretch>(v_); }
  std::string describe() const;

  /// Apply the scaled factor to lifted coordinates (no wrapping).
  Vec apply(const Vec& x, double s = 1.0) const;
  Vec apply_inverse(const Vec& y, double s = 1.0) const;
  Mat jacobian(const Vec& x, double s = 1.0) const;
  double jacobian_det(const Vec& x, double s = 1.0) const;
  /// d/ds of apply(x, s) at fixed x.
  Vec ds(const Vec& x, double s) const;

 private:
  Variant v_;
  int dim_;
  Eigen::MatrixXi inverse_;  // Linear only
};

/// Composition of elementary maps, applied left to right.
class MapExpr {
 public:
  explicit MapExpr(int dim) : dim_(dim) {}
  MapExpr(int dim, std::vector<ElementaryMap> factors);

  MapExpr& then(ElementaryMap f);

  int dim() const { return dim_; }
  bool empty() const { return factors_.empty(); }
  const std::vector<ElementaryMap>& factors() const { return factors_; }

  /// All factors scaled by `amplitude` (shear/stretch profiles and offsets multiplied).
  MapExpr scaled(double amplitude) const;

  Vec apply(const Vec& x, double s = 1.0) const;
  Vec apply_inverse(const Vec& y, double s = 1.0) const;
  Mat jacobian(const Vec& x, double s = 1.0) const;
  double jacobian_det(const Vec& x, double s = 1.0) const;

 private:
  int dim_;
  std::vector<ElementaryMap> factors_;
};

TorusPoint map_eval(const MapExpr& map, const TorusPoint& x);
TorusPoint map_inverse(const MapExpr& map, const TorusPoint& y);
Mat map_jacobian(const MapExpr& map, const TorusPoint& x);

/// Density defect of a map against the measure density(x) dx:
/// density(Q x) det DQ(x) - density(x). Zero iff Q preserves that measure at x.
template <class Density>
double measure_defect(const MapExpr& map, const Density& density, const Vec& x) {
  return density(map.apply(x)) * map.jacobian_det(x) - density(x);
}

/// The canonical path s -> eta_s from the identity (s = 0) to a map (s = 1):
/// every factor's profile or offset is multiplied by s. Parameters outside
/// [0, 1] are clamped, so eta is constant beyond the endpoints.
class Isotopy {
 public:
  /// Throws UnsupportedIsotopy if `target` contains a Linear factor.
  explicit Isotopy(MapExpr target);

  static Isotopy identity(int dim) { return Isotopy(MapExpr(dim)); }

  int dim() const { return target_.dim(); }
  const MapExpr& target() const { return target_; }

  Vec eval(double s, const Vec& x) const;
  Vec inverse(double s, const Vec& y) const;
  Mat jacobian(double s, const Vec& x) const;
  double jacobian_det(double s, const Vec& x) const;
  /// (d eta_s / ds)(eta_s^{-1}(y)), in closed form.
  Vec generator(double s, const Vec& y) const;

 private:
  MapExpr target_;
};

TorusPoint isotopy_eval(const Isotopy& iso, double s, const TorusPoint& x);
Vec isotopy_generator(const Isotopy& iso, double s, const TorusPoint& x);

/// Smooth monotone reparametrization of [0, 1], flat to all orders at both ends:
/// tau(s) = phi(s) / (phi(s) + phi(1 - s)), phi(r) = exp(-1/r) for r > 0, else 0.
double bump(double s);
/// d tau / ds.
double bump_derivative(double s);

}  // namespace vps
