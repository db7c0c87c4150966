#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "vps/geometry.hpp"
#include "vps/trig_poly.hpp"

namespace vps {

/// A smooth vector field on T x T^m, evaluated on the cover R x R^m.
///
/// States are packed as z = (t, x_1, ..., x_m); values as (u_T, u_M).
/// Jacobians are (1+m) x (1+m) with row i = component, column j = d/dz_j.
class VectorField {
 public:
  virtual ~VectorField() = default;

  virtual int dim() const = 0;
  virtual void eval(const Vec& z, Vec& out) const = 0;

  virtual bool has_partials() const { return false; }
  /// Value and Jacobian. The default uses central differences with step 1e-5.
  virtual void eval_jacobian(const Vec& z, Vec& out, Mat& jac) const;
  /// The same into caller buffers: out has dim() + 1 entries, jac is row-major
  /// (dim() + 1) x (dim() + 1). The default goes through eval_jacobian.
  virtual void eval_jacobian_raw(const double* z, double* out, double* jac) const;

  /// True when u_T is identically 1 (the flow advances t at unit speed).
  virtual bool unit_time() const { return false; }
  /// A proven positive lower bound on u_T, if one is known.
  virtual std::optional<double> time_speed_bound() const { return std::nullopt; }

  Vec operator()(double t, const Vec& x) const;
};

/// Field whose components are trig polynomials in (t, x_1..x_m).
class TrigField final : public VectorField {
 public:
  /// components[0] is u_T; components[1 + i] is the x_i component.
  explicit TrigField(std::vector<TrigPoly> components);

  /// Parse "t", "x", "y", ... expressions; see variable_names().
  static TrigField parse(const std::vector<std::string>& expressions);
  static std::vector<std::string> variable_names(int m);

  int dim() const override { return m_; }
  void eval(const Vec& z, Vec& out) const override;
  bool has_partials() const override { return true; }
  void eval_jacobian(const Vec& z, Vec& out, Mat& jac) const override;
  void eval_jacobian_raw(const double* z, double* out, double* jac) const override;
  bool unit_time() const override;
  std::optional<double> time_speed_bound() const override;

  const std::vector<TrigPoly>& components() const { return comps_; }
  const TrigSystem& system() const { return sys_; }

 private:
  int m_;
  std::vector<TrigPoly> comps_;
  TrigSystem sys_;
};

/// v / v_T. Partials follow from the quotient rule.
class NormalizedField final : public VectorField {
 public:
  explicit NormalizedField(std::shared_ptr<const VectorField> base);

  int dim() const override { return base_->dim(); }
  void eval(const Vec& z, Vec& out) const override;
  bool has_partials() const override { return base_->has_partials(); }
  void eval_jacobian(const Vec& z, Vec& out, Mat& jac) const override;
  void eval_jacobian_raw(const double* z, double* out, double* jac) const override;
  bool unit_time() const override { return true; }
  std::optional<double> time_speed_bound() const override { return 1.0; }

  const VectorField& base() const { return *base_; }

 private:
  std::shared_ptr<const VectorField> base_;
  const TrigField* trig_ = nullptr;  // base_ viewed as a TrigField, for the direct path
};

/// The field (1, 0, ..., 0).
class ConstTimeField final : public VectorField {
 public:
  explicit ConstTimeField(int m) : m_(m) {}
  int dim() const override { return m_; }
  void eval(const Vec& z, Vec& out) const override;
  bool has_partials() const override { return true; }
  void eval_jacobian(const Vec& z, Vec& out, Mat& jac) const override;
  bool unit_time() const override { return true; }
  std::optional<double> time_speed_bound() const override { return 1.0; }

 private:
  int m_;
};

/// d u_T/dt + sum_i d u_{M,i}/dx_i at z, from the field's own partials.
double divergence(const VectorField& v, const Vec& z);
/// The same quantity by central differences with step `h` (any field).
double divergence_fd(const VectorField& v, const Vec& z, double h);

/// Density of the induced section volume i_v(dt ^ dx) restricted to {t = 0}: v_T(0, x).
double section_density(const VectorField& v, const Vec& x);

struct FieldReport {
  double min_time_speed = 0.0;
  double max_abs_divergence = 0.0;
  double tolerance = 0.0;
  bool positive_time = false;  ///< min u_T > 0
  bool volume_preserving = false;  ///< max |div| <= tolerance
  bool passed() const { return positive_time && volume_preserving; }
};

/// Samples u_T and the divergence on grid(n) x {j/n}. Throws InvalidField if
/// the field is not 1-periodic in every variable.
FieldReport field_validate(const VectorField& v, int n_grid, double tolerance = 1e-9);

/// v_hat = v / v_T. Throws Domain if v_T <= 0 at any of the samples used by
/// field_validate(v, n_grid).
std::shared_ptr<const NormalizedField> normalize(std::shared_ptr<const VectorField> v, int n_grid = 16);

}  // namespace vps
