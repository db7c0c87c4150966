#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "vps/field.hpp"
#include "vps/flow.hpp"
#include "vps/maps.hpp"

namespace vps {

/// How the family evaluates sigma_s o P_hat^{-1} o gamma_{tau(s)} with gamma_r = P_v o eta_r.
enum class Route {
  /// P_hat^{-1} o P_v cancels (the two return maps coincide), leaving sigma_s o eta_{tau(s)}.
  Reduced,
  /// Every factor evaluated separately: P_v by crossing detection on v, P_hat^{-1}
  /// by a reverse unit-time flow. Slow; kept as an independent check of Reduced.
  Literal,
};

/// The family T_M(s) = sigma_s o P_hat^{-1} o gamma_{tau(s)} of torus maps, with
/// T_M(0) = id and T_M(1) = Q = P_v o eta_1, together with the field U it
/// generates and the invariant density rho. Everything lives on the cover R x R^m.
class TransportFamily {
 public:
  TransportFamily(std::shared_ptr<const VectorField> v, Isotopy iso, FlowConfig cfg, Route route = Route::Reduced);

  int dim() const { return v_->dim(); }
  const VectorField& field() const { return *v_; }
  const NormalizedField& normalized() const { return *vhat_; }
  const Isotopy& isotopy() const { return iso_; }
  const FlowConfig& config() const { return cfg_; }
  Route route() const { return route_; }
  /// True when v_T is constant and v_M depends on t only. The lift is then the
  /// translation sigma_s(x) = x + (integral of v_M over [0, s]) / v_T, which the
  /// Reduced route uses in closed form instead of integrating.
  bool closed_form_lift() const { return drift_.has_value(); }

  /// T_M(s)(x) on lifted coordinates.
  Vec eval(double s, const Vec& x) const;
  /// T_M(s)^{-1}(x).
  Vec inverse(double s, const Vec& x) const;

  struct Sample {
    Vec U;          ///< (1, U_M)
    double rho;     ///< invariant density, u = rho U
    Vec preimage;   ///< T_M(t)^{-1}(x)
    double det;     ///< det D T_M(t) at the preimage
  };
  /// U and rho at (t, x). t outside [-1, 2) is first reduced mod 1.
  Sample sample(double t, const Vec& x) const;

  /// U_M - v_hat_M at (t, x): the correction carried by the isotopy.
  Vec correction(double t, const Vec& x) const;

 private:
  Sample sample_reduced(double t, const Vec& x) const;
  Sample sample_literal(double t, const Vec& x) const;
  Vec return_map(const Vec& y) const;        // P_v by crossing detection
  Vec unit_flow(const Vec& y, double dur) const;  // spatial part of the v_hat flow from (0, y)

  struct UniformDrift {
    double vt = 1.0;
    std::vector<double> mean;  // constant part of each v_M component
    std::vector<TrigPoly> osc;  // antiderivative in t of the rest
    Vec shift(double s) const;  // sigma_s(x) - x
  };
  Vec sigma(const Vec& y, double s) const;  // sigma_s, closed form when available

  std::shared_ptr<const VectorField> v_;
  std::shared_ptr<const NormalizedField> vhat_;
  std::optional<UniformDrift> drift_;
  Isotopy iso_;
  FlowConfig cfg_;
  Route route_;
};

TorusPoint transport_eval(const TransportFamily& family, double s, const TorusPoint& x);

/// Max over samples of the group-law defect of the flow
/// T^s(t, x) = (t + s, T_M(t + s) o T_M(t)^{-1}(x)): compares T^{s2} o T^{s1} with T^{s1 + s2}.
double transport_flow_check(const TransportFamily& family, double s1, double s2, const std::vector<CylPoint>& samples);

/// The suspension u = rho U. A VectorField, so it can be flowed and sectioned like any other.
class SuspensionField final : public VectorField {
 public:
  explicit SuspensionField(std::shared_ptr<const TransportFamily> family) : family_(std::move(family)) {}

  int dim() const override { return family_->dim(); }
  void eval(const Vec& z, Vec& out) const override;

  const TransportFamily& family() const { return *family_; }
  Vec U(double t, const Vec& x) const { return family_->sample(t, x).U; }
  double rho(double t, const Vec& x) const { return family_->sample(t, x).rho; }

 private:
  std::shared_ptr<const TransportFamily> family_;
};

/// The generated field U alone (unit time component).
class GeneratedField final : public VectorField {
 public:
  explicit GeneratedField(std::shared_ptr<const TransportFamily> family) : family_(std::move(family)) {}
  int dim() const override { return family_->dim(); }
  void eval(const Vec& z, Vec& out) const override;
  bool unit_time() const override { return true; }
  std::optional<double> time_speed_bound() const override { return 1.0; }

 private:
  std::shared_ptr<const TransportFamily> family_;
};

Vec field_U(const TransportFamily& family, double t, const TorusPoint& x);
double density_rho(const TransportFamily& family, double t, const TorusPoint& x);

struct BuildOptions {
  int validation_grid = 16;
  double divergence_tolerance = 1e-9;
  int hypothesis_grid = 6;          ///< samples for the unit-determinant check of the isotopy
  double determinant_tolerance = 1e-10;
  Route route = Route::Reduced;
};

struct Suspension {
  std::shared_ptr<const TransportFamily> family;
  std::shared_ptr<const SuspensionField> u;
  std::shared_ptr<const GeneratedField> U;
};

/// Builds u with P_u = Q = P_v o eta_1. Errors carry the stage that failed:
/// "validate", "normalize", "transport" or "density".
Suspension suspension_build(std::shared_ptr<const VectorField> v, const Isotopy& iso, const FlowConfig& cfg,
                            const BuildOptions& opts = {});

struct PerturbationRow {
  double scale = 0.0;
  double sup_diff = 0.0;  ///< max over the space-time grid of |u - v|_inf
};

/// For each scale, builds u from the isotopy to base.scaled(scale) and reports sup |u - v|
/// over grid(n) x {j / n}.
std::vector<PerturbationRow> perturbation_experiment(std::shared_ptr<const VectorField> v, const MapExpr& base,
                                                     const std::vector<double>& scales, const FlowConfig& cfg,
                                                     int n_grid = 10);

}  // namespace vps
