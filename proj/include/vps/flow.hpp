#pragma once

#include "vps/field.hpp"
#include "vps/geometry.hpp"

namespace vps {

enum class JacobianMode {
  Auto,              ///< variational when the field has closed-form partials, else finite differences
  Variational,
  FiniteDifference,  ///< central differences of the flow map, step 1e-5
};

/// Fixed-step classical RK4 on the cover.
struct FlowConfig {
  double step = 1e-3;
  double crossing_tol = 1e-12;  ///< |t - 1| at the located section crossing
  JacobianMode jacobian = JacobianMode::Auto;

  /// Throws Precondition unless 0 < step <= 1/10 and 0 < crossing_tol <= step^2.
  void validate() const;
};

/// One RK4 step of size h (h may be negative) for the state z = (t, x).
void rk4_step(const VectorField& v, Vec& z, double h);
/// One RK4 step for the state and its variational matrix M' = Dv(z) M.
void rk4_step_variational(const VectorField& v, Vec& z, Mat& m, double h);

/// Integrate the state for `duration` (sign gives direction) with full steps of
/// size `step` and one final partial step landing exactly on the duration.
void integrate(const VectorField& v, Vec& z, double duration, double step);
void integrate_variational(const VectorField& v, Vec& z, Mat& m, double duration, double step);

LiftedPoint flow(const VectorField& v, const LiftedPoint& p, double duration, const FlowConfig& cfg);

struct FlowJacobian {
  LiftedPoint end;
  Mat jacobian;  ///< (1+m) x (1+m), index 0 is t
  Mat spatial() const { return jacobian.bottomRightCorner(jacobian.rows() - 1, jacobian.cols() - 1); }
};

FlowJacobian flow_jacobian(const VectorField& v, const LiftedPoint& p, double duration, const FlowConfig& cfg);

struct ReturnData {
  TorusPoint image;
  double return_time = 0.0;
  int winding = 1;
};

/// First return to {t = 0} starting from (0, x). Unit-time fields return at
/// time exactly 1 and skip crossing detection; otherwise the crossing inside
/// the last step is located by bisection on a re-integrated partial step.
/// Throws NoReturn if t has not advanced by 1 within 10 / min(v_T).
ReturnData poincare(const VectorField& v, const TorusPoint& x, const FlowConfig& cfg);

/// Spatial part of the lifted flow of a unit-time field from (0, x) for time s:
/// sigma_0 = id, sigma_1 = the Poincare map. Throws Precondition otherwise.
TorusPoint sigma_family(const VectorField& vhat, double s, const TorusPoint& x, const FlowConfig& cfg);

}  // namespace vps
