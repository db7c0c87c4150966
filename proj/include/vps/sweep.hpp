#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "vps/field.hpp"
#include "vps/flow.hpp"
#include "vps/geometry.hpp"
#include "vps/suspension.hpp"

namespace vps {

/// Serial is the reference loop; Parallel spreads indices over OpenMP threads.
/// Both produce bit-identical results: values are stored by index and the max
/// is reduced afterwards in index order.
enum class Exec { Serial, Parallel };

/// Thread count for parallel sweeps: VPS_NUM_THREADS when it holds a positive
/// integer, otherwise the OpenMP default (available parallelism).
int sweep_threads();

struct SweepResult {
  std::vector<double> values;  ///< per-index residual
  double max = 0.0;
  std::size_t argmax = 0;
};

/// Evaluates f(i) for i in [0, n) and reduces by max. A NaN value is reported as
/// the max. If any evaluation throws, the exception of the lowest failing index
/// is rethrown after the loop.
SweepResult sweep(std::size_t n, const std::function<double(std::size_t)>& f, Exec exec = Exec::Parallel);

/// (j / n, x) for j in [0, n) and x in grid(n, m); time is the slowest index.
std::vector<Vec> spacetime_grid(int n, int m);

/// torus_dist(P_u(x), target(x)) at each point.
SweepResult poincare_residuals(const VectorField& u, const std::vector<TorusPoint>& pts,
                               const std::function<TorusPoint(const TorusPoint&)>& target, const FlowConfig& cfg,
                               Exec exec = Exec::Parallel);

/// |div u| by central differences of step h at each state (t, x).
SweepResult divergence_residuals(const VectorField& u, const std::vector<Vec>& states, double h,
                                 Exec exec = Exec::Parallel);

/// max-norm of a(z) - b(z) at each state.
SweepResult field_difference(const VectorField& a, const VectorField& b, const std::vector<Vec>& states,
                             Exec exec = Exec::Parallel);

/// |rho(1, x) - rho(0, x)| at each point.
SweepResult rho_periodicity(const TransportFamily& family, const std::vector<TorusPoint>& pts,
                            Exec exec = Exec::Parallel);

/// max-norm of U - v_hat at each state.
SweepResult flatness_residuals(const TransportFamily& family, const std::vector<Vec>& states,
                               Exec exec = Exec::Parallel);

}  // namespace vps
