#include "vps/sweep.hpp"

#include <cmath>
#include <cstdlib>
#include <exception>
#include <string>

#include <omp.h>

namespace vps {

int sweep_threads() {
  if (const char* env = std::getenv("VPS_NUM_THREADS")) {
    char* end = nullptr;
    const long n = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && n > 0 && n <= 4096) return static_cast<int>(n);
  }
  return omp_get_max_threads();
}

SweepResult sweep(std::size_t n, const std::function<double(std::size_t)>& f, Exec exec) {
  SweepResult res;
  res.values.assign(n, 0.0);
  std::vector<std::exception_ptr> errors(n);

  if (exec == Exec::Serial) {
    for (std::size_t i = 0; i < n; ++i) {
      try {
        res.values[i] = f(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    const long count = static_cast<long>(n);
#pragma omp parallel for schedule(dynamic) num_threads(sweep_threads())
    for (long i = 0; i < count; ++i) {
      const auto k = static_cast<std::size_t>(i);
      try {
        res.values[k] = f(k);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  }

  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  for (std::size_t i = 0; i < n; ++i) {
    const double v = res.values[i];
    if (std::isnan(v)) {
      res.max = v;
      res.argmax = i;
      break;
    }
    if (i == 0 || v > res.max) {
      res.max = v;
      res.argmax = i;
    }
  }
  return res;
}

std::vector<Vec> spacetime_grid(int n, int m) {
  const auto pts = grid(n, m);
  std::vector<Vec> out;
  out.reserve(pts.size() * static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) {
    for (const auto& p : pts) {
      Vec z(m + 1);
      z[0] = static_cast<double>(j) / n;
      z.tail(m) = p.coords();
      out.push_back(z);
    }
  }
  return out;
}

SweepResult poincare_residuals(const VectorField& u, const std::vector<TorusPoint>& pts,
                               const std::function<TorusPoint(const TorusPoint&)>& target, const FlowConfig& cfg,
                               Exec exec) {
  return sweep(
      pts.size(),
      [&](std::size_t i) { return torus_dist(poincare(u, pts[i], cfg).image, target(pts[i])); }, exec);
}

SweepResult divergence_residuals(const VectorField& u, const std::vector<Vec>& states, double h, Exec exec) {
  return sweep(states.size(), [&](std::size_t i) { return std::abs(divergence_fd(u, states[i], h)); }, exec);
}

SweepResult field_difference(const VectorField& a, const VectorField& b, const std::vector<Vec>& states,
                             Exec exec) {
  return sweep(
      states.size(),
      [&](std::size_t i) {
        Vec fa, fb;
        a.eval(states[i], fa);
        b.eval(states[i], fb);
        return (fa - fb).cwiseAbs().maxCoeff();
      },
      exec);
}

SweepResult rho_periodicity(const TransportFamily& family, const std::vector<TorusPoint>& pts, Exec exec) {
  return sweep(
      pts.size(),
      [&](std::size_t i) {
        const Vec& x = pts[i].coords();
        return std::abs(family.sample(1.0, x).rho - family.sample(0.0, x).rho);
      },
      exec);
}

SweepResult flatness_residuals(const TransportFamily& family, const std::vector<Vec>& states, Exec exec) {
  return sweep(
      states.size(),
      [&](std::size_t i) {
        const Vec& z = states[i];
        const int m = family.dim();
        const Vec U = family.sample(z[0], z.tail(m)).U;
        Vec vh;
        family.normalized().eval(z, vh);
        return (U - vh).cwiseAbs().maxCoeff();
      },
      exec);
}

}  // namespace vps
