#include "vps/flow.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>

#include <boost/math/tools/roots.hpp>

namespace vps {
namespace {

void check_finite(const Vec& z) {
  if (!z.allFinite()) throw Error(ErrorKind::BlowUp, "non-finite state during integration");
}

// Number of full steps and the final remainder for |duration|.
std::pair<long, double> split_duration(double duration, double step) {
  const double d = std::abs(duration);
  long n = static_cast<long>(std::floor(d / step));
  double r = d - static_cast<double>(n) * step;
  if (r < 0.0) {
    --n;
    r += step;
  }
  return {n, r};
}

bool use_variational(const VectorField& v, JacobianMode mode) {
  switch (mode) {
    case JacobianMode::Variational:
      if (!v.has_partials()) throw Error(ErrorKind::Precondition, "variational Jacobian requires closed-form partials");
      return true;
    case JacobianMode::FiniteDifference: return false;
    case JacobianMode::Auto: return v.has_partials();
  }
  return false;
}

}  // namespace

void FlowConfig::validate() const {
  if (!(step > 0.0) || step > 0.1) throw Error(ErrorKind::Precondition, "flow step must lie in (0, 1/10]");
  if (!(crossing_tol > 0.0) || crossing_tol > step * step)
    throw Error(ErrorKind::Precondition, "crossing tolerance must lie in (0, step^2]");
}

void rk4_step(const VectorField& v, Vec& z, double h) {
  const int n = static_cast<int>(z.size());
  Vec k1(n), k2(n), k3(n), k4(n), tmp(n);
  v.eval(z, k1);
  tmp = z + (0.5 * h) * k1;
  v.eval(tmp, k2);
  tmp = z + (0.5 * h) * k2;
  v.eval(tmp, k3);
  tmp = z + h * k3;
  v.eval(tmp, k4);
  z += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

void rk4_step_variational(const VectorField& v, Vec& z, Mat& m, double h) {
  const int n = static_cast<int>(z.size());
  Vec k1(n), k2(n), k3(n), k4(n), tmp(n);
  Mat j1, j2, j3, j4;
  v.eval_jacobian(z, k1, j1);
  const Mat a1 = j1 * m;
  tmp = z + (0.5 * h) * k1;
  v.eval_jacobian(tmp, k2, j2);
  const Mat a2 = j2 * (m + (0.5 * h) * a1);
  tmp = z + (0.5 * h) * k2;
  v.eval_jacobian(tmp, k3, j3);
  const Mat a3 = j3 * (m + (0.5 * h) * a2);
  tmp = z + h * k3;
  v.eval_jacobian(tmp, k4, j4);
  const Mat a4 = j4 * (m + h * a3);
  z += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  m += (h / 6.0) * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
}

namespace {

// Same scheme as rk4_step_variational with a fixed-size K x K variational block
// taken from rows/cols [off, off + K) of the field Jacobian. off = 1 integrates
// only the spatial block, which is closed when the time component is constant.
template <int K>
void integrate_variational_fixed(const VectorField& v, Vec& z, Mat& m, double duration, double step, int off) {
  using Block = Eigen::Matrix<double, K, K>;
  using JBlock = Eigen::Map<const Eigen::Matrix<double, K, K, Eigen::RowMajor>, 0, Eigen::OuterStride<>>;
  constexpr int kN = kMaxDim + 1;
  const int n = static_cast<int>(z.size());
  Block mb = m.block(off, off, K, K);
  double x[kN], tmp[kN], k1[kN], k2[kN], k3[kN], k4[kN], jac[kN * kN];
  for (int i = 0; i < n; ++i) x[i] = z[i];
  const JBlock jb(jac + off * n + off, Eigen::OuterStride<>(n));
  auto one = [&](double h) {
    v.eval_jacobian_raw(x, k1, jac);
    const Block a1 = jb * mb;
    for (int i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * h * k1[i];
    v.eval_jacobian_raw(tmp, k2, jac);
    const Block a2 = jb * (mb + (0.5 * h) * a1);
    for (int i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * h * k2[i];
    v.eval_jacobian_raw(tmp, k3, jac);
    const Block a3 = jb * (mb + (0.5 * h) * a2);
    for (int i = 0; i < n; ++i) tmp[i] = x[i] + h * k3[i];
    v.eval_jacobian_raw(tmp, k4, jac);
    const Block a4 = jb * (mb + h * a3);
    for (int i = 0; i < n; ++i) x[i] += (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    mb += (h / 6.0) * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
  };
  const double sign = duration < 0.0 ? -1.0 : 1.0;
  const auto [steps, r] = split_duration(duration, step);
  for (long i = 0; i < steps; ++i) one(sign * step);
  if (r > 0.0) one(sign * r);
  for (int i = 0; i < n; ++i) z[i] = x[i];
  m.block(off, off, K, K) = mb;
}

void integrate_variational_block(const VectorField& v, Vec& z, Mat& m, double duration, double step, int off) {
  switch (static_cast<int>(z.size()) - off) {
    case 1: return integrate_variational_fixed<1>(v, z, m, duration, step, off);
    case 2: return integrate_variational_fixed<2>(v, z, m, duration, step, off);
    case 3: return integrate_variational_fixed<3>(v, z, m, duration, step, off);
    case 4: return integrate_variational_fixed<4>(v, z, m, duration, step, off);
    case 5: return integrate_variational_fixed<5>(v, z, m, duration, step, off);
    case 6: return integrate_variational_fixed<6>(v, z, m, duration, step, off);
    case 7: return integrate_variational_fixed<7>(v, z, m, duration, step, off);
    case 8: return integrate_variational_fixed<8>(v, z, m, duration, step, off);
    default: throw Error(ErrorKind::DimensionMismatch, "variational block size out of range");
  }
}

}  // namespace

void integrate(const VectorField& v, Vec& z, double duration, double step) {
  if (!std::isfinite(duration)) throw Error(ErrorKind::Precondition, "flow duration must be finite");
  const double sign = duration < 0.0 ? -1.0 : 1.0;
  const auto [n, r] = split_duration(duration, step);
  for (long i = 0; i < n; ++i) rk4_step(v, z, sign * step);
  if (r > 0.0) rk4_step(v, z, sign * r);
  check_finite(z);
}

void integrate_variational(const VectorField& v, Vec& z, Mat& m, double duration, double step) {
  if (!std::isfinite(duration)) throw Error(ErrorKind::Precondition, "flow duration must be finite");
  integrate_variational_block(v, z, m, duration, step, 0);
  check_finite(z);
  if (!m.allFinite()) throw Error(ErrorKind::BlowUp, "non-finite variational matrix");
}

namespace {
Vec pack(const LiftedPoint& p) {
  Vec z(p.x.size() + 1);
  z[0] = p.t;
  z.tail(p.x.size()) = p.x;
  return z;
}
LiftedPoint unpack(const Vec& z) { return {z[0], z.tail(z.size() - 1)}; }
}  // namespace

LiftedPoint flow(const VectorField& v, const LiftedPoint& p, double duration, const FlowConfig& cfg) {
  if (p.x.size() != v.dim()) throw Error(ErrorKind::DimensionMismatch, "flow: point dimension mismatch");
  Vec z = pack(p);
  integrate(v, z, duration, cfg.step);
  return unpack(z);
}

FlowJacobian flow_jacobian(const VectorField& v, const LiftedPoint& p, double duration, const FlowConfig& cfg) {
  if (p.x.size() != v.dim()) throw Error(ErrorKind::DimensionMismatch, "flow: point dimension mismatch");
  const int n = v.dim() + 1;
  Vec z = pack(p);
  if (use_variational(v, cfg.jacobian)) {
    Mat m = Mat::Identity(n, n);
    if (!v.unit_time()) {
      integrate_variational(v, z, m, duration, cfg.step);
      return {unpack(z), m};
    }
    // t' = 1: the spatial block evolves on its own; the t column follows from
    // D phi(z0) v(z0) = v(phi(z0)) for the autonomous lifted flow.
    if (!std::isfinite(duration)) throw Error(ErrorKind::Precondition, "flow duration must be finite");
    Vec v0, v1;
    v.eval(z, v0);
    integrate_variational_block(v, z, m, duration, cfg.step, 1);
    check_finite(z);
    if (!m.allFinite()) throw Error(ErrorKind::BlowUp, "non-finite variational matrix");
    v.eval(z, v1);
    const int k = n - 1;
    m.col(0).tail(k) = v1.tail(k) - m.bottomRightCorner(k, k) * v0.tail(k);
    return {unpack(z), m};
  }
  constexpr double h = 1e-5;
  Mat m(n, n);
  const Vec z0 = z;
  integrate(v, z, duration, cfg.step);
  for (int j = 0; j < n; ++j) {
    Vec zp = z0, zm = z0;
    zp[j] += h;
    zm[j] -= h;
    integrate(v, zp, duration, cfg.step);
    integrate(v, zm, duration, cfg.step);
    m.col(j) = (zp - zm) / (2.0 * h);
  }
  return {unpack(z), m};
}

ReturnData poincare(const VectorField& v, const TorusPoint& x, const FlowConfig& cfg) {
  if (x.dim() != v.dim()) throw Error(ErrorKind::DimensionMismatch, "poincare: point dimension mismatch");
  const int m = v.dim();
  Vec z(m + 1);
  z[0] = 0.0;
  z.tail(m) = x.coords();
  if (v.unit_time()) {
    integrate(v, z, 1.0, cfg.step);
    return {TorusPoint::wrap(z.tail(m)), 1.0, 1};
  }

  const auto bound = v.time_speed_bound();
  double min_rate = bound ? *bound : std::numeric_limits<double>::infinity();
  const double h = cfg.step;
  double s = 0.0;
  for (;;) {
    Vec next = z;
    rk4_step(v, next, h);
    check_finite(next);
    if (next[0] >= 1.0) {
      // root of t(delta) - 1 for a partial step of length delta in (0, h]
      Vec probe = next;
      double delta = h;
      double best = std::abs(next[0] - 1.0);
      auto crossing = [&](double d) {
        Vec p = z;
        rk4_step(v, p, d);
        check_finite(p);
        const double g = p[0] - 1.0;
        if (std::abs(g) <= best) {
          best = std::abs(g);
          probe = p;
          delta = d;
        }
        return g;
      };
      auto done = [&](double a, double b) {
        return best <= cfg.crossing_tol || b - a <= std::numeric_limits<double>::epsilon() * h;
      };
      if (best > cfg.crossing_tol) {
        std::uintmax_t iters = 200;
        boost::math::tools::toms748_solve(crossing, 0.0, h, z[0] - 1.0, next[0] - 1.0, done, iters);
      }
      return {TorusPoint::wrap(probe.tail(m)), s + delta, 1};
    }
    if (!bound) {
      const double rate = (next[0] - z[0]) / h;
      if (!(rate > 0.0)) {
        throw Error(ErrorKind::NoReturn, "time component is not positive along the orbit; no return to the section");
      }
      min_rate = std::min(min_rate, rate);
    }
    z = next;
    s += h;
    if (s > 10.0 / min_rate) {
      std::ostringstream os;
      os << "no return to the section within duration " << 10.0 / min_rate;
      throw Error(ErrorKind::NoReturn, os.str());
    }
  }
}

TorusPoint sigma_family(const VectorField& vhat, double s, const TorusPoint& x, const FlowConfig& cfg) {
  if (!vhat.unit_time()) throw Error(ErrorKind::Precondition, "sigma_family requires a normalized (unit-time) field");
  const auto end = flow(vhat, {0.0, x.coords()}, s, cfg);
  return TorusPoint::wrap(end.x);
}

}  // namespace vps
