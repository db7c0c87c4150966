#include "vps/geometry.hpp"

#include <cmath>
#include <sstream>

namespace vps {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidPoint: return "invalid-point";
    case ErrorKind::DimensionMismatch: return "dimension-mismatch";
    case ErrorKind::Resource: return "resource";
    case ErrorKind::InvalidMap: return "invalid-map";
    case ErrorKind::UnsupportedIsotopy: return "unsupported-isotopy";
    case ErrorKind::InvalidField: return "invalid-field";
    case ErrorKind::Domain: return "domain";
    case ErrorKind::BlowUp: return "blow-up";
    case ErrorKind::NoReturn: return "no-return";
    case ErrorKind::Precondition: return "precondition";
    case ErrorKind::Inversion: return "inversion";
    case ErrorKind::ConstructionFailure: return "construction-failure";
    case ErrorKind::Schema: return "schema";
  }
  return "unknown";
}

double wrap_unit(double value) {
  if (!std::isfinite(value)) {
    throw Error(ErrorKind::InvalidPoint, "non-finite coordinate");
  }
  double r = value - std::floor(value);
  // value slightly below an integer can round up to exactly 1
  if (r >= 1.0) r = 0.0;
  return r;
}

TorusPoint::TorusPoint(const Vec& coords) : coords_(coords) {
  if (coords_.size() < 1 || coords_.size() > kMaxDim) {
    throw Error(ErrorKind::DimensionMismatch, "torus dimension must be in [1, 7]");
  }
  for (int i = 0; i < coords_.size(); ++i) {
    if (!std::isfinite(coords_[i]) || coords_[i] < 0.0 || coords_[i] >= 1.0) {
      std::ostringstream os;
      os << "coordinate " << i << " = " << coords_[i] << " outside [0, 1)";
      throw Error(ErrorKind::InvalidPoint, os.str());
    }
  }
}

TorusPoint::TorusPoint(std::initializer_list<double> coords) {
  Vec v(static_cast<int>(coords.size()));
  int i = 0;
  for (double c : coords) v[i++] = c;
  *this = TorusPoint(v);
}

TorusPoint TorusPoint::wrap(const Vec& lifted) {
  Vec r(lifted.size());
  for (int i = 0; i < lifted.size(); ++i) r[i] = wrap_unit(lifted[i]);
  return TorusPoint(r);
}

CylPoint::CylPoint(double t, TorusPoint x) : t_(t), x_(std::move(x)) {
  if (!std::isfinite(t_) || t_ < 0.0 || t_ >= 1.0) {
    throw Error(ErrorKind::InvalidPoint, "circle coordinate outside [0, 1)");
  }
}

CylPoint wrap(const LiftedPoint& p) { return CylPoint(wrap_unit(p.t), TorusPoint::wrap(p.x)); }

double torus_dist(const TorusPoint& p, const TorusPoint& q) {
  if (p.dim() != q.dim()) {
    throw Error(ErrorKind::DimensionMismatch, "torus_dist: dimension mismatch");
  }
  double d = 0.0;
  for (int i = 0; i < p.dim(); ++i) {
    const double a = std::abs(p[i] - q[i]);
    d = std::max(d, std::min(a, 1.0 - a));
  }
  return d;
}

std::vector<TorusPoint> grid(int n, int m, std::size_t budget) {
  if (n < 1) throw Error(ErrorKind::Precondition, "grid: n must be >= 1");
  if (m < 1 || m > kMaxDim) throw Error(ErrorKind::DimensionMismatch, "grid: dimension must be in [1, 7]");
  std::size_t count = 1;
  for (int i = 0; i < m; ++i) {
    count *= static_cast<std::size_t>(n);
    if (count > budget) {
      std::ostringstream os;
      os << "grid: " << n << "^" << m << " points exceed budget " << budget;
      throw Error(ErrorKind::Resource, os.str());
    }
  }
  std::vector<TorusPoint> pts;
  pts.reserve(count);
  std::vector<int> idx(m, 0);
  Vec c(m);
  for (std::size_t k = 0; k < count; ++k) {
    for (int i = 0; i < m; ++i) c[i] = static_cast<double>(idx[i]) / n;
    pts.emplace_back(c);
    for (int i = m - 1; i >= 0; --i) {
      if (++idx[i] < n) break;
      idx[i] = 0;
    }
  }
  return pts;
}

}  // namespace vps
