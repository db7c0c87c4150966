#pragma once

#include <cstddef>
#include <vector>

#include "vps/types.hpp"

namespace vps {

/// Reduce a real number mod 1 into [0, 1). Throws InvalidPoint on non-finite input.
double wrap_unit(double value);

/// A point on the flat torus T^m with every coordinate in [0, 1).
class TorusPoint {
 public:
  TorusPoint() = default;
  /// Takes already-reduced coordinates; throws InvalidPoint if any lies outside [0, 1).
  explicit TorusPoint(const Vec& coords);
  TorusPoint(std::initializer_list<double> coords);

  /// Reduces arbitrary (lifted) coordinates mod 1.
  static TorusPoint wrap(const Vec& lifted);

  int dim() const { return static_cast<int>(coords_.size()); }
  const Vec& coords() const { return coords_; }
  double operator[](int i) const { return coords_[i]; }

  friend bool operator==(const TorusPoint& a, const TorusPoint& b) { return a.coords_ == b.coords_; }

 private:
  Vec coords_;
};

/// A point (t, x) on T x T^m.
class CylPoint {
 public:
  CylPoint(double t, TorusPoint x);

  double t() const { return t_; }
  const TorusPoint& x() const { return x_; }

 private:
  double t_ = 0.0;
  TorusPoint x_;
};

/// A point on the cover R x R^m. Winding is carried by the integer parts.
struct LiftedPoint {
  double t = 0.0;
  Vec x;

  static LiftedPoint from(const CylPoint& p) { return {p.t(), p.x().coords()}; }
  /// The time-one shift S: (t, x) -> (t + 1, x).
  LiftedPoint shifted(int periods = 1) const { return {t + periods, x}; }
};

CylPoint wrap(const LiftedPoint& p);

/// Max over coordinates of the wrap-around distance min(|d|, 1 - |d|).
double torus_dist(const TorusPoint& p, const TorusPoint& q);

inline constexpr std::size_t kDefaultGridBudget = 10'000'000;

/// The n^m points (i_1/n, ..., i_m/n) in lexicographic order (first coordinate slowest).
std::vector<TorusPoint> grid(int n, int m, std::size_t budget = kDefaultGridBudget);

}  // namespace vps
