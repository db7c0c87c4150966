#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "vps/flow.hpp"

using namespace vps;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kA = 0.5;
constexpr double kC = 0.3;

// v = (1 + A sin(2 pi x), C) on T x T: x(s) = x0 + C s and t(s) integrates in closed form.
double exact_t(double x0, double s) {
  return s - kA / (kTwoPi * kC) * (std::cos(kTwoPi * (x0 + kC * s)) - std::cos(kTwoPi * x0));
}

double exact_return_x(double x0) {
  double s = 1.0;
  for (int i = 0; i < 60; ++i) {
    const double g = exact_t(x0, s) - 1.0;
    const double dg = 1.0 + kA * std::sin(kTwoPi * (x0 + kC * s));
    s -= g / dg;
  }
  return x0 + kC * s;
}

TrigField oracle_field() { return TrigField::parse({"1 + 0.5*sin(x)", "0.3"}); }

class Backwards final : public VectorField {
 public:
  int dim() const override { return 1; }
  void eval(const Vec&, Vec& out) const override {
    out.resize(2);
    out << -1.0, 0.0;
  }
};

class Crawl final : public VectorField {
 public:
  int dim() const override { return 1; }
  void eval(const Vec&, Vec& out) const override {
    out.resize(2);
    out << 1e-3, 0.0;
  }
  std::optional<double> time_speed_bound() const override { return 1.0; }
};

class Poison final : public VectorField {
 public:
  int dim() const override { return 1; }
  void eval(const Vec&, Vec& out) const override {
    out.resize(2);
    out << 1.0, std::numeric_limits<double>::quiet_NaN();
  }
};

}  // namespace

TEST_CASE("RK4 orbit matches the closed form") {
  const auto v = oracle_field();
  Vec z(2);
  z << 0.0, 0.2;
  integrate(v, z, 0.7, 1e-3);
  CHECK(z[1] == doctest::Approx(0.2 + kC * 0.7).epsilon(1e-14));
  CHECK(z[0] == doctest::Approx(exact_t(0.2, 0.7)).epsilon(1e-12));
  integrate(v, z, -0.7, 1e-3);
  CHECK(std::abs(z[0]) < 1e-12);
  CHECK(z[1] == doctest::Approx(0.2).epsilon(1e-14));
}

TEST_CASE("first return converges at fourth order") {
  const auto v = oracle_field();
  const double x0 = 0.13;
  const double exact = wrap_unit(exact_return_x(x0));
  double errs[3];
  const double steps[3] = {0.1, 0.05, 0.025};
  for (int i = 0; i < 3; ++i) {
    FlowConfig cfg;
    cfg.step = steps[i];
    cfg.crossing_tol = 1e-14;
    const auto r = poincare(v, TorusPoint({x0}), cfg);
    errs[i] = torus_dist(r.image, TorusPoint({exact}));
  }
  CAPTURE(errs[0]);
  CAPTURE(errs[1]);
  CAPTURE(errs[2]);
  CHECK(errs[0] / errs[1] >= 14.0);
  CHECK(errs[1] / errs[2] >= 14.0);

  FlowConfig fine;
  const auto r = poincare(v, TorusPoint({x0}), fine);
  CHECK(torus_dist(r.image, TorusPoint({exact})) < 1e-11);
}

TEST_CASE("return map of v and of v / v_T coincide") {
  auto v = std::make_shared<const TrigField>(oracle_field());
  const auto vhat = normalize(v);
  FlowConfig cfg;
  for (double x0 : {0.0, 0.31, 0.77}) {
    const auto a = poincare(*v, TorusPoint({x0}), cfg);
    const auto b = poincare(*vhat, TorusPoint({x0}), cfg);
    CHECK(b.return_time == 1.0);
    CHECK(torus_dist(a.image, b.image) < 1e-10);
    CHECK(torus_dist(sigma_family(*vhat, 1.0, TorusPoint({x0}), cfg), b.image) == 0.0);
    CHECK(sigma_family(*vhat, 0.0, TorusPoint({x0}), cfg) == TorusPoint({x0}));
  }
  CHECK_THROWS_AS(sigma_family(*v, 0.5, TorusPoint({0.1}), cfg), Error);
}

TEST_CASE("flow of a divergence-free field has unit Jacobian determinant") {
  auto v = std::make_shared<const TrigField>(
      TrigField::parse({"1 + 0.3*sin(t)*sin(x)", "0.3*cos(t)*cos(x) + 0.1*cos(y)", "0.2*sin(x)"}));
  FlowConfig cfg;
  Vec x(2);
  x << 0.21, 0.64;
  const auto j = flow_jacobian(*v, LiftedPoint{0.3, x}, 0.8, cfg);
  CHECK(j.jacobian.determinant() == doctest::Approx(1.0).epsilon(1e-10));
  const auto vhat = normalize(v);
  const auto jh = flow_jacobian(*vhat, LiftedPoint{0.0, x}, 1.0, cfg);
  CHECK(jh.spatial().determinant() == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("variational and finite-difference Jacobians agree") {
  auto v = std::make_shared<const TrigField>(
      TrigField::parse({"1 + 0.3*sin(t)*sin(x)", "0.3*cos(t)*cos(x) + 0.1*cos(y)", "0.2*sin(x)"}));
  const auto vhat = normalize(v);
  Vec x(2);
  x << 0.4, 0.9;
  for (const VectorField* f : {static_cast<const VectorField*>(v.get()), static_cast<const VectorField*>(vhat.get())}) {
    FlowConfig var, fd;
    var.jacobian = JacobianMode::Variational;
    fd.jacobian = JacobianMode::FiniteDifference;
    const auto a = flow_jacobian(*f, LiftedPoint{0.15, x}, 0.6, var);
    const auto b = flow_jacobian(*f, LiftedPoint{0.15, x}, 0.6, fd);
    CHECK(a.end.t == b.end.t);
    CHECK((a.end.x - b.end.x).norm() == 0.0);
    CHECK((a.jacobian - b.jacobian).cwiseAbs().maxCoeff() < 1e-7);
  }
}

TEST_CASE("flow configuration is validated") {
  FlowConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.step = 0.2;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg.step = 1e-2;
  cfg.crossing_tol = 1e-3;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg.crossing_tol = 0.0;
  CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("integration failures are reported by kind") {
  FlowConfig cfg;
  cfg.step = 0.01;
  cfg.crossing_tol = 1e-12;
  const auto kind_of = [&](const VectorField& f) {
    try {
      (void)poincare(f, TorusPoint({0.5}), cfg);
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::Schema;
  };
  CHECK(kind_of(Backwards{}) == ErrorKind::NoReturn);
  CHECK(kind_of(Crawl{}) == ErrorKind::NoReturn);
  CHECK(kind_of(Poison{}) == ErrorKind::BlowUp);
}
