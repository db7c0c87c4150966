#include <doctest.h>

#include <cmath>
#include <numbers>

#include "vps/trig_poly.hpp"

using namespace vps;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
const std::vector<std::string> kNames{"t", "x", "y"};

double oracle(const double* z) {
  const double t = z[0], x = z[1], y = z[2];
  return 1.0 + 0.5 * std::sin(kTwoPi * y) - 0.3 * std::cos(kTwoPi * 2.0 * t) * std::sin(kTwoPi * x) +
         0.25 * std::sin(kTwoPi * 19.0 * y);
}

}  // namespace

TEST_CASE("parsed polynomial matches direct evaluation") {
  const auto p = TrigPoly::parse("1 + 0.5*sin(y) - 0.3*cos(2t)*sin(x) + 0.25*sin(19y)", kNames);
  CHECK(p.nvars() == 3);
  CHECK(p.constant() == 1.0);
  CHECK(p.terms().size() == 3);
  CHECK(p.depends_on(0));
  CHECK(p.max_frequency(2) == 19);
  const double pts[][3] = {{0.0, 0.0, 0.0}, {0.1, 0.7, 0.33}, {0.91, 0.05, 0.5}, {-1.3, 2.2, 7.01}};
  for (const auto& z : pts) CHECK(p.value(z) == doctest::Approx(oracle(z)).epsilon(1e-13));
  CHECK(p.lower_bound() == doctest::Approx(1.0 - 0.5 - 0.3 - 0.25));
}

TEST_CASE("gradient agrees with central differences") {
  const auto p = TrigPoly::parse("0.4*cos(x)*sin(2y) + 0.2*sin(3t) - 0.1*cos(y)", kNames);
  const double z[3] = {0.21, 0.63, 0.17};
  double g[3];
  const double v = p.value_grad(z, g);
  CHECK(v == doctest::Approx(p.value(z)).epsilon(1e-15));
  const double h = 1e-6;
  for (int j = 0; j < 3; ++j) {
    double zp[3] = {z[0], z[1], z[2]}, zm[3] = {z[0], z[1], z[2]};
    zp[j] += h;
    zm[j] -= h;
    const double fd = (p.value(zp) - p.value(zm)) / (2.0 * h);
    CHECK(g[j] == doctest::Approx(fd).epsilon(1e-7));
  }
}

TEST_CASE("parse errors are schema errors") {
  for (std::string bad : {"", "1 +", "sin(z)", "sin(x", "0.5*tan(x)", "sin(-2x)", "sin(1.5x)", "2**x"}) {
    INFO(bad);
    try {
      (void)TrigPoly::parse(bad, kNames);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Schema);
    }
  }
  const double z[3] = {0.3, 0.3, 0.3};
  CHECK(TrigPoly::parse("2 + sin(0x)", kNames).value(z) == 2.0);
  CHECK(TrigPoly::parse("2*cos(0y)", kNames).value(z) == 2.0);
}

TEST_CASE("antiderivative in one variable") {
  const auto p = TrigPoly::parse("0.3 + 0.2*cos(2t) - 0.1*sin(t)", kNames);
  const auto g = p.antiderivative(0);
  REQUIRE(g.has_value());
  const double z[3] = {0.37, 0.5, 0.5};
  double grad[3];
  (void)g->value_grad(z, grad);
  CHECK(grad[0] == doctest::Approx(p.value(z) - p.constant()).epsilon(1e-14));
  CHECK_FALSE(TrigPoly::parse("sin(t)*cos(x)", kNames).antiderivative(0).has_value());
  CHECK_FALSE(TrigPoly::parse("sin(x)", kNames).antiderivative(0).has_value());
}

TEST_CASE("system evaluation equals evaluating each polynomial") {
  std::vector<TrigPoly> polys{
      TrigPoly::parse("1 + 0.5*sin(y)", kNames),
      TrigPoly::parse("0.2*cos(x)*sin(y)*cos(t)*sin(2x)*cos(3y)", kNames),  // more factors than the flat path holds
      TrigPoly::parse("0.1*sin(17x) + 0.05*cos(40t)", kNames),
  };
  const TrigSystem sys(polys);
  const double z[3] = {0.43, 0.12, 0.88};
  double out[3], grads[9];
  sys.values_grads(z, out, grads);
  for (std::size_t i = 0; i < polys.size(); ++i) {
    double g[3];
    const double v = polys[i].value_grad(z, g);
    CHECK(out[i] == doctest::Approx(v).epsilon(1e-14));
    for (int j = 0; j < 3; ++j) CHECK(grads[i * 3 + j] == doctest::Approx(g[j]).epsilon(1e-12).scale(1.0));
  }
  double vals[3];
  sys.values(z, vals);
  for (int i = 0; i < 3; ++i) CHECK(vals[i] == out[i]);
}

TEST_CASE("univariate builder and scaling") {
  const auto p = TrigPoly::univariate(2, 1, 0.5, {0.1, 0.0}, {0.0, 0.2});
  const double z[2] = {0.0, 0.125};
  CHECK(p.value(z) == doctest::Approx(0.5 + 0.1 * std::cos(kTwoPi * 0.125) + 0.2 * std::sin(kTwoPi * 0.25)));
  CHECK(p.scaled(2.0).value(z) == doctest::Approx(2.0 * p.value(z)));
  CHECK(p.derivative_bound(1) == doctest::Approx(kTwoPi * (0.1 + 2 * 0.2)));
  CHECK(p.derivative_bound(0) == 0.0);
}
