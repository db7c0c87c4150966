#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "vps/field.hpp"

using namespace vps;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

Vec z3(double t, double x, double y) {
  Vec z(3);
  z << t, x, y;
  return z;
}

class Sawtooth final : public VectorField {
 public:
  int dim() const override { return 1; }
  void eval(const Vec& z, Vec& out) const override {
    out.resize(2);
    out << 1.0, 0.1 * z[1];
  }
};

}  // namespace

TEST_CASE("divergence vanishes for the reference fields") {
  const auto shear_field = TrigField::parse({"1 + 0.5*sin(y)", "0.2", "0"});
  const auto general = TrigField::parse({"1 + 0.3*sin(t)*sin(x)", "0.3*cos(t)*cos(x) + 0.1*cos(y)", "0.2*sin(x)"});
  for (const auto& z : {z3(0.1, 0.2, 0.3), z3(0.77, 0.41, 0.05), z3(0.5, 0.9, 0.6)}) {
    CHECK(std::abs(divergence(shear_field, z)) < 1e-14);
    CHECK(std::abs(divergence(general, z)) < 1e-14);
    CHECK(std::abs(divergence_fd(general, z, 1e-4)) < 1e-7);
  }
  const auto rep = field_validate(general, 8);
  CHECK(rep.passed());
  CHECK(rep.min_time_speed == doctest::Approx(0.7).epsilon(1e-12));
}

TEST_CASE("divergence of a compressible field matches the analytic value") {
  const auto f = TrigField::parse({"1", "0.1*sin(x)"});
  Vec z(2);
  z << 0.3, 0.15;
  const double expected = 0.1 * kTwoPi * std::cos(kTwoPi * 0.15);
  CHECK(divergence(f, z) == doctest::Approx(expected).epsilon(1e-14));
  CHECK(divergence_fd(f, z, 1e-5) == doctest::Approx(expected).epsilon(1e-8));
  const auto rep = field_validate(f, 8);
  CHECK(rep.positive_time);
  CHECK_FALSE(rep.volume_preserving);
  CHECK(rep.max_abs_divergence == doctest::Approx(0.1 * kTwoPi).epsilon(1e-12));
}

TEST_CASE("trig field Jacobian agrees with central differences") {
  const auto f = TrigField::parse({"1 + 0.3*sin(t)*sin(x)", "0.3*cos(t)*cos(x) + 0.1*cos(y)", "0.2*sin(x)"});
  const Vec z = z3(0.31, 0.72, 0.18);
  Vec out;
  Mat jac;
  f.eval_jacobian(z, out, jac);
  Vec fd_out;
  Mat fd_jac;
  f.VectorField::eval_jacobian(z, fd_out, fd_jac);
  CHECK((out - fd_out).norm() < 1e-15);
  CHECK((jac - fd_jac).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("normalized field is v / v_T with consistent partials") {
  auto base = std::make_shared<const TrigField>(
      TrigField::parse({"1 + 0.3*sin(t)*sin(x)", "0.3*cos(t)*cos(x) + 0.1*cos(y)", "0.2*sin(x)"}));
  const auto vhat = normalize(base);
  const Vec z = z3(0.63, 0.27, 0.91);
  Vec raw, nv;
  base->eval(z, raw);
  vhat->eval(z, nv);
  CHECK(nv[0] == 1.0);
  CHECK((nv - raw / raw[0]).norm() < 1e-15);
  Vec out, fd_out;
  Mat jac, fd_jac;
  vhat->eval_jacobian(z, out, jac);
  vhat->VectorField::eval_jacobian(z, fd_out, fd_jac);
  CHECK((out - nv).norm() < 1e-15);
  CHECK((jac - fd_jac).cwiseAbs().maxCoeff() < 1e-8);
  CHECK(jac.row(0).norm() == 0.0);
}

TEST_CASE("normalize rejects a non-positive time component") {
  auto f = std::make_shared<const TrigField>(TrigField::parse({"0.5*sin(x)", "0"}));
  CHECK_FALSE(field_validate(*f, 8).positive_time);
  try {
    (void)normalize(f);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Domain);
    CHECK(e.stage() == "normalize");
  }
}

TEST_CASE("non-periodic fields are rejected") {
  try {
    (void)field_validate(Sawtooth{}, 6);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::InvalidField);
  }
}

TEST_CASE("field parsing checks arity and names") {
  CHECK_THROWS_AS(TrigField::parse({"1"}), Error);
  CHECK_THROWS_AS(TrigField::parse({"1", "sin(y)"}), Error);
  CHECK(TrigField::variable_names(2) == std::vector<std::string>{"t", "x", "y"});
  CHECK(TrigField::parse({"2", "0", "0"}).unit_time() == false);
  CHECK(TrigField::parse({"1", "0.3", "sin(t)"}).unit_time());
  CHECK(section_density(TrigField::parse({"1 + 0.5*sin(x)", "0"}), Vec::Constant(1, 0.25)) ==
        doctest::Approx(1.5));
}
