#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <limits>
#include <stdexcept>

#include "vps/sweep.hpp"

using namespace vps;

namespace {

struct ThreadsEnv {
  explicit ThreadsEnv(const char* value) { ::setenv("VPS_NUM_THREADS", value, 1); }
  ~ThreadsEnv() { ::unsetenv("VPS_NUM_THREADS"); }
};

double residual(std::size_t i) {
  double s = 0.0;
  for (std::size_t k = 0; k <= i % 97; ++k) s += std::sin(0.1 * static_cast<double>(i * k + 1));
  return std::abs(s);
}

}  // namespace

TEST_CASE("thread count comes from the environment when valid") {
  {
    ThreadsEnv env("3");
    CHECK(sweep_threads() == 3);
  }
  for (const char* bad : {"0", "-2", "four", "2x", ""}) {
    ThreadsEnv env(bad);
    CHECK(sweep_threads() >= 1);
    CHECK(sweep_threads() != 0);
  }
  ::unsetenv("VPS_NUM_THREADS");
  CHECK(sweep_threads() >= 1);
}

TEST_CASE("serial and parallel sweeps are bitwise identical") {
  const auto serial = sweep(1000, residual, Exec::Serial);
  for (const char* threads : {"1", "2", "4", "7"}) {
    ThreadsEnv env(threads);
    const auto par = sweep(1000, residual, Exec::Parallel);
    CHECK(par.values == serial.values);
    CHECK(par.max == serial.max);
    CHECK(par.argmax == serial.argmax);
  }
  double best = -1.0;
  std::size_t at = 0;
  for (std::size_t i = 0; i < 1000; ++i)
    if (residual(i) > best) best = residual(i), at = i;
  CHECK(serial.max == best);
  CHECK(serial.argmax == at);
}

TEST_CASE("sweep reports NaN and rethrows the lowest failing index") {
  const auto nan = sweep(
      10, [](std::size_t i) { return i == 4 ? std::numeric_limits<double>::quiet_NaN() : double(i); }, Exec::Parallel);
  CHECK(std::isnan(nan.max));
  CHECK(nan.argmax == 4);

  ThreadsEnv env("4");
  const auto f = [](std::size_t i) -> double {
    if (i == 13 || i == 70) throw std::runtime_error("index " + std::to_string(i));
    return 0.0;
  };
  for (Exec e : {Exec::Serial, Exec::Parallel}) {
    try {
      (void)sweep(100, f, e);
      FAIL("expected an error");
    } catch (const std::runtime_error& err) {
      CHECK(std::string(err.what()) == "index 13");
    }
  }
  CHECK(sweep(0, f).values.empty());
}

TEST_CASE("space-time grid has time as the slowest index") {
  const auto g = spacetime_grid(3, 2);
  REQUIRE(g.size() == 27);
  CHECK(g[0][0] == 0.0);
  CHECK(g[8][0] == 0.0);
  CHECK(g[9][0] == doctest::Approx(1.0 / 3.0));
  CHECK(g[10][2] == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("residual kernels agree across execution modes") {
  auto v = std::make_shared<const TrigField>(TrigField::parse({"1 + 0.5*sin(y)", "0.2", "0"}));
  const auto vhat = normalize(v);
  const auto states = spacetime_grid(4, 2);
  ThreadsEnv env("3");
  const auto a = divergence_residuals(*v, states, 1e-4, Exec::Serial);
  const auto b = divergence_residuals(*v, states, 1e-4, Exec::Parallel);
  CHECK(a.values == b.values);
  CHECK(a.max < 1e-8);
  const auto d = field_difference(*v, *vhat, states, Exec::Parallel);
  CHECK(d.max == doctest::Approx(0.5).epsilon(1e-12));

  FlowConfig cfg;
  cfg.step = 1e-2;
  cfg.crossing_tol = 1e-12;
  const auto pts = grid(3, 2);
  const auto self = [&](const TorusPoint& x) { return poincare(*vhat, x, cfg).image; };
  const auto pr = poincare_residuals(*v, pts, self, cfg, Exec::Parallel);
  const auto ps = poincare_residuals(*v, pts, self, cfg, Exec::Serial);
  CHECK(pr.values == ps.values);
  CHECK(pr.max < 1e-9);
}
