// Serial reference loop against the OpenMP sweep on the residual kernels of the
// verification suite. Thread count follows VPS_NUM_THREADS.

#include <memory>

#include <benchmark/benchmark.h>

#include "vps/suspension.hpp"
#include "vps/sweep.hpp"

namespace {

using namespace vps;

struct Fixture {
  std::shared_ptr<const VectorField> v;
  Suspension sus;
  FlowConfig cfg;

  Fixture() {
    v = std::make_shared<const TrigField>(TrigField::parse({"1 + 0.5*sin(y)", "0.2", "0"}));
    MapExpr map(2);
    map.then(ElementaryMap::shear(2, 1, TrigPoly::parse("0.1*sin(x)", {"x", "y"})));
    cfg.step = 1e-2;
    cfg.crossing_tol = 1e-12;
    sus = suspension_build(v, Isotopy(map), cfg);
  }
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

Exec exec_of(const benchmark::State& state) { return state.range(0) ? Exec::Parallel : Exec::Serial; }

void label(benchmark::State& state) {
  state.SetLabel(state.range(0) ? "parallel x" + std::to_string(sweep_threads()) : "serial");
}

void BM_PoincareResiduals(benchmark::State& state) {
  const auto& f = fixture();
  const auto pts = grid(static_cast<int>(state.range(1)), 2);
  const auto target = [&](const TorusPoint& x) { return poincare(*f.v, x, f.cfg).image; };
  for (auto _ : state) {
    benchmark::DoNotOptimize(poincare_residuals(*f.sus.u, pts, target, f.cfg, exec_of(state)).max);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(pts.size()));
  label(state);
}

void BM_DivergenceResiduals(benchmark::State& state) {
  const auto& f = fixture();
  const auto states = spacetime_grid(static_cast<int>(state.range(1)), 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(divergence_residuals(*f.sus.u, states, 1e-4, exec_of(state)).max);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(states.size()));
  label(state);
}

void BM_FlatnessResiduals(benchmark::State& state) {
  const auto& f = fixture();
  const auto states = spacetime_grid(static_cast<int>(state.range(1)), 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(flatness_residuals(*f.sus.family, states, exec_of(state)).max);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(states.size()));
  label(state);
}

}  // namespace

BENCHMARK(BM_PoincareResiduals)->ArgsProduct({{0, 1}, {8, 16}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_DivergenceResiduals)->ArgsProduct({{0, 1}, {6}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_FlatnessResiduals)->ArgsProduct({{0, 1}, {8}})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
