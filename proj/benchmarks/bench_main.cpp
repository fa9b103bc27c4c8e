#include <benchmark/benchmark.h>

#include "botaclip/encoders.hpp"
#include "botaclip/forest.hpp"
#include "botaclip/losses.hpp"
#include "botaclip/metrics.hpp"
#include "botaclip/spatial_cv.hpp"

using namespace botaclip;

namespace {

Matrix gaussian(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  Rng rng(seed);
  Matrix m(rows, cols);
  for (double& v : m.values()) v = rng.normal();
  return m;
}

// Full batch of the combined objective at embedding width 768.
void BM_ObjectiveForwardBackward(benchmark::State& state) {
  auto n = static_cast<std::size_t>(state.range(0));
  Matrix img = l2_normalize_rows(gaussian(n, 768, 1));
  Matrix zi = l2_normalize_rows(gaussian(n, 768, 2));
  Matrix zt = l2_normalize_rows(gaussian(n, 768, 3));
  BotaclipObjective obj(1.0);
  for (auto _ : state) {
    obj.forward(img, zi, zt, ScalarsTauB{});
    benchmark::DoNotOptimize(obj.backward());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_ObjectiveForwardBackward)->Arg(64)->Arg(256);

void BM_AdapterForwardBackward(benchmark::State& state) {
  auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(4);
  LinearAdapter a = init_identity_adapter("img", 768, 1e-4, rng, true);
  Matrix x = l2_normalize_rows(gaussian(n, 768, 5));
  Matrix up = gaussian(n, 768, 6);
  for (auto _ : state) {
    Rng r(7);
    a.forward(x, Mode::Train, r);
    benchmark::DoNotOptimize(a.backward(up));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_AdapterForwardBackward)->Arg(256);

void BM_BotaniaForward(benchmark::State& state) {
  BotaniaDims dims;
  dims.input = 200;
  BotaniaMLP b(dims);
  Rng rng(8);
  b.init(rng);
  Matrix cover = gaussian(256, dims.input, 9);
  for (auto _ : state) {
    Rng r(10);
    benchmark::DoNotOptimize(b.forward(cover, Mode::Eval, r));
  }
}
BENCHMARK(BM_BotaniaForward);

void BM_ForestFit(benchmark::State& state) {
  Matrix x = gaussian(400, static_cast<std::size_t>(state.range(0)), 11);
  std::vector<int> y(400);
  for (std::size_t i = 0; i < 400; ++i) y[i] = x(i, 0) + 0.5 * x(i, 1) > 0.0;
  ForestConfig cfg;
  cfg.n_trees = 20;
  for (auto _ : state) benchmark::DoNotOptimize(fit_classifier(x, y, cfg));
}
BENCHMARK(BM_ForestFit)->Arg(16)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_FoldAssignment(benchmark::State& state) {
  Rng rng(12);
  std::vector<Point> pts(static_cast<std::size_t>(state.range(0)));
  for (Point& p : pts) p = {300000.0 * rng.uniform(), 300000.0 * rng.uniform()};
  for (auto _ : state) {
    Rng r(13);
    FoldAssignment a = make_fold_assignment(pts, 5, 0, r);
    benchmark::DoNotOptimize(buffered_split(a, 0));
  }
}
BENCHMARK(BM_FoldAssignment)->Arg(10000);

void BM_BoyceIndex(benchmark::State& state) {
  Rng rng(14);
  Vector bg(10000), pres(1000);
  for (double& v : bg) v = rng.uniform();
  for (double& v : pres) v = rng.uniform() * rng.uniform();
  for (auto _ : state) benchmark::DoNotOptimize(boyce_index(pres, bg));
}
BENCHMARK(BM_BoyceIndex);

}  // namespace
