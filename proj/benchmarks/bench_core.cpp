#include <benchmark/benchmark.h>

#include "msda/adversarial.hpp"
#include "msda/label_shift.hpp"
#include "msda/nn.hpp"
#include "msda/qp.hpp"
#include "msda/rng.hpp"

namespace {

using namespace msda;

Matrix gaussian(Index rows, Index cols, Rng& rng) {
  Matrix m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = rng.normal();
  return m;
}

void BM_SimplexLeastSquares(benchmark::State& state) {
  const Index d = state.range(0);
  Rng rng(1);
  const Matrix a = gaussian(600 * d, d, rng);
  const Vector b = gaussian(600 * d, 1, rng).col(0);
  for (auto _ : state) benchmark::DoNotOptimize(qp::solve_simplex_ls(a, b));
}
BENCHMARK(BM_SimplexLeastSquares)->Arg(3)->Arg(5)->Arg(10);

nn::Mlp feature_map(Index in, Rng& rng) {
  const Index widths[] = {in, 16, 8};
  const nn::Activation acts[] = {nn::Activation::tanh, nn::Activation::tanh};
  return nn::Mlp::random(widths, acts, rng);
}

void BM_MlpForward(benchmark::State& state) {
  Rng rng(2);
  const nn::Mlp net = feature_map(5, rng);
  const Matrix x = gaussian(state.range(0), 5, rng);
  for (auto _ : state) benchmark::DoNotOptimize(nn::forward(net, x));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_MlpForward)->Arg(600)->Arg(6000);

void BM_MlpForwardBackward(benchmark::State& state) {
  Rng rng(3);
  const nn::Mlp net = feature_map(5, rng);
  const Matrix x = gaussian(state.range(0), 5, rng);
  const Matrix upstream = Matrix::Ones(state.range(0), 8);
  for (auto _ : state) {
    nn::ForwardTrace trace;
    nn::forward(net, x, trace);
    benchmark::DoNotOptimize(nn::backward(net, trace, upstream));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_MlpForwardBackward)->Arg(600)->Arg(6000);

// Cost per adversarial epoch: full-batch, five critic steps.
void BM_AdversarialEpochs(benchmark::State& state) {
  Rng rng(4);
  const Index n = state.range(0);
  const Matrix xs = gaussian(n, 5, rng);
  const Vector ys = xs.col(0) + 0.1 * gaussian(n, 1, rng).col(0);
  const DomainData source(xs, ys, "s");
  const DomainData target(gaussian(n, 5, rng).array() + 0.5, std::nullopt, "t");
  AdvConfig cfg;
  cfg.epochs = 20;
  cfg.seed = 5;
  const Vector w = Vector::Ones(n);
  for (auto _ : state) benchmark::DoNotOptimize(train_adversarial(source, target, w, cfg));
  state.SetItemsProcessed(state.iterations() * cfg.epochs);
}
BENCHMARK(BM_AdversarialEpochs)->Arg(600)->Unit(benchmark::kMillisecond);

void BM_Bbse(benchmark::State& state) {
  Rng rng(6);
  const Index n = state.range(0);
  const Vector ys = gaussian(n, 1, rng).col(0);
  const Matrix xs = ys + 0.5 * gaussian(n, 1, rng).col(0);
  const Vector yt = (0.5 + 0.5 * gaussian(n, 1, rng).array()).matrix();
  const Matrix xt = yt + 0.5 * gaussian(n, 1, rng).col(0);
  BbseOptions opt;
  for (auto _ : state) benchmark::DoNotOptimize(estimate_importance_weights(xs, ys, xt, opt, 7));
}
BENCHMARK(BM_Bbse)->Arg(600)->Arg(2000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
