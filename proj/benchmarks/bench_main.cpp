#include <benchmark/benchmark.h>

#include <cstdint>
#include <vector>

#include "glarc/corpus.hpp"
#include "glarc/model.hpp"
#include "glarc/params.hpp"
#include "glarc/rng.hpp"
#include "glarc/tensor.hpp"
#include "glarc/train.hpp"

using namespace glarc;

namespace {

Tensor random_tensor(std::vector<int> shape, Rng& rng, double s = 1.0) {
  Tensor t(std::move(shape));
  for (std::int64_t i = 0; i < t.numel(); ++i) t[i] = (rng.uniform01() - 0.5) * 2.0 * s;
  return t;
}

ModelConfig bench_config(LocalizationMode mode, int vocab) {
  ModelConfig cfg;
  cfg.mode = mode;
  cfg.dropout_rate = 0.0;
  cfg.vocab_size = vocab;
  cfg.n_classes = 19;
  return cfg;
}

PreparedExample sentence(const ModelConfig& cfg, int l, Rng& rng) {
  PreparedExample ex;
  ex.id = 1;
  for (int i = 0; i < l; ++i)
    ex.tokens.push_back(2 + static_cast<int>(rng.below(
                                static_cast<std::uint64_t>(cfg.vocab_size - 2))));
  ex.e1 = 1;
  ex.e2 = l - 2;
  ex.pos1 = relative_positions(l, ex.e1, cfg.clip);
  ex.pos2 = relative_positions(l, ex.e2, cfg.clip);
  ex.gold = 3;
  Tensor m({l});
  for (int i = 0; i < l; ++i) m[i] = (i >= ex.e1 && i <= ex.e1 + 2) || i == ex.e2 ? 1.0 : 0.0;
  ex.sdp.m = m;
  ex.sdp.source = SdpMask::Source::Hard;
  return ex;
}

void BM_Softmax(benchmark::State& state) {
  Rng rng(1);
  Tensor logits = random_tensor({static_cast<int>(state.range(0))}, rng, 5.0);
  for (auto _ : state) benchmark::DoNotOptimize(softmax(logits));
}
BENCHMARK(BM_Softmax)->Arg(19)->Arg(128)->Arg(1024);

void BM_GruStep(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  Rng rng(2);
  GruWeights cell = GruWeights::random(d, d, 0.1, rng);
  Tensor x = random_tensor({d}, rng);
  Tensor h = random_tensor({d}, rng, 0.5);
  for (auto _ : state) benchmark::DoNotOptimize(gru_step(cell, x, h));
}
BENCHMARK(BM_GruStep)->Arg(60)->Arg(100)->Arg(200);

void BM_BiGru(benchmark::State& state) {
  const int l = static_cast<int>(state.range(0));
  Rng rng(3);
  GruWeights fwd = GruWeights::random(60, 100, 0.1, rng);
  GruWeights bwd = GruWeights::random(60, 100, 0.1, rng);
  Tensor inputs = random_tensor({l, 60}, rng);
  for (auto _ : state) benchmark::DoNotOptimize(bigru_forward(fwd, bwd, inputs));
}
BENCHMARK(BM_BiGru)->Arg(10)->Arg(25)->Arg(60);

void BM_Attention(benchmark::State& state) {
  const int l = static_cast<int>(state.range(0));
  Rng rng(4);
  Tensor H = random_tensor({l, 200}, rng);
  Tensor c = random_tensor({200}, rng);
  Tensor m({l});
  for (int i = 0; i < l; ++i) m[i] = i % 3 == 0 ? 1.0 : 0.0;
  for (auto _ : state) {
    Tensor ag = global_attention(H, c);
    Tensor al = local_attention(H, c, m);
    benchmark::DoNotOptimize(hybrid(ag, al, 0.5));
  }
}
BENCHMARK(BM_Attention)->Arg(10)->Arg(25)->Arg(60);

void BM_Forward(benchmark::State& state) {
  ModelConfig cfg = bench_config(static_cast<LocalizationMode>(state.range(1)), 4000);
  ParamStore store;
  Rng prng(5);
  ModelIds ids = init_parameters(store, cfg, prng);
  Rng rng(6);
  PreparedExample ex = sentence(cfg, static_cast<int>(state.range(0)), rng);
  for (auto _ : state) benchmark::DoNotOptimize(forward(ex, store, ids, cfg));
}
BENCHMARK(BM_Forward)
    ->ArgsProduct({{15, 30}, {0, 1, 2}})  // length x mode (none/hard/soft)
    ->ArgNames({"len", "mode"});

void BM_ForwardBackward(benchmark::State& state) {
  ModelConfig cfg = bench_config(LocalizationMode::Soft, 4000);
  ParamStore store;
  Rng prng(7);
  ModelIds ids = init_parameters(store, cfg, prng);
  Rng rng(8);
  PreparedExample ex = sentence(cfg, static_cast<int>(state.range(0)), rng);
  GradStore grads(store);
  for (auto _ : state) {
    grads.zero();
    benchmark::DoNotOptimize(forward(ex, store, ids, cfg, false, nullptr, &grads));
  }
}
BENCHMARK(BM_ForwardBackward)->Arg(15)->Arg(30);

void BM_AdadeltaStep(benchmark::State& state) {
  ModelConfig cfg = bench_config(LocalizationMode::Soft, 4000);
  ParamStore store;
  Rng prng(9);
  init_parameters(store, cfg, prng);
  AdadeltaState opt(store);
  GradStore grads(store);
  Rng rng(10);
  for (int i = 0; i < grads.size(); ++i)
    for (std::int64_t k = 0; k < grads.tensor(i).numel(); ++k)
      grads.tensor(i)[k] = (rng.uniform01() - 0.5) * 0.01;
  for (auto _ : state) {
    adadelta_step(store, grads, opt);
    benchmark::ClobberMemory();
  }
}
BENCHMARK(BM_AdadeltaStep);

void BM_ShortestPath(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  Rng rng(11);
  std::vector<int> heads(static_cast<size_t>(n), -1);
  for (int i = 1; i < n; ++i)
    heads[static_cast<size_t>(i)] = static_cast<int>(rng.below(static_cast<std::uint64_t>(i)));
  for (auto _ : state)
    benchmark::DoNotOptimize(shortest_dependency_path(heads, n, 0, n - 1));
}
BENCHMARK(BM_ShortestPath)->Arg(10)->Arg(30)->Arg(80);

}  // namespace

BENCHMARK_MAIN();
