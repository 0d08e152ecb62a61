// Copyright 2026 The hoi-relparse Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "hoi/encoder.hpp"
#include "hoi/evaluation.hpp"
#include "hoi/fusion.hpp"
#include "hoi/model.hpp"
#include "hoi/ops.hpp"
#include "hoi/synth.hpp"
#include "hoi/training.hpp"

namespace {

using namespace hoi;

Tensor random_tensor(Shape shape, std::mt19937_64& rng) {
  std::size_t n = 1;
  for (auto s : shape) n *= s;
  std::normal_distribution<double> dist(0.0, 1.0);
  std::vector<double> data(n);
  for (double& x : data) x = dist(rng);
  return Tensor(std::move(shape), std::move(data));
}

SyntheticDataset bench_data(std::size_t scenes) {
  SynthConfig sc;
  sc.train_scenes = scenes;
  sc.seed = 7;
  return generate_dataset(sc);
}

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(1);
  const Tensor a = random_tensor({n, n}, rng), b = random_tensor({n, n}, rng);
  for (auto _ : state) benchmark::DoNotOptimize(ops::matmul(a, b));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n * n * n));
}
BENCHMARK(BM_Matmul)->Arg(16)->Arg(32)->Arg(64)->Arg(128);

void BM_Conv2d(benchmark::State& state) {
  std::mt19937_64 rng(2);
  const auto c = static_cast<std::size_t>(state.range(0));
  const Tensor img = random_tensor({c, 64, 64}, rng);
  const Tensor k = random_tensor({8, c, 5, 5}, rng);
  const Tensor bias = random_tensor({8}, rng);
  for (auto _ : state) benchmark::DoNotOptimize(ops::conv2d(img, k, bias, 2));
}
BENCHMARK(BM_Conv2d)->Arg(1)->Arg(2)->Arg(8);

void BM_DualAttention(benchmark::State& state) {
  const auto d = static_cast<std::size_t>(state.range(0));
  const auto n = static_cast<std::size_t>(state.range(1));
  std::mt19937_64 rng(3);
  ParameterStore store;
  const auto params = DualAttentionParams::create(store, "bench", d, rng);
  const Tensor humans = random_tensor({n, d}, rng), objects = random_tensor({n, d}, rng);
  for (auto _ : state) benchmark::DoNotOptimize(dual_attention(humans, objects, params, 4));
}
BENCHMARK(BM_DualAttention)->Args({32, 4})->Args({32, 16})->Args({64, 16});

void BM_Detect(benchmark::State& state) {
  const auto data = bench_data(16);
  ModelConfig mc;
  mc.decoder_layers = static_cast<std::size_t>(state.range(0));
  const Model model(mc, data.world.kb, 1);
  const InferenceConfig ic;
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(detect(data.train[i % data.train.size()], model, ic));
    ++i;
  }
}
BENCHMARK(BM_Detect)->Arg(0)->Arg(2)->Unit(benchmark::kMillisecond);

void BM_TrainStep(benchmark::State& state) {
  const auto data = bench_data(16);
  Model model(ModelConfig{}, data.world.kb, 1);
  SgdOptimizer opt(1e-2, 0.9, 1e-4);
  TrainConfig tc;
  tc.log_interval = 1000;
  std::size_t done = 0;
  for (auto _ : state) {
    tc.iterations = done + 1;
    train(model, opt, data.train, {}, tc, done);
    ++done;
  }
}
BENCHMARK(BM_TrainStep)->Unit(benchmark::kMillisecond);

void BM_AveragePrecision(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(4);
  std::bernoulli_distribution hit(0.3);
  std::vector<bool> flags(n);
  for (std::size_t i = 0; i < n; ++i) flags[i] = hit(rng);
  for (auto _ : state) benchmark::DoNotOptimize(average_precision(flags, n / 2));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n));
}
BENCHMARK(BM_AveragePrecision)->Arg(1000)->Arg(100000);

}  // namespace

BENCHMARK_MAIN();
