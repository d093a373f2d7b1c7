/*
 * Copyright 2026 The plugselect Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */


#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "plugselect/attribution.hpp"
#include "plugselect/diffnet.hpp"
#include "plugselect/eegdata.hpp"
#include "plugselect/evaluation.hpp"
#include "plugselect/filter.hpp"

namespace {

using namespace plugselect;

Matrix random_input(std::size_t channels, std::size_t samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist;
  Matrix m(channels, samples);
  for (double& v : m.values()) v = dist(rng);
  return m;
}

diffnet::ModelConfig bench_config(std::size_t channels) {
  auto cfg = evaluation::pipeline_defaults().model;
  cfg.input_channels = channels;
  cfg.input_samples = 64;
  return cfg;
}

void BM_Forward(benchmark::State& state) {
  const auto channels = static_cast<std::size_t>(state.range(0));
  const auto model = diffnet::build_model(bench_config(channels));
  const auto x = random_input(channels, 64, 1);
  for (auto _ : state) benchmark::DoNotOptimize(model.forward(x));
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_Forward)->Arg(4)->Arg(8)->Arg(16)->Arg(32);

void BM_InputGradient(benchmark::State& state) {
  const auto channels = static_cast<std::size_t>(state.range(0));
  const auto model = diffnet::build_model(bench_config(channels));
  const auto x = random_input(channels, 64, 2);
  for (auto _ : state) benchmark::DoNotOptimize(model.input_gradient(x, 1));
}
BENCHMARK(BM_InputGradient)->Arg(8)->Arg(16)->Arg(32);

void BM_IntegratedGradientsWindow(benchmark::State& state) {
  const auto model = diffnet::build_model(bench_config(16));
  const eegdata::Window w{random_input(16, 64, 3), 1, 1, 0};
  attribution::IgConfig cfg;
  cfg.steps = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(attribution::integrated_gradients_window(model, w, cfg));
}
BENCHMARK(BM_IntegratedGradientsWindow)->Arg(8)->Arg(64)->Arg(512);

void BM_TrainEpoch(benchmark::State& state) {
  const auto model = diffnet::build_model(bench_config(16));
  std::vector<eegdata::Window> windows;
  for (int i = 0; i < 128; ++i) windows.push_back({random_input(16, 64, 10 + i), i % 2, 1, i});
  diffnet::TrainSpec spec;
  spec.epochs = 1;
  for (auto _ : state) benchmark::DoNotOptimize(diffnet::train(model, windows, spec));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(windows.size()));
}
BENCHMARK(BM_TrainEpoch)->Unit(benchmark::kMillisecond);

void BM_BandpassTrial(benchmark::State& state) {
  eegdata::EegTrial trial{random_input(16, 256, 4), 0, 1, 0};
  filter::FilterSpec spec;
  for (auto _ : state) benchmark::DoNotOptimize(filter::bandpass_chebyshev(trial, spec, 128.0));
}
BENCHMARK(BM_BandpassTrial);

}  // namespace

BENCHMARK_MAIN();
