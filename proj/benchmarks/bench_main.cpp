#include <benchmark/benchmark.h>

#include <Eigen/Dense>

#include "laecf/datasets.hpp"
#include "laecf/eval.hpp"
#include "laecf/linalg.hpp"
#include "laecf/models.hpp"
#include "laecf/synth.hpp"

namespace {

laecf::synth::SynthDataset make_dataset(int users, int items) {
  laecf::synth::SynthConfig config;
  config.users = users;
  config.items = items;
  config.clusters = 8;
  config.seed = 1;
  return laecf::synth::generate(config);
}

void BM_GramSparse(benchmark::State& state) {
  const auto items = static_cast<int>(state.range(0));
  const auto data = make_dataset(4 * items, items);
  const auto matrix = laecf::datasets::build_matrix(data.interactions);
  for (auto _ : state) {
    auto g = laecf::linalg::gram(matrix.x);
    benchmark::DoNotOptimize(g.values.data());
  }
}
BENCHMARK(BM_GramSparse)->Arg(256)->Arg(512)->Unit(benchmark::kMillisecond);

void BM_FitEase(benchmark::State& state) {
  const auto items = static_cast<int>(state.range(0));
  const auto data = make_dataset(4 * items, items);
  const auto matrix = laecf::datasets::build_matrix(data.interactions);
  for (auto _ : state) {
    auto b = laecf::models::fit_ease(matrix, 10.0);
    benchmark::DoNotOptimize(b.values.data());
  }
}
BENCHMARK(BM_FitEase)->Arg(256)->Arg(512)->Arg(1024)->Unit(benchmark::kMillisecond);

void BM_FitL3ae(benchmark::State& state) {
  const auto items = static_cast<int>(state.range(0));
  const auto data = make_dataset(4 * items, items);
  const auto matrix = laecf::datasets::build_matrix(data.interactions);
  laecf::datasets::FeatureMatrix features;
  features.kind = laecf::datasets::FeatureKind::semantic;
  features.values = data.embeddings;
  features.item_ids = data.item_ids;
  const auto s = laecf::models::fit_semantic_ease(features, 1.0);
  for (auto _ : state) {
    auto b = laecf::models::fit_l3ae(matrix, s, 8.0, 2.0);
    benchmark::DoNotOptimize(b.values.data());
  }
}
BENCHMARK(BM_FitL3ae)->Arg(256)->Arg(512)->Unit(benchmark::kMillisecond);

void BM_ScoreUsers(benchmark::State& state) {
  const auto data = make_dataset(2000, 500);
  const auto matrix = laecf::datasets::build_matrix(data.interactions);
  const auto b = laecf::models::fit_ease(matrix, 10.0);
  for (auto _ : state) {
    auto scores = laecf::eval::score_users(matrix, b, 0, matrix.users());
    benchmark::DoNotOptimize(scores.data());
  }
}
BENCHMARK(BM_ScoreUsers)->Unit(benchmark::kMillisecond);

void BM_Spectrum(benchmark::State& state) {
  const auto items = static_cast<int>(state.range(0));
  const auto data = make_dataset(4 * items, items);
  const Eigen::MatrixXd dense = Eigen::MatrixXd(laecf::datasets::build_matrix(data.interactions).x);
  for (auto _ : state) {
    auto values = laecf::linalg::spectrum(dense);
    benchmark::DoNotOptimize(values.data());
  }
}
BENCHMARK(BM_Spectrum)->Arg(256)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
