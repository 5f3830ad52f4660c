#include <benchmark/benchmark.h>

#include <random>

#include "fedcache/cache.hpp"
#include "fedcache/data.hpp"
#include "fedcache/distill.hpp"
#include "fedcache/engine.hpp"
#include "fedcache/numerics/cholesky.hpp"

using namespace fedcache;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> n;
  Matrix m(r, c);
  for (double& v : m.values()) v = n(gen);
  return m;
}

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Matrix a = random_matrix(n, n, 1), b = random_matrix(n, n, 2);
  for (auto _ : state) benchmark::DoNotOptimize(matmul(a, b));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Matmul)->RangeMultiplier(2)->Range(16, 256)->Complexity();

void BM_CholeskySolve(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Matrix a = random_matrix(n, n, 3);
  const Matrix k = matmul(a, transpose(a));
  const Matrix y = random_matrix(n, 4, 4);
  for (auto _ : state) benchmark::DoNotOptimize(solve_spd_regularized(k, 0.1, y));
}
BENCHMARK(BM_CholeskySolve)->RangeMultiplier(2)->Range(4, 128);

// One prototype optimization step budget on a desk-sized client.
void BM_DistillSteps(benchmark::State& state) {
  const Dataset d = make_synthetic(4, 16, 100, 0.5, 0);
  const auto clients = partition_dirichlet(d, 10, 0.5, 0.2, 0);
  const ModelBundle m = build_model(arch_preset("mlp-s", 16, 4), 0);
  const PrototypeSet protos = init_prototypes(0, clients[0], {}, 0, 1);
  DistillOptions o;
  o.steps = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(distill_dataset(m, clients[0], protos, o));
}
BENCHMARK(BM_DistillSteps)->Arg(1)->Arg(100);

void BM_CacheSampling(benchmark::State& state) {
  const auto K = static_cast<std::size_t>(state.range(0));
  const std::size_t C = 10;
  KnowledgeCache kc(K, C);
  for (std::size_t k = 0; k < K; ++k) {
    std::vector<DistilledRecord> entry;
    for (std::size_t c = 0; c < C; ++c) entry.push_back(DistilledRecord{k, c, std::vector<double>(16, 1.0 * k), 0});
    kc.update_client_entry(k, std::move(entry));
  }
  const LabelProfile p{0, std::vector<double>(C, 0.1)};
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(kc.sample_for_device(p, 0.5, seed++));
}
BENCHMARK(BM_CacheSampling)->Arg(10)->Arg(100)->Arg(1000);

void BM_FederatedRound(benchmark::State& state) {
  RunConfig c;
  c.rounds = 1000;
  const auto algo = static_cast<Algorithm>(state.range(0));
  FederatedRun run(c, algo);
  for (auto _ : state) run.step();
  state.SetLabel(std::string(to_string(algo)));
}
BENCHMARK(BM_FederatedRound)->DenseRange(0, 3)->Iterations(5);

}  // namespace

BENCHMARK_MAIN();
