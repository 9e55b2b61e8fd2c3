// OpenMP kernels against their serial references on a d x d x d problem.
// Set OMP_NUM_THREADS to compare thread counts.

#include <benchmark/benchmark.h>

#include "bintensor/decomp.hpp"
#include "bintensor/sim.hpp"

using namespace bintensor;

namespace {

struct Problem {
  BinaryTensor y;
  CpFactors factors;
  DenseTensor theta;
  FitConfig cfg;
};

Problem make_problem(std::size_t d, std::size_t rank) {
  Rng rng = make_rng(17);
  const LinkSpec link(LinkFamily::logistic, 0.1);
  Problem p;
  const Dims dims{d, d, d};
  p.y = quantize_latent(gen_cp_signal(dims, rank, rng), link, rng);
  p.factors = random_factors(dims, rank, 0.1, rng);
  p.theta = cp_reconstruct(p.factors);
  p.cfg.rank = rank;
  p.cfg.link = link;
  return p;
}

void BM_UpdateMode(benchmark::State& state) {
  const Problem p = make_problem(static_cast<std::size_t>(state.range(0)), 5);
  for (auto _ : state) benchmark::DoNotOptimize(update_mode(p.y, p.factors, 0, p.cfg));
}

void BM_UpdateModeSerial(benchmark::State& state) {
  const Problem p = make_problem(static_cast<std::size_t>(state.range(0)), 5);
  for (auto _ : state) benchmark::DoNotOptimize(serial::update_mode(p.y, p.factors, 0, p.cfg));
}

void BM_LogLikelihood(benchmark::State& state) {
  const Problem p = make_problem(static_cast<std::size_t>(state.range(0)), 5);
  for (auto _ : state) benchmark::DoNotOptimize(log_likelihood(p.y, p.theta, p.cfg.link));
}

void BM_LogLikelihoodSerial(benchmark::State& state) {
  const Problem p = make_problem(static_cast<std::size_t>(state.range(0)), 5);
  for (auto _ : state) benchmark::DoNotOptimize(serial::log_likelihood(p.y, p.theta, p.cfg.link));
}

void BM_Reconstruct(benchmark::State& state) {
  const Problem p = make_problem(static_cast<std::size_t>(state.range(0)), 5);
  for (auto _ : state) benchmark::DoNotOptimize(cp_reconstruct(p.factors));
}

void BM_ReconstructSerial(benchmark::State& state) {
  const Problem p = make_problem(static_cast<std::size_t>(state.range(0)), 5);
  for (auto _ : state) benchmark::DoNotOptimize(serial::cp_reconstruct(p.factors));
}

}  // namespace

BENCHMARK(BM_UpdateMode)->Arg(20)->Arg(40)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_UpdateModeSerial)->Arg(20)->Arg(40)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_LogLikelihood)->Arg(20)->Arg(40)->Arg(80)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_LogLikelihoodSerial)->Arg(20)->Arg(40)->Arg(80)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_Reconstruct)->Arg(20)->Arg(40)->Arg(80)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_ReconstructSerial)->Arg(20)->Arg(40)->Arg(80)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
