// Serial Kahan reduction vs the blocked OpenMP reduction over all comparison triples.

#include <benchmark/benchmark.h>
#include <omp.h>

#include <orpa/objective.hpp>
#include <orpa/verification.hpp>

namespace {

orpa::Problem sized_problem(std::size_t n_responses) {
  orpa::InstanceSpec spec;
  spec.n_prompts = 4;
  spec.n_responses = n_responses;
  spec.feature_dim = 8;
  return orpa::make_instance(spec, 99);
}

void run(benchmark::State& state, orpa::Reduction mode, orpa::Derivatives what) {
  const orpa::Problem problem = sized_problem(static_cast<std::size_t>(state.range(0)));
  const int threads = static_cast<int>(state.range(1));
  const int saved = omp_get_max_threads();
  omp_set_num_threads(threads);
  const orpa::Vector theta = problem.theta_ref + orpa::Vector::Constant(problem.dim(), 0.1);
  for (auto _ : state) {
    auto e = orpa::smoothed_objective(problem, theta, 1e-6, what, mode);
    benchmark::DoNotOptimize(e.value);
  }
  omp_set_num_threads(saved);
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(problem.env.num_triples()));
}

void BM_GradientSerial(benchmark::State& s) { run(s, orpa::Reduction::serial, orpa::Derivatives::gradient); }
void BM_GradientBlocked(benchmark::State& s) { run(s, orpa::Reduction::blocked, orpa::Derivatives::gradient); }
void BM_HessianSerial(benchmark::State& s) { run(s, orpa::Reduction::serial, orpa::Derivatives::hessian); }
void BM_HessianBlocked(benchmark::State& s) { run(s, orpa::Reduction::blocked, orpa::Derivatives::hessian); }

void serial_args(benchmark::internal::Benchmark* b) {
  for (int ny : {16, 64, 256}) b->Args({ny, 1});
}

void blocked_args(benchmark::internal::Benchmark* b) {
  const int max_threads = omp_get_num_procs();
  for (int ny : {16, 64, 256})
    for (int t = 1; t <= max_threads; t *= 2) b->Args({ny, t});
}

}  // namespace

BENCHMARK(BM_GradientSerial)->Apply(serial_args)->ArgNames({"ny", "threads"})->UseRealTime();
BENCHMARK(BM_GradientBlocked)->Apply(blocked_args)->ArgNames({"ny", "threads"})->UseRealTime();
BENCHMARK(BM_HessianSerial)->Apply(serial_args)->ArgNames({"ny", "threads"})->UseRealTime();
BENCHMARK(BM_HessianBlocked)->Apply(blocked_args)->ArgNames({"ny", "threads"})->UseRealTime();

BENCHMARK_MAIN();
