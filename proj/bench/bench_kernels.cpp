// Serial vs OpenMP dense-layer kernels on the layer shapes used in training.
//
//   bench_kernels --benchmark_filter=affine
//   OMP_NUM_THREADS=4 bench_kernels

#include <benchmark/benchmark.h>

#include <vector>

#include "e2e/kernels.hpp"
#include "e2e/rng.hpp"

using namespace e2e;

namespace {

Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  RandomStream rng(seed);
  Matrix m(rows, cols);
  for (auto& v : m.flat()) v = rng.gaussian();
  return m;
}

// args: batch, fan_in, fan_out
void shapes(benchmark::internal::Benchmark* b) {
  b->Args({320, 32, 32});     // transceiver hidden layer
  b->Args({320, 128, 128});   // generator hidden layer
  b->Args({4096, 14, 32});    // evaluation batch into the receiver
  b->Args({4096, 128, 128});
}

template <auto Kernel>
void bench_affine(benchmark::State& state) {
  const auto batch = static_cast<std::size_t>(state.range(0));
  const auto in = static_cast<std::size_t>(state.range(1));
  const auto out = static_cast<std::size_t>(state.range(2));
  const Matrix x = random_matrix(batch, in, 1);
  const Matrix w = random_matrix(in, out, 2);
  const std::vector<double> bias(out, 0.1);
  Matrix y(batch, out);
  for (auto _ : state) {
    Kernel(x, w, bias, y);
    benchmark::DoNotOptimize(y.flat().data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * batch * in * out));
}

template <auto Kernel>
void bench_backward_input(benchmark::State& state) {
  const auto batch = static_cast<std::size_t>(state.range(0));
  const auto in = static_cast<std::size_t>(state.range(1));
  const auto out = static_cast<std::size_t>(state.range(2));
  const Matrix dy = random_matrix(batch, out, 3);
  const Matrix w = random_matrix(in, out, 4);
  Matrix dx(batch, in);
  for (auto _ : state) {
    Kernel(dy, w, dx);
    benchmark::DoNotOptimize(dx.flat().data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * batch * in * out));
}

template <auto Kernel>
void bench_backward_weight(benchmark::State& state) {
  const auto batch = static_cast<std::size_t>(state.range(0));
  const auto in = static_cast<std::size_t>(state.range(1));
  const auto out = static_cast<std::size_t>(state.range(2));
  const Matrix x = random_matrix(batch, in, 5);
  const Matrix dy = random_matrix(batch, out, 6);
  Matrix dw(in, out);
  for (auto _ : state) {
    Kernel(x, dy, dw);
    benchmark::DoNotOptimize(dw.flat().data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * batch * in * out));
}

}  // namespace

BENCHMARK(bench_affine<kernels::serial::affine>)->Name("affine/serial")->Apply(shapes);
BENCHMARK(bench_affine<kernels::omp::affine>)->Name("affine/omp")->Apply(shapes)->UseRealTime();
BENCHMARK(bench_backward_input<kernels::serial::matmul_rhs_transposed>)->Name("dx/serial")->Apply(shapes);
BENCHMARK(bench_backward_input<kernels::omp::matmul_rhs_transposed>)->Name("dx/omp")->Apply(shapes)->UseRealTime();
BENCHMARK(bench_backward_weight<kernels::serial::matmul_lhs_transposed>)->Name("dw/serial")->Apply(shapes);
BENCHMARK(bench_backward_weight<kernels::omp::matmul_lhs_transposed>)->Name("dw/omp")->Apply(shapes)->UseRealTime();

BENCHMARK_MAIN();
