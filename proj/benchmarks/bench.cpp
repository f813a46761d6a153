#include <benchmark/benchmark.h>

#include <vector>

#include "ofbm/exact_sampler.hpp"
#include "ofbm/linalg.hpp"
#include "ofbm/model.hpp"
#include "ofbm/partial_sums.hpp"
#include "ofbm/telegraph.hpp"

using namespace ofbm;

namespace {

Matrix exponent(int d) {
  Matrix m = Matrix::identity(d) * 0.6;
  for (int i = 0; i + 1 < d; ++i) m(i, i + 1) = 0.1;
  return m;
}

std::vector<double> dyadic_grid(int intervals) {
  std::vector<double> g;
  for (int i = 0; i <= intervals; ++i) g.push_back(double(i) / intervals);
  return g;
}

void bm_mat_exp(benchmark::State& state) {
  const Matrix m = exponent(int(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(linalg::mat_exp(m));
}
BENCHMARK(bm_mat_exp)->Arg(2)->Arg(4)->Arg(8);

void bm_operator_norm(benchmark::State& state) {
  const Matrix m = exponent(int(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(linalg::operator_norm(m));
}
BENCHMARK(bm_operator_norm)->Arg(2)->Arg(8);

void bm_spectral_covariance(benchmark::State& state) {
  const int d = int(state.range(0));
  const model::OfbmSpec spec = model::make_spec(exponent(d), Matrix::identity(d), Matrix(d, d));
  const QuadratureConfig q;
  for (auto _ : state) benchmark::DoNotOptimize(model::spectral_covariance(spec, 0.7, 0.4, q));
}
BENCHMARK(bm_spectral_covariance)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);

void bm_gamma(benchmark::State& state) {
  const Matrix dexp = exponent(int(state.range(0)));
  const QuadratureConfig q;
  for (auto _ : state) benchmark::DoNotOptimize(model::gamma_mason_xiao(dexp, q));
}
BENCHMARK(bm_gamma)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);

void bm_fgn_noise(benchmark::State& state) {
  partial_sums::FgnEngine engine(0.7, long(state.range(0)));
  std::vector<double> buf(size_t(state.range(0)), 0.0);
  uint32_t rep = 0;
  for (auto _ : state) {
    RngStream stream(1, rep++, 0, StreamRole::kSpectrum);
    engine.sample(stream, buf.data());
    benchmark::DoNotOptimize(buf.data());
  }
}
BENCHMARK(bm_fgn_noise)->Arg(1 << 10)->Arg(1 << 14);

void bm_exact_path(benchmark::State& state) {
  const int d = 2;
  const exact_sampler::ExactSampler sampler(dyadic_grid(int(state.range(0))),
                                            Matrix::diag({0.7, 0.6}), Matrix());
  uint64_t rep = 0;
  for (auto _ : state) benchmark::DoNotOptimize(sampler.sample(1, rep++));
  (void)d;
}
BENCHMARK(bm_exact_path)->Arg(8)->Arg(64);

void bm_telegraph_path(benchmark::State& state) {
  const model::OfbmSpec spec =
      model::make_spec(Matrix(1, 1, {0.5}), Matrix(1, 1, {1.0}), Matrix(1, 1, {0.0}));
  QuadratureConfig q;
  q.x_max = 64.0;
  const telegraph::TelegraphSampler sampler(spec, dyadic_grid(8), q);
  uint64_t rep = 0;
  for (auto _ : state)
    benchmark::DoNotOptimize(sampler.sample(double(state.range(0)), 1, rep++));
}
BENCHMARK(bm_telegraph_path)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);

void bm_partial_sum_path(benchmark::State& state) {
  partial_sums::PartialSumConfig cfg;
  cfg.n = long(state.range(0));
  cfg.dexp = Matrix::diag({0.7, 0.6});
  const partial_sums::PartialSumSampler sampler(
      partial_sums::StationaryCovSeq::fgn_diagonal({0.7, 0.6}, {1.0, 1.0}), cfg,
      dyadic_grid(8));
  uint64_t rep = 0;
  for (auto _ : state) benchmark::DoNotOptimize(sampler.sample(1, rep++));
}
BENCHMARK(bm_partial_sum_path)->Arg(1 << 8)->Arg(1 << 12);

}  // namespace

BENCHMARK_MAIN();
