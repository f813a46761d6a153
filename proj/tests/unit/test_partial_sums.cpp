#include <cmath>
#include <vector>

#include "doctest.h"
#include "ofbm/error.hpp"
#include "ofbm/partial_sums.hpp"
#include "ofbm/rng.hpp"

using namespace ofbm;
using namespace ofbm::partial_sums;

namespace {

double fgn_direct(double h, long j) {
  if (j == 0) return 1.0;
  const double a = double(j - 1), b = double(j), c = double(j + 1);
  return 0.5 * (std::pow(c, 2 * h) - 2.0 * std::pow(b, 2 * h) + std::pow(a, 2 * h));
}

}  // namespace

TEST_CASE("fgn_covariance closed forms") {
  CHECK(fgn_covariance(0.7, 0) == 1.0);
  CHECK(fgn_covariance(0.3, 0) == 1.0);

  // H = 1/2: white noise, all lags vanish identically.
  for (long j : {1L, 2L, 17L}) CHECK(fgn_covariance(0.5, j) == 0.0);

  CHECK(fgn_covariance(0.7, 1) == doctest::Approx(0.5 * (std::pow(2.0, 1.4) - 2.0)).epsilon(1e-15));
  for (double h : {0.3, 0.6, 0.9})
    for (long j : {1L, 2L, 3L, 10L, 1000L})
      CHECK(fgn_covariance(h, j) == doctest::Approx(fgn_direct(h, j)).epsilon(1e-10));

  // Long-lag asymptotics gamma(j) ~ H(2H-1) j^{2H-2}.
  const double h = 0.7;
  const long j = 10000;
  const double asym = h * (2 * h - 1) * std::pow(double(j), 2 * h - 2);
  CHECK(fgn_covariance(h, j) == doctest::Approx(asym).epsilon(0.01));

  CHECK_THROWS_AS(fgn_covariance(1.0, 1), DomainError);
  CHECK_THROWS_AS(fgn_covariance(0.0, 1), DomainError);
  CHECK_THROWS_AS(fgn_covariance(0.7, -1), InvalidInputError);
}

TEST_CASE("covariance sequences") {
  const StationaryCovSeq fgn = StationaryCovSeq::fgn_diagonal({0.7, 0.6}, {2.0, 1.0});
  const Matrix r0 = fgn.r(0);
  CHECK(r0(0, 0) == 4.0);  // scale^2
  CHECK(r0(1, 1) == 1.0);
  CHECK(r0(0, 1) == 0.0);
  CHECK(fgn.r(3)(0, 0) == doctest::Approx(4.0 * fgn_direct(0.7, 3)).epsilon(1e-12));

  // Explicit table: MA(1)-style lags, recoverable and zero beyond the table.
  const Matrix t0(1, 1, {2.0});
  const Matrix t1(1, 1, {1.0});
  const StationaryCovSeq tab = StationaryCovSeq::explicit_table({t0, t1});
  CHECK(tab.r(0)(0, 0) == 2.0);
  CHECK(tab.r(1)(0, 0) == 1.0);
  CHECK(tab.r(5)(0, 0) == 0.0);

  // r(0) must be symmetric and the block-Toeplitz extension PSD.
  CHECK_THROWS_AS(StationaryCovSeq::explicit_table({Matrix(2, 2, {1, 0.5, 0.2, 1})}),
                  InvalidInputError);
  CHECK_THROWS_AS(StationaryCovSeq::explicit_table({t0, Matrix(1, 1, {2.5})}),
                  NotPositiveSemidefiniteError);
}

TEST_CASE("fgn engine: white-noise case and lag covariances") {
  const long len = 64;
  FgnEngine engine(0.5, len);
  CHECK(engine.length() == len);
  CHECK_FALSE(engine.used_fallback());

  const long reps = 4000;
  std::vector<double> buf(static_cast<size_t>(len), 0.0);
  double lag0 = 0.0, lag1 = 0.0;
  for (long r = 0; r < reps; ++r) {
    RngStream stream(31, uint32_t(r), 0, StreamRole::kSpectrum);
    engine.sample(stream, buf.data());
    for (long i = 0; i < len; ++i) lag0 += buf[size_t(i)] * buf[size_t(i)];
    for (long i = 0; i + 1 < len; ++i) lag1 += buf[size_t(i)] * buf[size_t(i) + 1];
  }
  lag0 /= double(reps * len);
  lag1 /= double(reps * (len - 1));
  CHECK(std::abs(lag0 - 1.0) < 0.05);
  CHECK(std::abs(lag1) < 0.05);

  // Determinism: same stream tuple, same noise.
  std::vector<double> buf2(static_cast<size_t>(len), 0.0);
  RngStream s1(31, 9, 0, StreamRole::kSpectrum), s2(31, 9, 0, StreamRole::kSpectrum);
  engine.sample(s1, buf.data());
  engine.sample(s2, buf2.data());
  CHECK(buf == buf2);

  // Persistent case: lag-1 covariance matches the fgn value.
  FgnEngine pers(0.8, 128);
  CHECK_FALSE(pers.used_fallback());
  double p0 = 0.0, p1 = 0.0;
  std::vector<double> pbuf(128);
  for (long r = 0; r < reps; ++r) {
    RngStream stream(32, uint32_t(r), 0, StreamRole::kSpectrum);
    pers.sample(stream, pbuf.data());
    for (int i = 0; i < 128; ++i) p0 += pbuf[size_t(i)] * pbuf[size_t(i)];
    for (int i = 0; i + 1 < 128; ++i) p1 += pbuf[size_t(i)] * pbuf[size_t(i) + 1];
  }
  p0 /= double(reps * 128);
  p1 /= double(reps * 127);
  CHECK(std::abs(p0 - 1.0) < 0.05);
  CHECK(std::abs(p1 - fgn_direct(0.8, 1)) < 0.05);

  const std::vector<double> once = sample_fgn(0.8, 32, s1);
  CHECK(once.size() == 32);
}

TEST_CASE("explicit-table engine covariance") {
  // MA(1) with rho = 0.4: r0 = 1, r1 = 0.4 (PSD since |rho| <= 1/2).
  const StationaryCovSeq cov =
      StationaryCovSeq::explicit_table({Matrix(1, 1, {1.0}), Matrix(1, 1, {0.4})});
  StationaryExplicitEngine engine(cov, 32);
  const long reps = 3000;
  double l0 = 0.0, l1 = 0.0, l2 = 0.0;
  std::vector<double> buf(32);
  for (long r = 0; r < reps; ++r) {
    RngStream stream(77, uint32_t(r), 0, StreamRole::kGaussian);
    engine.sample(stream, buf.data());
    for (int i = 0; i < 32; ++i) l0 += buf[size_t(i)] * buf[size_t(i)];
    for (int i = 0; i + 1 < 32; ++i) l1 += buf[size_t(i)] * buf[size_t(i) + 1];
    for (int i = 0; i + 2 < 32; ++i) l2 += buf[size_t(i)] * buf[size_t(i) + 2];
  }
  l0 /= double(reps * 32);
  l1 /= double(reps * 31);
  l2 /= double(reps * 30);
  CHECK(std::abs(l0 - 1.0) < 0.06);
  CHECK(std::abs(l1 - 0.4) < 0.06);
  CHECK(std::abs(l2) < 0.06);
}

TEST_CASE("partial_sum_path hand example") {
  // One component, N = 4, H = 1/2: X(1/2) = (z1 + z2)/sqrt(4) with z = (1,2,...).
  PartialSumConfig cfg;
  cfg.n = 4;
  cfg.dexp = Matrix(1, 1, {0.5});
  const std::vector<double> grid = {0.0, 0.5, 1.0};
  const GridPath path = partial_sum_path({1.0, 2.0, 3.0, 4.0}, 1, cfg, grid);
  CHECK(path.value(0, 0) == 0.0);
  CHECK(path.value(1, 0) == doctest::Approx(1.5).epsilon(1e-14));
  CHECK(path.value(2, 0) == doctest::Approx(5.0).epsilon(1e-14));

  // Explicit normalization overrides the N^{-D} default.
  PartialSumConfig cfg2 = cfg;
  cfg2.d_n = Matrix(1, 1, {0.25});
  CHECK(partial_sum_path({1.0, 2.0, 3.0, 4.0}, 1, cfg2, grid).value(2, 0) == 2.5);

  CHECK_THROWS_AS(partial_sum_path({1.0, 2.0}, 1, cfg, grid), InvalidInputError);
  PartialSumConfig bad = cfg;
  bad.d_n = Matrix(1, 1, {0.0});
  CHECK_THROWS_AS(partial_sum_path({1.0, 2.0, 3.0, 4.0}, 1, bad, grid), InvalidInputError);
}

TEST_CASE("partial-sum covariance formulas") {
  const StationaryCovSeq cov = StationaryCovSeq::fgn_diagonal({0.5}, {1.0});
  // H = 1/2: Cov(Q(t), Q(s)) = min(floor(Nt), floor(Ns)) / N.
  CHECK(finite_n_partial_sum_covariance(cov, 8, 0.5, 0.75)(0, 0) ==
        doctest::Approx(4.0 / 8.0).epsilon(1e-14));
  CHECK(finite_n_partial_sum_covariance(cov, 8, 0.75, 0.5)(0, 0) ==
        doctest::Approx(4.0 / 8.0).epsilon(1e-14));
  CHECK(finite_n_partial_sum_covariance(cov, 8, 0.0, 0.75)(0, 0) == 0.0);

  const StationaryCovSeq cov7 = StationaryCovSeq::fgn_diagonal({0.7}, {1.0});
  const double t = 0.5, s = 1.0, h = 0.7;
  CHECK(fbm_limit_covariance(cov7, t, s)(0, 0) ==
        doctest::Approx(0.5 * (std::pow(t, 2 * h) + std::pow(s, 2 * h) -
                               std::pow(s - t, 2 * h)))
            .epsilon(1e-14));

  // Finite-N converges to the limit on a dyadic time pair.
  const double lim = fbm_limit_covariance(cov7, 0.5, 1.0)(0, 0);
  const double gap64 = std::abs(finite_n_partial_sum_covariance(cov7, 64, 0.5, 1.0)(0, 0) - lim);
  const double gap1024 =
      std::abs(finite_n_partial_sum_covariance(cov7, 1024, 0.5, 1.0)(0, 0) - lim);
  CHECK(gap64 <= 1e-12);  // dyadic times align exactly: floor(Nt)/N = t
  CHECK(gap1024 <= 1e-12);
  // Off-dyadic times show the O(1/N) discretization gap shrinking.
  const double off64 =
      std::abs(finite_n_partial_sum_covariance(cov7, 64, 0.3, 0.9)(0, 0) -
               fbm_limit_covariance(cov7, 0.3, 0.9)(0, 0));
  const double off1024 =
      std::abs(finite_n_partial_sum_covariance(cov7, 1024, 0.3, 0.9)(0, 0) -
               fbm_limit_covariance(cov7, 0.3, 0.9)(0, 0));
  CHECK(off1024 < off64);
}

TEST_CASE("en_asymptotics") {
  // N = 1 reduces to r(0); a 3-term explicit table is a direct hand sum.
  const Matrix r0(1, 1, {2.0});
  const Matrix r1(1, 1, {0.8});
  const StationaryCovSeq tab = StationaryCovSeq::explicit_table({r0, r1});
  CHECK(en_asymptotics(tab, 1)(0, 0) == 2.0);
  // E_3 = 3 r0 + 2 (r1 + r1^T) = 6 + 3.2.
  CHECK(en_asymptotics(tab, 3)(0, 0) == doctest::Approx(9.2).epsilon(1e-15));

  // fGn telescopes to E_N = N^{2H} exactly up to rounding.
  for (double h : {0.3, 0.7}) {
    const StationaryCovSeq fgn = StationaryCovSeq::fgn_diagonal({h}, {1.0});
    const double ratio = en_asymptotics(fgn, 1024)(0, 0) / std::pow(1024.0, 2 * h);
    CHECK(std::abs(ratio - 1.0) < 1e-12);
  }
}

TEST_CASE("antipersistent residual decays") {
  const StationaryCovSeq cov = StationaryCovSeq::fgn_diagonal({0.3}, {1.0});
  const AntipersistentCheck c10 = check_antipersistent_sum(cov, 10);
  const AntipersistentCheck c100 = check_antipersistent_sum(cov, 100);
  const AntipersistentCheck c1000 = check_antipersistent_sum(cov, 1000);

  // Telescoped partial sum leaves exactly (L+1)^{2H} - L^{2H}.
  CHECK(c10.residual ==
        doctest::Approx(std::pow(11.0, 0.6) - std::pow(10.0, 0.6)).epsilon(1e-9));
  CHECK(c100.residual < c10.residual);
  CHECK(c1000.residual < c100.residual);
  CHECK(c10.tail_estimate > c100.tail_estimate);
  CHECK(c100.tail_estimate > 0.0);
}

TEST_CASE("partial-sum sampler determinism") {
  PartialSumConfig cfg;
  cfg.n = 64;
  cfg.dexp = Matrix::diag({0.7, 0.6});
  const std::vector<double> grid = {0.0, 0.25, 0.5, 0.75, 1.0};
  const PartialSumSampler sampler(StationaryCovSeq::fgn_diagonal({0.7, 0.6}, {1.0, 1.0}), cfg,
                                  grid);
  const GridPath a = sampler.sample(5, 2);
  const GridPath b = sampler.sample(5, 2);
  CHECK(a.values == b.values);
  CHECK(a.value(0, 0) == 0.0);
  CHECK(a.d == 2);
  const GridPath c = sampler.sample(5, 3);
  CHECK_FALSE(a.values == c.values);
}
