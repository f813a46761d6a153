#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "ofbm/grid_path.hpp"
#include "ofbm/linalg.hpp"
#include "ofbm/matrix.hpp"
#include "ofbm/rng.hpp"

namespace ofbm::partial_sums {

// Exact fractional-Gaussian-noise autocovariance
//   gamma_H(j) = 1/2 (|j+1|^{2H} - 2 j^{2H} + |j-1|^{2H}),
// grouped as a second difference of first differences so the telescoping
// identities (partial-sum variance m^{2H}) survive floating point to ~1e-14.
double fgn_covariance(double hurst, long j);

// Lag-covariance rule j -> r(j) for a stationary d-vector Gaussian sequence.
// Either per-component fGn (diagonal lags, scale_k^2 gamma_{H_k}(j)) or an
// explicit finite table (zero beyond the last lag).
struct StationaryCovSeq {
  enum class Kind { kFgnDiagonal, kExplicit };

  Kind kind = Kind::kFgnDiagonal;
  int d = 0;
  std::vector<double> hurst;   // fgn-diagonal
  std::vector<double> scale;   // fgn-diagonal
  std::vector<Matrix> lags;    // explicit, lags[j] = r(j)

  Matrix r(long j) const;

  static StationaryCovSeq fgn_diagonal(std::vector<double> hurst, std::vector<double> scale);
  // Validates that the block-Toeplitz matrix of lags 0..L is PSD (Cholesky with
  // a small jitter ladder); throws NotPositiveSemidefiniteError otherwise.
  // Table size capped at (L+1)*d <= 2048 so the validation stays cheap.
  static StationaryCovSeq explicit_table(std::vector<Matrix> lags);
};

// Exact stationary Gaussian synthesis by circulant embedding: eigenvalues of the
// circulant extension are precomputed once; each sample costs one half-spectrum
// randomization plus one inverse FFT. If an eigenvalue dips below
// -1e-8 * max, falls back to a dense Toeplitz Cholesky factor (length <= 4096),
// else throws NumericalFailureError.
class FgnEngine {
 public:
  FgnEngine(double hurst, long length);

  long length() const { return length_; }
  bool used_fallback() const { return m_ == 0; }

  // Writes `length` zero-mean unit-scale fGn values.
  void sample(RngStream& stream, double* out) const;

 private:
  double hurst_;
  long length_ = 0;
  long m_ = 0;                    // circulant size, 0 when the fallback is active
  std::vector<double> sqrt_eig_;  // sqrt(lambda_k), k = 0..m/2
  Matrix chol_l_;                 // dense fallback factor
};

// One component of fGn with autocovariance gamma_H; length <= 2^22.
std::vector<double> sample_fgn(double hurst, long length, RngStream& stream);

// Dense factorization of the block-Toeplitz covariance of (Z_1..Z_length) for an
// explicit table; r(j) = 0 beyond the table. length * d <= 4096.
class StationaryExplicitEngine {
 public:
  StationaryExplicitEngine(StationaryCovSeq cov, long length);

  // Writes length * d values, row-major [i][component].
  void sample(RngStream& stream, double* out) const;

 private:
  StationaryCovSeq cov_;
  long length_ = 0;
  Matrix chol_l_;
};

std::vector<double> sample_stationary_explicit(const StationaryCovSeq& cov, long length,
                                               RngStream& stream);

// Q_N(t) = d_N sum_{i <= floor(N t)} Z_i. d_n empty means the fGn convention
// d_N = N^{-D}; N t within 1e-9 of an integer snaps up before the floor.
struct PartialSumConfig {
  long n = 0;    // N, sequence steps per unit time
  Matrix dexp;   // exponent D
  Matrix d_n;    // explicit normalization matrix; empty selects N^{-D}
};

GridPath partial_sum_path(const std::vector<double>& z, int d, const PartialSumConfig& cfg,
                          const std::vector<double>& grid);

// Replicate driver: component streams keyed (seed, replicate, component), the
// stationary sequence drawn to exactly floor(N * grid.back()) terms, then summed.
class PartialSumSampler {
 public:
  PartialSumSampler(StationaryCovSeq cov, PartialSumConfig cfg, std::vector<double> grid);

  GridPath sample(std::uint64_t seed, std::uint64_t replicate) const;

  const std::vector<double>& grid() const { return grid_; }
  const StationaryCovSeq& cov() const { return cov_; }
  const PartialSumConfig& config() const { return cfg_; }

 private:
  StationaryCovSeq cov_;
  PartialSumConfig cfg_;
  std::vector<double> grid_;
  long zlen_ = 0;
  Matrix norm_;
  std::vector<FgnEngine> engines_;  // fgn-diagonal, one per component
  std::shared_ptr<StationaryExplicitEngine> explicit_engine_;
};

// || r(0) + 2 sum_{j=1..L} r(j) || (operator norm, Kahan-compensated sums) with
// an asymptotic estimate of the neglected tail 2 sum_{j>L} r(j). The residual
// tends to 0 iff the sequence is antipersistent (each H < 1/2 in the fGn case,
// where the partial sum telescopes to (L+1)^{2H} - L^{2H} per unit scale).
struct AntipersistentCheck {
  double residual = 0.0;
  double tail_estimate = 0.0;
};
AntipersistentCheck check_antipersistent_sum(const StationaryCovSeq& cov, long l);

// E_N = sum_{i,j <= N} r(i-j) = N r(0) + sum_{j=1..N-1} (N-j) (r(j) + r(j)^T)
// computed as the exact double sum (r(-j) = r(j)^T); for unit-scale fGn the
// diagonal equals N^{2H} to ~1e-14 relative.
Matrix en_asymptotics(const StationaryCovSeq& cov, long n);

// Exact E[Q_N(t) Q_N(s)^T] for the fgn-diagonal construction with d_N = N^{-D}:
// diagonal entries scale_k^2 (a^{2H_k} + b^{2H_k} - |a-b|^{2H_k}) / (2 N^{2H_k})
// with a = floor(N t), b = floor(N s) (snapped); zero off the diagonal.
Matrix finite_n_partial_sum_covariance(const StationaryCovSeq& cov, long n, double t, double s);

// The N -> infinity limit of the above: per-component fBm covariance
// scale_k^2 (t^{2H_k} + s^{2H_k} - |t-s|^{2H_k}) / 2.
Matrix fbm_limit_covariance(const StationaryCovSeq& cov, double t, double s);

}  // namespace ofbm::partial_sums
