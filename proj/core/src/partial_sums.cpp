#include "ofbm/partial_sums.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>

#include "ofbm/error.hpp"

namespace ofbm::partial_sums {

namespace {

constexpr long kMaxFgnLength = 1L << 22;
constexpr long kMaxDenseSize = 4096;  // length * d cap for dense factorization
constexpr long kMaxTableSize = 2048;  // (L+1) * d cap for explicit tables

// FFTW plan creation is not thread-safe, so creation is locked and plans are
// kept per transform size. The new-array execute calls are safe concurrently on
// distinct buffers; FFTW_UNALIGNED lets them run on plain std::vector storage.
class PlanCache {
 public:
  static PlanCache& instance() {
    static PlanCache cache;
    return cache;
  }

  fftw_plan r2c(long m) {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = r2c_.find(m);
    if (it != r2c_.end()) return it->second;
    std::vector<double> re(static_cast<size_t>(m));
    std::vector<double> cx(2 * (size_t(m) / 2 + 1));
    fftw_plan p = fftw_plan_dft_r2c_1d(int(m), re.data(),
                                       reinterpret_cast<fftw_complex*>(cx.data()),
                                       FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (p == nullptr) throw NumericalFailureError("fftw: r2c plan creation failed");
    r2c_[m] = p;
    return p;
  }

  fftw_plan c2r(long m) {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = c2r_.find(m);
    if (it != c2r_.end()) return it->second;
    std::vector<double> cx(2 * (size_t(m) / 2 + 1));
    std::vector<double> re(static_cast<size_t>(m));
    fftw_plan p = fftw_plan_dft_c2r_1d(int(m), reinterpret_cast<fftw_complex*>(cx.data()),
                                       re.data(), FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (p == nullptr) throw NumericalFailureError("fftw: c2r plan creation failed");
    c2r_[m] = p;
    return p;
  }

 private:
  std::mutex mu_;
  std::map<long, fftw_plan> r2c_, c2r_;
};

struct Kahan {
  double sum = 0.0;
  double carry = 0.0;
  void add(double x) {
    const double y = x - carry;
    const double t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }
};

long floor_snap(double v) { return long(std::floor(v + 1e-9)); }

void check_cov(const StationaryCovSeq& cov) {
  if (cov.d < 1) throw InvalidInputError("StationaryCovSeq: empty rule");
  if (cov.kind == StationaryCovSeq::Kind::kFgnDiagonal) {
    if (int(cov.hurst.size()) != cov.d || int(cov.scale.size()) != cov.d)
      throw InvalidInputError("StationaryCovSeq: component count mismatch");
  } else if (cov.lags.empty()) {
    throw InvalidInputError("StationaryCovSeq: explicit table is empty");
  }
}

// Normalization matrix for Q_N: explicit d_n when given, else N^{-D}.
Matrix resolve_norm(const PartialSumConfig& cfg, int d) {
  if (cfg.n < 2) throw InvalidInputError("partial sums: N must be >= 2");
  if (cfg.d_n.empty()) {
    if (cfg.dexp.rows() != d || cfg.dexp.cols() != d || !cfg.dexp.all_finite())
      throw InvalidInputError("partial sums: exponent must be a finite d x d matrix");
    Matrix neg = cfg.dexp;
    neg *= -1.0;
    return linalg::mat_power(double(cfg.n), neg);
  }
  if (cfg.d_n.rows() != d || cfg.d_n.cols() != d || !cfg.d_n.all_finite())
    throw InvalidInputError("partial sums: normalization must be a finite d x d matrix");
  try {
    linalg::detail::lu_solve(cfg.d_n, Matrix::identity(d));
  } catch (const Error&) {
    throw InvalidInputError("partial sums: normalization matrix is singular");
  }
  return cfg.d_n;
}

// Block-Toeplitz covariance of (Z_1..Z_n) with blocks r(i-j), lower blocks by
// transpose so the matrix is symmetric even for asymmetric tables.
Matrix block_toeplitz(const StationaryCovSeq& cov, long n) {
  const int d = cov.d;
  const long size = n * d;
  Matrix b(static_cast<int>(size), static_cast<int>(size));
  for (long i = 0; i < n; ++i) {
    for (long j = i; j < n; ++j) {
      const Matrix rj = cov.r(j - i);
      for (int a = 0; a < d; ++a) {
        for (int c = 0; c < d; ++c) {
          b(int(i * d + a), int(j * d + c)) = rj(a, c);
          b(int(j * d + c), int(i * d + a)) = rj(a, c);
        }
      }
    }
  }
  return b;
}

}  // namespace

double fgn_covariance(double hurst, long j) {
  if (!(hurst > 0.0 && hurst < 1.0))
    throw DomainError("fgn_covariance: Hurst index must lie in (0,1)");
  if (j < 0) throw InvalidInputError("fgn_covariance: lag must be nonnegative");
  const double th = 2.0 * hurst;
  const double am = std::pow(double(j < 1 ? 1 - j : j - 1), th);
  const double a0 = std::pow(double(j), th);
  const double ap = std::pow(double(j + 1), th);
  // Grouped differences: for j >= 2 both subtractions are exact (Sterbenz), so
  // the only floating-point noise left is the rounding of the pow values, which
  // cancels structurally in telescoped sums over lags.
  return 0.5 * ((ap - a0) - (a0 - am));
}

Matrix StationaryCovSeq::r(long j) const {
  check_cov(*this);
  if (j < 0) throw InvalidInputError("StationaryCovSeq::r: lag must be nonnegative");
  if (kind == Kind::kFgnDiagonal) {
    Matrix out(d, d);
    for (int k = 0; k < d; ++k) out(k, k) = scale[k] * scale[k] * fgn_covariance(hurst[k], j);
    return out;
  }
  if (j < long(lags.size())) return lags[size_t(j)];
  return Matrix(d, d);
}

StationaryCovSeq StationaryCovSeq::fgn_diagonal(std::vector<double> hurst,
                                                std::vector<double> scale) {
  if (hurst.empty() || hurst.size() != scale.size())
    throw InvalidInputError("fgn_diagonal: need one (H, scale) pair per component");
  for (double h : hurst)
    if (!(h > 0.0 && h < 1.0)) throw DomainError("fgn_diagonal: Hurst index must lie in (0,1)");
  for (double s : scale)
    if (!(s > 0.0) || !std::isfinite(s))
      throw InvalidInputError("fgn_diagonal: scales must be positive and finite");
  StationaryCovSeq cov;
  cov.kind = Kind::kFgnDiagonal;
  cov.d = int(hurst.size());
  cov.hurst = std::move(hurst);
  cov.scale = std::move(scale);
  return cov;
}

StationaryCovSeq StationaryCovSeq::explicit_table(std::vector<Matrix> lags) {
  if (lags.empty()) throw InvalidInputError("explicit_table: table is empty");
  const int d = lags[0].rows();
  if (d < 1) throw InvalidInputError("explicit_table: empty lag matrices");
  for (const Matrix& m : lags) {
    if (m.rows() != d || m.cols() != d)
      throw InvalidInputError("explicit_table: lag matrices must share one square shape");
    if (!m.all_finite()) throw InvalidInputError("explicit_table: non-finite lag entry");
  }
  if (long(lags.size()) * d > kMaxTableSize)
    throw InvalidInputError("explicit_table: table larger than the validation cap");
  const Matrix& r0 = lags[0];
  const double tol = 1e-10 * std::max(1.0, r0.max_abs());
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j)
      if (std::abs(r0(i, j) - r0(j, i)) > tol)
        throw InvalidInputError("explicit_table: r(0) must be symmetric");

  StationaryCovSeq cov;
  cov.kind = Kind::kExplicit;
  cov.d = d;
  cov.lags = std::move(lags);
  // PSD validation over the whole table; throws NotPositiveSemidefiniteError.
  linalg::cholesky_psd(block_toeplitz(cov, long(cov.lags.size())), 1e-8);
  return cov;
}

FgnEngine::FgnEngine(double hurst, long length) : hurst_(hurst), length_(length) {
  if (!(hurst > 0.0 && hurst < 1.0))
    throw DomainError("FgnEngine: Hurst index must lie in (0,1)");
  if (length < 1 || length > kMaxFgnLength)
    throw InvalidInputError("FgnEngine: length must lie in [1, 2^22]");

  long m = 4;
  while (m < 2 * length) m *= 2;
  std::vector<double> c(static_cast<size_t>(m));
  for (long j = 0; j <= m / 2; ++j) c[size_t(j)] = fgn_covariance(hurst, j);
  for (long j = m / 2 + 1; j < m; ++j) c[size_t(j)] = c[size_t(m - j)];

  std::vector<double> spec(2 * (size_t(m) / 2 + 1));
  fftw_execute_dft_r2c(PlanCache::instance().r2c(m), c.data(),
                       reinterpret_cast<fftw_complex*>(spec.data()));
  double max_eig = 0.0;
  double min_eig = std::numeric_limits<double>::infinity();
  for (long k = 0; k <= m / 2; ++k) {
    const double lam = spec[2 * size_t(k)];
    max_eig = std::max(max_eig, lam);
    min_eig = std::min(min_eig, lam);
  }
  if (min_eig < -1e-8 * max_eig) {
    // Embedding not nonnegative: dense Toeplitz factor instead.
    if (length > kMaxDenseSize)
      throw NumericalFailureError(
          "FgnEngine: circulant embedding produced negative eigenvalues and the "
          "sequence is too long for the dense fallback");
    Matrix t(static_cast<int>(length), static_cast<int>(length));
    for (long i = 0; i < length; ++i)
      for (long j = 0; j < length; ++j) t(int(i), int(j)) = fgn_covariance(hurst, std::abs(i - j));
    chol_l_ = linalg::cholesky_psd(t, 1e-8).l;
    return;
  }
  sqrt_eig_.resize(size_t(m) / 2 + 1);
  for (long k = 0; k <= m / 2; ++k)
    sqrt_eig_[size_t(k)] = std::sqrt(std::max(0.0, spec[2 * size_t(k)]));
  m_ = m;
}

void FgnEngine::sample(RngStream& stream, double* out) const {
  if (m_ == 0) {
    std::vector<double> g(static_cast<size_t>(length_));
    for (double& v : g) v = stream.gaussian();
    for (long i = 0; i < length_; ++i) {
      double acc = 0.0;
      for (long j = 0; j <= i; ++j) acc += chol_l_(int(i), int(j)) * g[size_t(j)];
      out[i] = acc;
    }
    return;
  }
  const long m = m_;
  const long half = m / 2;
  // Hermitian half-spectrum randomization: independent complex Gaussians with
  // E|W_k|^2 = lambda_k, real at k = 0 and m/2; the inverse FFT then yields a
  // real sequence whose covariance is exactly the circulant of the embedding.
  std::vector<double> w(2 * (size_t(half) + 1));
  w[0] = sqrt_eig_[0] * stream.gaussian();
  w[1] = 0.0;
  const double rh = std::sqrt(0.5);
  for (long k = 1; k < half; ++k) {
    const double s = sqrt_eig_[size_t(k)] * rh;
    w[2 * size_t(k)] = s * stream.gaussian();
    w[2 * size_t(k) + 1] = s * stream.gaussian();
  }
  w[2 * size_t(half)] = sqrt_eig_[size_t(half)] * stream.gaussian();
  w[2 * size_t(half) + 1] = 0.0;

  std::vector<double> y(static_cast<size_t>(m));
  fftw_execute_dft_c2r(PlanCache::instance().c2r(m), reinterpret_cast<fftw_complex*>(w.data()),
                       y.data());
  const double inv = 1.0 / std::sqrt(double(m));
  for (long i = 0; i < length_; ++i) out[i] = inv * y[size_t(i)];
}

std::vector<double> sample_fgn(double hurst, long length, RngStream& stream) {
  FgnEngine engine(hurst, length);
  std::vector<double> out(static_cast<size_t>(length));
  engine.sample(stream, out.data());
  return out;
}

StationaryExplicitEngine::StationaryExplicitEngine(StationaryCovSeq cov, long length)
    : cov_(std::move(cov)), length_(length) {
  check_cov(cov_);
  if (length < 1) throw InvalidInputError("StationaryExplicitEngine: length must be >= 1");
  if (length * cov_.d > kMaxDenseSize)
    throw InvalidInputError("StationaryExplicitEngine: length * d exceeds the dense cap");
  chol_l_ = linalg::cholesky_psd(block_toeplitz(cov_, length), 1e-8).l;
}

void StationaryExplicitEngine::sample(RngStream& stream, double* out) const {
  const long n = length_ * cov_.d;
  std::vector<double> g(static_cast<size_t>(n));
  for (double& v : g) v = stream.gaussian();
  for (long i = 0; i < n; ++i) {
    double acc = 0.0;
    for (long j = 0; j <= i; ++j) acc += chol_l_(int(i), int(j)) * g[size_t(j)];
    out[i] = acc;
  }
}

std::vector<double> sample_stationary_explicit(const StationaryCovSeq& cov, long length,
                                               RngStream& stream) {
  StationaryExplicitEngine engine(cov, length);
  std::vector<double> out(size_t(length) * cov.d);
  engine.sample(stream, out.data());
  return out;
}

GridPath partial_sum_path(const std::vector<double>& z, int d, const PartialSumConfig& cfg,
                          const std::vector<double>& grid) {
  if (d < 1) throw InvalidInputError("partial_sum_path: d must be >= 1");
  if (z.size() % size_t(d) != 0)
    throw InvalidInputError("partial_sum_path: sequence length is not a multiple of d");
  check_sampling_grid(grid);
  const Matrix norm = resolve_norm(cfg, d);
  const long zlen = long(z.size()) / d;
  const long need = floor_snap(double(cfg.n) * grid.back());
  if (zlen < need)
    throw InvalidInputError("partial_sum_path: sequence shorter than floor(N t_max) terms");

  GridPath path;
  path.grid = grid;
  path.d = d;
  path.values.assign(grid.size() * size_t(d), 0.0);
  std::vector<double> s(size_t(d), 0.0);
  long pos = 0;
  for (size_t ti = 0; ti < grid.size(); ++ti) {
    const long k = floor_snap(double(cfg.n) * grid[ti]);
    while (pos < k) {
      for (int c = 0; c < d; ++c) s[size_t(c)] += z[size_t(pos) * d + size_t(c)];
      ++pos;
    }
    for (int i = 0; i < d; ++i) {
      double acc = 0.0;
      for (int j = 0; j < d; ++j) acc += norm(i, j) * s[size_t(j)];
      path.values[ti * size_t(d) + size_t(i)] = acc;
    }
  }
  return path;
}

PartialSumSampler::PartialSumSampler(StationaryCovSeq cov, PartialSumConfig cfg,
                                     std::vector<double> grid)
    : cov_(std::move(cov)), cfg_(std::move(cfg)), grid_(std::move(grid)) {
  check_cov(cov_);
  check_sampling_grid(grid_);
  norm_ = resolve_norm(cfg_, cov_.d);
  zlen_ = std::max(1L, floor_snap(double(cfg_.n) * grid_.back()));
  if (cov_.kind == StationaryCovSeq::Kind::kFgnDiagonal) {
    engines_.reserve(size_t(cov_.d));
    for (int k = 0; k < cov_.d; ++k) engines_.emplace_back(cov_.hurst[size_t(k)], zlen_);
  } else {
    explicit_engine_ = std::make_shared<StationaryExplicitEngine>(cov_, zlen_);
  }
}

GridPath PartialSumSampler::sample(std::uint64_t seed, std::uint64_t replicate) const {
  const int d = cov_.d;
  std::vector<double> z(size_t(zlen_) * size_t(d));
  if (cov_.kind == StationaryCovSeq::Kind::kFgnDiagonal) {
    std::vector<double> buf(static_cast<size_t>(zlen_));
    for (int k = 0; k < d; ++k) {
      RngStream stream(seed, uint32_t(replicate), uint32_t(k), StreamRole::kSpectrum);
      engines_[size_t(k)].sample(stream, buf.data());
      const double sc = cov_.scale[size_t(k)];
      for (long i = 0; i < zlen_; ++i) z[size_t(i) * size_t(d) + size_t(k)] = sc * buf[size_t(i)];
    }
  } else {
    RngStream stream(seed, uint32_t(replicate), 0, StreamRole::kGaussian);
    explicit_engine_->sample(stream, z.data());
  }
  GridPath path = partial_sum_path(z, d, cfg_, grid_);
  path.seed = seed;
  path.replicate = replicate;
  return path;
}

AntipersistentCheck check_antipersistent_sum(const StationaryCovSeq& cov, long l) {
  check_cov(cov);
  if (l < 0) throw InvalidInputError("check_antipersistent_sum: L must be nonnegative");
  const int d = cov.d;
  std::vector<Kahan> acc(size_t(d) * size_t(d));
  const Matrix r0 = cov.r(0);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) acc[size_t(i) * d + size_t(j)].add(r0(i, j));
  long jmax = l;
  if (cov.kind == StationaryCovSeq::Kind::kExplicit)
    jmax = std::min(jmax, long(cov.lags.size()) - 1);
  for (long lag = 1; lag <= jmax; ++lag) {
    const Matrix rj = cov.r(lag);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) acc[size_t(i) * d + size_t(j)].add(2.0 * rj(i, j));
  }
  Matrix total(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) total(i, j) = acc[size_t(i) * d + size_t(j)].sum;

  AntipersistentCheck out;
  out.residual = linalg::operator_norm(total);
  if (cov.kind == StationaryCovSeq::Kind::kFgnDiagonal) {
    // |2 sum_{j>L} gamma_H(j)| ~ 2 H L^{2H-1} per unit scale (large for H >= 1/2,
    // where the series has no finite limit anyway).
    double est = 0.0;
    for (int k = 0; k < d; ++k) {
      const double h = cov.hurst[size_t(k)];
      const double s2 = cov.scale[size_t(k)] * cov.scale[size_t(k)];
      est = std::max(est, s2 * 2.0 * h * std::pow(double(std::max(l, 1L)), 2.0 * h - 1.0));
    }
    out.tail_estimate = est;
  } else if (jmax + 1 < long(cov.lags.size())) {
    Matrix rest(d, d);
    for (long lag = jmax + 1; lag < long(cov.lags.size()); ++lag) rest += cov.lags[size_t(lag)];
    rest *= 2.0;
    out.tail_estimate = linalg::operator_norm(rest);
  }
  return out;
}

Matrix en_asymptotics(const StationaryCovSeq& cov, long n) {
  check_cov(cov);
  if (n < 1) throw InvalidInputError("en_asymptotics: N must be >= 1");
  const int d = cov.d;
  std::vector<Kahan> acc(size_t(d) * size_t(d));
  const Matrix r0 = cov.r(0);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) acc[size_t(i) * d + size_t(j)].add(double(n) * r0(i, j));
  long jmax = n - 1;
  if (cov.kind == StationaryCovSeq::Kind::kExplicit)
    jmax = std::min(jmax, long(cov.lags.size()) - 1);
  for (long lag = 1; lag <= jmax; ++lag) {
    const Matrix rj = cov.r(lag);
    const double w = double(n - lag);
    // r(-j) = r(j)^T, so the off-diagonal sum picks up the transpose pair.
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) acc[size_t(i) * d + size_t(j)].add(w * (rj(i, j) + rj(j, i)));
  }
  Matrix out(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) out(i, j) = acc[size_t(i) * d + size_t(j)].sum;
  return out;
}

Matrix finite_n_partial_sum_covariance(const StationaryCovSeq& cov, long n, double t, double s) {
  check_cov(cov);
  if (cov.kind != StationaryCovSeq::Kind::kFgnDiagonal)
    throw InvalidInputError("finite_n_partial_sum_covariance: needs the fgn-diagonal rule");
  if (n < 1) throw InvalidInputError("finite_n_partial_sum_covariance: N must be >= 1");
  if (!std::isfinite(t) || !std::isfinite(s) || t < 0.0 || s < 0.0)
    throw InvalidInputError("finite_n_partial_sum_covariance: times must be finite and >= 0");
  const double a = double(floor_snap(double(n) * t));
  const double b = double(floor_snap(double(n) * s));
  Matrix out(cov.d, cov.d);
  for (int k = 0; k < cov.d; ++k) {
    const double th = 2.0 * cov.hurst[size_t(k)];
    const double s2 = cov.scale[size_t(k)] * cov.scale[size_t(k)];
    const double v =
        0.5 * (std::pow(a, th) + std::pow(b, th) - std::pow(std::abs(a - b), th));
    out(k, k) = s2 * v / std::pow(double(n), th);
  }
  return out;
}

Matrix fbm_limit_covariance(const StationaryCovSeq& cov, double t, double s) {
  check_cov(cov);
  if (cov.kind != StationaryCovSeq::Kind::kFgnDiagonal)
    throw InvalidInputError("fbm_limit_covariance: needs the fgn-diagonal rule");
  if (!std::isfinite(t) || !std::isfinite(s) || t < 0.0 || s < 0.0)
    throw InvalidInputError("fbm_limit_covariance: times must be finite and >= 0");
  Matrix out(cov.d, cov.d);
  for (int k = 0; k < cov.d; ++k) {
    const double th = 2.0 * cov.hurst[size_t(k)];
    const double s2 = cov.scale[size_t(k)] * cov.scale[size_t(k)];
    out(k, k) =
        s2 * 0.5 * (std::pow(t, th) + std::pow(s, th) - std::pow(std::abs(t - s), th));
  }
  return out;
}

}  // namespace ofbm::partial_sums
