#include "ofbm/exact_sampler.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "ofbm/error.hpp"
#include "ofbm/linalg.hpp"
#include "ofbm/model.hpp"
#include "ofbm/rng.hpp"

namespace ofbm::exact_sampler {

Matrix build_grid_covariance(const std::vector<double>& grid, const Matrix& dexp,
                             const Matrix& gamma) {
  check_sampling_grid(grid);
  const int d = dexp.rows();
  if (d < 1 || !dexp.square()) throw InvalidInputError("build_grid_covariance: exponent must be square");
  if (gamma.rows() != d || gamma.cols() != d)
    throw InvalidInputError("build_grid_covariance: gamma shape mismatch");
  const int m = int(grid.size());
  Matrix out(m * d, m * d);
  for (int i = 0; i < m; ++i) {
    for (int j = i; j < m; ++j) {
      const Matrix r = model::reversible_covariance(grid[size_t(i)], grid[size_t(j)], dexp, gamma);
      for (int a = 0; a < d; ++a)
        for (int c = 0; c < d; ++c) out(i * d + a, j * d + c) = r(a, c);
    }
  }
  // Mirror the upper triangle so block (j,i) is bitwise block (i,j)^T and the
  // matrix is exactly symmetric entrywise.
  for (int p = 0; p < m * d; ++p)
    for (int q = p + 1; q < m * d; ++q) out(q, p) = out(p, q);
  return out;
}

ExactSampler::ExactSampler(std::vector<double> grid, Matrix dexp, Matrix gamma,
                           const QuadratureConfig& q)
    : grid_(std::move(grid)), dexp_(std::move(dexp)), gamma_(std::move(gamma)) {
  check_sampling_grid(grid_);
  d_ = dexp_.rows();
  if (d_ < 1 || !dexp_.square())
    throw InvalidInputError("ExactSampler: exponent must be square and nonempty");
  if (gamma_.empty()) gamma_ = model::gamma_mason_xiao(dexp_, q);
  cov_ = build_grid_covariance(grid_, dexp_, gamma_);

  // grid[0] = 0 contributes deterministic zero rows; factor the rest.
  const int m = int(grid_.size());
  const int keep = (m - 1) * d_;
  if (keep == 0) return;
  Matrix sub(keep, keep);
  for (int p = 0; p < keep; ++p)
    for (int q2 = 0; q2 < keep; ++q2) sub(p, q2) = cov_(d_ + p, d_ + q2);
  auto res = linalg::cholesky_psd(sub, 1e-8 * std::max(1.0, sub.max_abs()));
  chol_ = std::move(res.l);
  jitter_ = res.jitter;
}

GridPath ExactSampler::sample(std::uint64_t seed, std::uint64_t replicate) const {
  const int m = int(grid_.size());
  GridPath path;
  path.grid = grid_;
  path.d = d_;
  path.seed = seed;
  path.replicate = replicate;
  path.values.assign(size_t(m) * size_t(d_), 0.0);
  const int n = (m - 1) * d_;
  if (n == 0) return path;
  RngStream stream(seed, uint32_t(replicate), 0, StreamRole::kGaussian);
  std::vector<double> z(static_cast<size_t>(n));
  for (double& v : z) v = stream.gaussian();
  for (int i = 0; i < n; ++i) {
    double acc = 0.0;
    for (int j = 0; j <= i; ++j) acc += chol_(i, j) * z[size_t(j)];
    path.values[size_t(d_) + size_t(i)] = acc;
  }
  return path;
}

std::vector<GridPath> sample_exact(const std::vector<double>& grid, const Matrix& dexp,
                                   const Matrix& gamma, int count, std::uint64_t seed) {
  if (count < 0) throw InvalidInputError("sample_exact: count must be nonnegative");
  ExactSampler sampler(grid, dexp, gamma);
  std::vector<GridPath> out;
  out.reserve(size_t(count));
  for (int r = 0; r < count; ++r) out.push_back(sampler.sample(seed, uint64_t(r)));
  return out;
}

}  // namespace ofbm::exact_sampler
