#pragma once

#include <cstdint>
#include <vector>

#include "ofbm/grid_path.hpp"
#include "ofbm/matrix.hpp"
#include "ofbm/quadrature.hpp"

namespace ofbm::exact_sampler {

// (m d) x (m d) covariance of the stacked vector (X(t_1)..X(t_m)) under the
// time-reversible closed form with structure matrix gamma. Block (j,i) is the
// exact bitwise transpose of block (i,j).
Matrix build_grid_covariance(const std::vector<double>& grid, const Matrix& dexp,
                             const Matrix& gamma);

// Exact Gaussian sampling on a grid: one Cholesky factorization up front (rows
// at t = 0 dropped, reinserted as zeros), then each replicate is L z with a
// dedicated Gaussian stream keyed (seed, replicate). Passing an empty gamma
// selects the spectral-density normalization of the exponent.
class ExactSampler {
 public:
  ExactSampler(std::vector<double> grid, Matrix dexp, Matrix gamma,
               const QuadratureConfig& q = {});

  GridPath sample(std::uint64_t seed, std::uint64_t replicate) const;

  const std::vector<double>& grid() const { return grid_; }
  const Matrix& gamma() const { return gamma_; }
  const Matrix& covariance() const { return cov_; }
  double jitter() const { return jitter_; }

 private:
  std::vector<double> grid_;
  Matrix dexp_;
  Matrix gamma_;
  Matrix cov_;     // full grid covariance, including t = 0 rows
  Matrix chol_;    // factor of the positive-time block
  double jitter_ = 0.0;
  int d_ = 0;
};

// Replicates 0..count-1 from a one-off sampler.
std::vector<GridPath> sample_exact(const std::vector<double>& grid, const Matrix& dexp,
                                   const Matrix& gamma, int count, std::uint64_t seed);

}  // namespace ofbm::exact_sampler
