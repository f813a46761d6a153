#pragma once

#include <cstdint>
#include <vector>

#include "ofbm/grid_path.hpp"
#include "ofbm/model.hpp"
#include "ofbm/quadrature.hpp"
#include "ofbm/rng.hpp"

namespace ofbm::telegraph {

// Jump times of one rate-n Poisson process on (0, domain_end); the signed signal
// is sqrt(n) * (-1)^{#jumps <= x}, starting at +sqrt(n) since the count at 0 is 0.
struct TelegraphPath {
  double intensity = 0.0;
  double domain_end = 0.0;
  std::vector<double> jump_times;
};

TelegraphPath sample_telegraph(double n, double x_max, RngStream& stream);

// sqrt(n) * (-1)^{#jumps <= x}; requires 0 < x <= domain_end.
double telegraph_sign_at(const TelegraphPath& p, double x);

// Integral of the signed signal itself over [0, t] (exact alternating segment
// sums); its variance across replicates tends to t as n grows.
double integrate_telegraph_sign(const TelegraphPath& p, double t);

enum class Kernel { kG1, kG2 };

// Integral over (0, x_max] of G(x,t) e_column times the telegraph sign: the sum
// over sign-constant segments of the segment integral times the segment sign,
// with the segment integrals read off a piecewise panel antiderivative of the
// kernel column. Deterministic given (p, t, q).
std::vector<double> integrate_kernel_column(Kernel kernel, const model::OfbmSpec& spec, double t,
                                            int column, const TelegraphPath& p,
                                            const QuadratureConfig& q);

// Precomputed panel antiderivatives of every kernel column over a whole time
// grid, so each replicate costs O(grid * d) per jump instead of a quadrature per
// segment. Immutable after construction; safe to share across threads.
class TelegraphSampler {
 public:
  TelegraphSampler(model::OfbmSpec spec, std::vector<double> grid, const QuadratureConfig& q);

  // One replicate of X_n(t) = sum_j [int G1(.,t)e_j theta_j + int G2(.,t)e_j theta_hat_j]
  // over the grid; all grid points share one bundle of 2d telegraph components.
  // Deterministic in (seed, replicate).
  GridPath sample(double n, std::uint64_t seed, std::uint64_t replicate) const;

  const std::vector<double>& grid() const { return grid_; }
  const model::OfbmSpec& spec() const { return spec_; }
  double x_max() const { return x_max_; }

 private:
  model::OfbmSpec spec_;
  std::vector<double> grid_;
  double x_max_;
  std::vector<quadrature::PanelPrimitive> g1_cols_, g2_cols_;  // one per source column
};

// One replicate with a freshly built sampler (convenience; building the sampler
// once and drawing many replicates is much cheaper for studies).
GridPath sample_xn(const model::OfbmSpec& spec, double n, const std::vector<double>& grid,
                   const QuadratureConfig& q, std::uint64_t seed, std::uint64_t replicate);

// E[X_n(t) X_n(s)^T] at finite intensity n over the same truncated frequency
// domain the sampler uses:
//   int int over [0,x_max]^2 of n e^{-2n|x-y|} [G1(x,t)G1(y,s)^T + G2(x,t)G2(y,s)^T],
// from E[theta(x) theta(y)] = n e^{-2n|x-y|}. Double quadrature at tolerance
// 10 * q.rel_tol; converges to spectral_covariance(t,s) as n grows.
Matrix finite_n_covariance(const model::OfbmSpec& spec, double n, double t, double s,
                           const QuadratureConfig& q);

// All grid pairs, sharing outer quadrature work; out[i][j] is for (grid[i], grid[j]).
std::vector<std::vector<Matrix>> finite_n_covariance_grid(const model::OfbmSpec& spec, double n,
                                                          const std::vector<double>& grid,
                                                          const QuadratureConfig& q);

}  // namespace ofbm::telegraph
