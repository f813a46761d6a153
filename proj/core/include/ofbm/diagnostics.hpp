#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "ofbm/grid_path.hpp"
#include "ofbm/matrix.hpp"
#include "ofbm/model.hpp"
#include "ofbm/partial_sums.hpp"
#include "ofbm/quadrature.hpp"

namespace ofbm::diagnostics {

// Cross-moment estimates mean[i][j] ~ E[X(t_i) X(t_j)^T] (no centering: the
// processes are mean-zero by construction) with elementwise standard errors
// (sample sd of the product terms / sqrt(M)). mean[j][i] is the bitwise
// transpose of mean[i][j].
struct EmpiricalCov {
  std::vector<double> grid;
  int d = 0;
  long replicates = 0;
  std::vector<std::vector<Matrix>> mean;
  std::vector<std::vector<Matrix>> se;
};

EmpiricalCov empirical_covariance(const std::vector<GridPath>& paths);

// Replicates 0..count-1 through the factory, generated in fixed chunks on the
// worker pool; the result is identical for any OFBM_THREADS setting.
std::vector<GridPath> generate_paths(const std::function<GridPath(std::uint64_t)>& sample,
                                     long count);

using CovTargetFn = std::function<Matrix(double, double)>;

struct CovDistance {
  double max_abs_err = 0.0;
  double max_se = 0.0;
  double max_z = 0.0;  // |emp - target| / SE, SE floored at 1e-12
};

CovDistance covariance_distance(const EmpiricalCov& emp, const CovTargetFn& target);

// Max z of c^{-D} X(ct) products against X(t) products over grid pairs whose
// scaled times land on grid points (tolerance 1e-9). The difference is
// estimated per replicate, so the standard error accounts for the dependence
// between the two estimates. Throws InvalidInputError when no positive-time
// pair aligns under c.
double self_similarity_check(const std::vector<GridPath>& paths, double c, const Matrix& dexp);

// Least-squares slope of log E||X(t+tau) - X(t)||^m versus log tau over dyadic
// lags of a uniformly spaced grid; m in {2, 4}. Needs at least 3 lags.
double holder_moment_slope(const std::vector<GridPath>& paths, int moment_order);

// Max z of the antisymmetric part R_hat(t,s) - R_hat(t,s)^T; zero for a
// time-reversible law. SEs of the two entries combine in quadrature.
double reversibility_check(const EmpiricalCov& emp);

// Max |z| of per-(time, component) skewness (SE sqrt(6/M)) and excess kurtosis
// (SE sqrt(24/M)); moments are raw (mean-zero convention). t = 0 is skipped.
double gaussianity_check(const std::vector<GridPath>& paths);

enum class Scheme { kTelegraph, kPartialSums, kExact };

struct StudyConfig {
  Scheme scheme = Scheme::kExact;
  model::OfbmSpec spec;                // telegraph / exact schemes
  partial_sums::StationaryCovSeq cov;  // partial-sums scheme (fgn-diagonal)
  std::vector<long> levels;            // n or N, strictly increasing (ignored for exact)
  std::vector<double> grid;
  long replicates = 0;
  std::uint64_t seed = 0;
  QuadratureConfig quad;
  double z_threshold = 5.0;
  double self_similarity_c = 2.0;
  int holder_moment = 2;
};

struct LevelResult {
  long level = 0;
  double max_abs_err = 0.0;  // vs the level target (finite-level oracle)
  double max_se = 0.0;
  double max_z = 0.0;
  bool pass = false;          // max_z <= threshold
  double fitted_scale = 1.0;  // partial sums: scalar fitted to the target first
  double limit_max_z = 0.0;   // empirical distance to the limiting covariance
  double oracle_gap = 0.0;    // deterministic max |level target - limit|
};

struct StructuralResult {
  double self_similarity_z = 0.0;  // NaN when the grid has no aligned pairs
  double reversibility_z = 0.0;
  double holder_slope = 0.0;  // NaN when the grid is not dyadic-capable
  double gaussianity_z = 0.0;
};

struct ConvergenceReport {
  Scheme scheme = Scheme::kExact;
  double z_threshold = 5.0;
  std::vector<LevelResult> levels;
  StructuralResult structural;  // computed on the top-level path set
  bool has_trend = false;       // at least two levels
  bool trend_decreasing = false;
  bool all_pass = false;
};

// Per-level empirical covariances against the finite-level oracle and the
// limiting covariance; the trend indicator compares the deterministic oracle
// gaps, so it is free of Monte Carlo noise. Deterministic given (seed, config).
ConvergenceReport run_convergence_study(const StudyConfig& cfg);

}  // namespace ofbm::diagnostics
