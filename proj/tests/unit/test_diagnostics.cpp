#include <cmath>
#include <vector>

#include "doctest.h"
#include "ofbm/diagnostics.hpp"
#include "ofbm/error.hpp"

using namespace ofbm;
using namespace ofbm::diagnostics;

namespace {

GridPath make_path(const std::vector<double>& grid, int d, const std::vector<double>& values,
                   uint64_t rep = 0) {
  GridPath p;
  p.grid = grid;
  p.d = d;
  p.values = values;
  p.replicate = rep;
  return p;
}

// Deterministic linear motion x(t) = v t, one component.
std::vector<GridPath> linear_paths(const std::vector<double>& grid, int count) {
  std::vector<GridPath> out;
  for (int r = 0; r < count; ++r) {
    std::vector<double> vals;
    const double v = 1.0 + 0.1 * r;
    for (double t : grid) vals.push_back(v * t);
    out.push_back(make_path(grid, 1, vals, uint64_t(r)));
  }
  return out;
}

}  // namespace

TEST_CASE("empirical covariance on a mirrored pair") {
  // Replicates v and -v give mean exactly vv^T with zero standard error.
  const std::vector<double> grid = {0.0, 0.5, 1.0};
  const std::vector<double> v = {0.0, 1.0, 2.0};
  std::vector<double> neg;
  for (double x : v) neg.push_back(-x);
  const std::vector<GridPath> paths = {make_path(grid, 1, v, 0), make_path(grid, 1, neg, 1)};

  const EmpiricalCov emp = empirical_covariance(paths);
  CHECK(emp.replicates == 2);
  CHECK(emp.d == 1);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      CHECK(emp.mean[size_t(i)][size_t(j)](0, 0) == v[size_t(i)] * v[size_t(j)]);
      CHECK(emp.se[size_t(i)][size_t(j)](0, 0) == 0.0);
    }

  CHECK_THROWS_AS(empirical_covariance({paths[0]}), InvalidInputError);
}

TEST_CASE("covariance_distance z-scores by hand") {
  // Products at t=1 are {1, 9}: mean 5, sd 4 sqrt(2), SE 4. A target of -7
  // sits 12 below, z = 3 exactly; matching target gives z = 0.
  const std::vector<double> grid = {0.0, 1.0};
  const std::vector<GridPath> paths = {make_path(grid, 1, {0.0, 1.0}, 0),
                                       make_path(grid, 1, {0.0, 3.0}, 1)};
  const EmpiricalCov emp = empirical_covariance(paths);
  CHECK(emp.mean[1][1](0, 0) == 5.0);
  CHECK(emp.se[1][1](0, 0) == doctest::Approx(4.0).epsilon(1e-15));

  const CovDistance hit = covariance_distance(emp, [&](double t, double s) {
    return Matrix(1, 1, {t == 1.0 && s == 1.0 ? 5.0 : t * s * 0.0});
  });
  CHECK(hit.max_z == 0.0);

  const CovDistance miss = covariance_distance(emp, [&](double t, double s) {
    return Matrix(1, 1, {t == 1.0 && s == 1.0 ? -7.0 : 0.0});
  });
  CHECK(miss.max_abs_err == doctest::Approx(12.0).epsilon(1e-15));
  CHECK(miss.max_z == doctest::Approx(3.0).epsilon(1e-15));
}

TEST_CASE("generate_paths preserves replicate order") {
  const std::vector<double> grid = {0.0, 1.0};
  const std::vector<GridPath> got = generate_paths(
      [&](uint64_t r) { return make_path(grid, 1, {0.0, double(r) + 1.0}, r); }, 37);
  REQUIRE(got.size() == 37);
  for (size_t i = 0; i < got.size(); ++i) {
    CHECK(got[i].replicate == i);
    CHECK(got[i].value(1, 0) == double(i) + 1.0);
  }
}

TEST_CASE("self similarity at c = 1 is exactly zero") {
  const std::vector<double> grid = {0.0, 0.25, 0.5, 0.75, 1.0};
  const std::vector<GridPath> paths = linear_paths(grid, 6);
  CHECK(self_similarity_check(paths, 1.0, Matrix(1, 1, {0.7})) == 0.0);
  // No positive scaled time lands on the grid for c far off the grid ratios.
  CHECK_THROWS_AS(self_similarity_check(paths, 0.003, Matrix(1, 1, {0.7})),
                  InvalidInputError);
}

TEST_CASE("holder slope of deterministic scaling paths") {
  std::vector<double> grid;
  for (int i = 0; i <= 8; ++i) grid.push_back(double(i) / 8.0);
  // Linear paths: ||x(t+tau) - x(t)||^2 = v^2 tau^2, slope exactly 2.
  CHECK(holder_moment_slope(linear_paths(grid, 4), 2) == doctest::Approx(2.0).epsilon(1e-12));
  // Fourth moment doubles the slope.
  CHECK(holder_moment_slope(linear_paths(grid, 4), 4) == doctest::Approx(4.0).epsilon(1e-12));

  CHECK_THROWS_AS(holder_moment_slope(linear_paths(grid, 4), 3), InvalidInputError);

  // Constant paths have degenerate moments.
  std::vector<GridPath> flat;
  flat.push_back(make_path(grid, 1, std::vector<double>(grid.size(), 0.0), 0));
  flat.push_back(make_path(grid, 1, std::vector<double>(grid.size(), 0.0), 1));
  CHECK_THROWS_AS(holder_moment_slope(flat, 2), NumericalFailureError);

  // A 3-point grid has only two dyadic lags: not enough for a fit.
  CHECK_THROWS_AS(holder_moment_slope(linear_paths({0.0, 0.5, 1.0}, 4), 2), InvalidInputError);

  // Non-uniform grids are rejected.
  CHECK_THROWS_AS(holder_moment_slope(linear_paths({0.0, 0.1, 0.5, 0.6, 1.0}, 4), 2),
                  InvalidInputError);
}

TEST_CASE("reversibility detects an asymmetric cross-covariance") {
  const std::vector<double> grid = {0.0, 0.5, 1.0};
  // Both replicates produce X(t1) = +-e1, X(t2) = +-e2, so R(t1,t2) = e1 e2^T
  // with zero SE: the antisymmetric part is deterministic and blows the z up.
  const std::vector<GridPath> skew = {make_path(grid, 2, {0, 0, 1, 0, 0, 1}, 0),
                                      make_path(grid, 2, {0, 0, -1, 0, 0, -1}, 1)};
  CHECK(reversibility_check(empirical_covariance(skew)) > 1e6);

  // Symmetric construction: X(t1) = X(t2), perfectly reversible estimates.
  const std::vector<GridPath> sym = {make_path(grid, 2, {0, 0, 1, 2, 1, 2}, 0),
                                     make_path(grid, 2, {0, 0, -1, -2, -1, -2}, 1)};
  CHECK(reversibility_check(empirical_covariance(sym)) == 0.0);
}

TEST_CASE("gaussianity flags a two-point law") {
  // x = +-1 alternating: skewness 0, excess kurtosis -2 with SE sqrt(24/M),
  // so the statistic is exactly 2 / sqrt(24/M) = 10 at M = 600.
  const std::vector<double> grid = {0.0, 1.0};
  std::vector<GridPath> paths;
  for (int r = 0; r < 600; ++r)
    paths.push_back(make_path(grid, 1, {0.0, r % 2 ? -1.0 : 1.0}, uint64_t(r)));
  CHECK(gaussianity_check(paths) == doctest::Approx(10.0).epsilon(1e-12));
}

TEST_CASE("convergence study smoke: exact scheme") {
  StudyConfig cfg;
  cfg.scheme = Scheme::kExact;
  cfg.spec = model::make_spec(Matrix(1, 1, {0.5}), Matrix(1, 1, {1.0}), Matrix(1, 1, {0.0}));
  cfg.grid = {0.0, 0.25, 0.5, 0.75, 1.0};
  cfg.replicates = 600;
  cfg.seed = 99;

  const ConvergenceReport rep = run_convergence_study(cfg);
  REQUIRE(rep.levels.size() == 1);
  CHECK(rep.levels[0].level == 0);
  CHECK_FALSE(rep.has_trend);
  CHECK(rep.levels[0].max_se > 0.0);
  CHECK(rep.levels[0].pass == (rep.levels[0].max_z <= cfg.z_threshold));

  // Determinism of the whole report.
  const ConvergenceReport rep2 = run_convergence_study(cfg);
  CHECK(rep.levels[0].max_abs_err == rep2.levels[0].max_abs_err);
  CHECK(rep.levels[0].max_z == rep2.levels[0].max_z);
  CHECK(rep.structural.gaussianity_z == rep2.structural.gaussianity_z);
  CHECK(rep.structural.holder_slope == rep2.structural.holder_slope);
}

TEST_CASE("convergence study smoke: partial sums") {
  StudyConfig cfg;
  cfg.scheme = Scheme::kPartialSums;
  cfg.cov = partial_sums::StationaryCovSeq::fgn_diagonal({0.7}, {1.0});
  cfg.levels = {8, 32};
  cfg.grid = {0.0, 0.25, 0.5, 0.75, 1.0};
  cfg.replicates = 500;
  cfg.seed = 4;

  const ConvergenceReport rep = run_convergence_study(cfg);
  REQUIRE(rep.levels.size() == 2);
  CHECK(rep.has_trend);
  CHECK(rep.levels[0].level == 8);
  CHECK(rep.levels[1].level == 32);
  CHECK(rep.levels[0].fitted_scale > 0.8);
  CHECK(rep.levels[0].fitted_scale < 1.2);
  CHECK(std::isfinite(rep.structural.self_similarity_z));
  CHECK(std::isfinite(rep.structural.holder_slope));

  StudyConfig bad = cfg;
  bad.levels = {32, 8};
  CHECK_THROWS_AS(run_convergence_study(bad), InvalidInputError);
}
