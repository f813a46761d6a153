// Acceptance gate: one criterion per invocation (c1..c9), one [PASS]/[FAIL]
// line each, with the runtime budget enforced. Exit 0 only on pass.

#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ofbm/diagnostics.hpp"
#include "ofbm/error.hpp"
#include "ofbm/exact_sampler.hpp"
#include "ofbm/linalg.hpp"
#include "ofbm/model.hpp"
#include "ofbm/partial_sums.hpp"
#include "ofbm/quadrature.hpp"
#include "ofbm/rng.hpp"
#include "ofbm/telegraph.hpp"

using namespace ofbm;

namespace {

struct Failure : std::runtime_error {
  explicit Failure(const std::string& msg) : std::runtime_error(msg) {}
};

void require(bool ok, const std::string& msg) {
  if (!ok) throw Failure(msg);
}

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list args;
  va_start(args, f);
  vsnprintf(buf, sizeof buf, f, args);
  va_end(args);
  return buf;
}

constexpr double kPi = 3.14159265358979323846;
constexpr uint64_t kSeed = 20250814;

double fbm_cov(double h, double t, double s) {
  return 0.5 * (std::pow(t, 2 * h) + std::pow(s, 2 * h) - std::pow(std::abs(t - s), 2 * h));
}

std::vector<double> dyadic_grid(int intervals) {
  std::vector<double> g;
  for (int i = 0; i <= intervals; ++i) g.push_back(double(i) / intervals);
  return g;
}

Matrix random_matrix(int d, RngStream& u) {
  Matrix m(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) m(i, j) = 2.0 * u.uniform() - 1.0;
  return m;
}

// Lookup-table target for covariance_distance; times are the very grid values,
// matched exactly.
diagnostics::CovTargetFn table_target(const std::vector<double>& grid,
                                      const std::vector<std::vector<Matrix>>& table) {
  return [grid, table](double t, double s) {
    size_t i = grid.size(), j = grid.size();
    for (size_t k = 0; k < grid.size(); ++k) {
      if (grid[k] == t) i = k;
      if (grid[k] == s) j = k;
    }
    if (i == grid.size() || j == grid.size()) throw Failure("target lookup off-grid");
    return table[i][j];
  };
}

double max_table_gap(const std::vector<std::vector<Matrix>>& a,
                     const std::vector<std::vector<Matrix>>& b) {
  double m = 0.0;
  for (size_t i = 0; i < a.size(); ++i)
    for (size_t j = 0; j < a.size(); ++j) m = std::max(m, (a[i][j] - b[i][j]).max_abs());
  return m;
}

// ---- c1: matrix calculus battery ------------------------------------------

std::string crit1() {
  using namespace ofbm::linalg;
  RngStream u(kSeed, 0, 0, StreamRole::kGeneric);
  const int cases = 200;

  for (int k = 0; k < cases; ++k) {
    const int d = 1 + k % 4;
    const Matrix dexp = random_matrix(d, u);
    const double c1 = 10.0 * u.uniform() + 1e-3;
    const double c2 = 10.0 * u.uniform() + 1e-3;

    // Group law and inverse law.
    const Matrix lhs = mat_power(c1, dexp) * mat_power(c2, dexp);
    const Matrix rhs = mat_power(c1 * c2, dexp);
    const double gerr = operator_norm(lhs - rhs);
    require(gerr <= 1e-9 * (1.0 + operator_norm(rhs)),
            fmt("group law violated: err %.3e (case %d)", gerr, k));
    const Matrix inv = mat_power(c1, dexp) * mat_power(1.0 / c1, dexp);
    require(operator_norm(inv - Matrix::identity(d)) <= 1e-9,
            fmt("inverse law violated (case %d)", k));
    require((mat_power(1.0, dexp) - Matrix::identity(d)).max_abs() == 0.0,
            "1^D must be the identity exactly");

    // Submultiplicativity and entry bounds.
    const Matrix a = random_matrix(d, u);
    const Matrix b = random_matrix(d, u);
    const double na = operator_norm(a), nb = operator_norm(b);
    require(operator_norm(a * b) <= na * nb * (1.0 + 1e-12),
            fmt("submultiplicativity violated (case %d)", k));
    require(a.max_abs() <= na * (1.0 + 1e-9),
            fmt("entry lower bound violated (case %d)", k));
    require(na <= std::pow(double(d), 1.5) * a.max_abs() * (1.0 + 1e-9),
            fmt("entry upper bound violated (case %d)", k));
  }

  // Scaling-bound ratios: ||r^D|| / r^{lambda-delta} bounded on (0,1] and
  // ||r^D|| / r^{Lambda+delta} bounded on [1,inf); the sampled ratios must not
  // grow monotonically into either extreme.
  const double delta = 0.05;
  for (int k = 0; k < cases; ++k) {
    const int d = 1 + k % 3;
    Matrix dexp(d, d);
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j) dexp(i, j) = 0.1 * (2.0 * u.uniform() - 1.0);
      dexp(i, i) = 0.15 + 0.75 * u.uniform();
    }
    const linalg::SpectralBounds sb = spectral_real_bounds(dexp);
    if (sb.lambda_min <= delta) continue;  // keep the exponent comfortably positive

    std::vector<double> low, high;
    for (int i = 0; i <= 24; ++i) {
      const double r_small = std::pow(10.0, -6.0 + 6.0 * i / 24.0);  // 1e-6 .. 1
      const double r_big = std::pow(10.0, 6.0 * i / 24.0);           // 1 .. 1e6
      low.push_back(operator_norm(mat_power(r_small, dexp)) /
                    std::pow(r_small, sb.lambda_min - delta));
      high.push_back(operator_norm(mat_power(r_big, dexp)) /
                     std::pow(r_big, sb.lambda_max + delta));
    }
    for (double v : low) require(std::isfinite(v), "small-r ratio not finite");
    for (double v : high) require(std::isfinite(v), "large-r ratio not finite");
    // low[0] is the smallest r; growth into the extreme would read low[0] >
    // low[1] > low[2]. Same at the tail of high.
    require(!(low[0] > low[1] && low[1] > low[2]),
            fmt("small-r ratio grows monotonically at the extreme (case %d)", k));
    const size_t m = high.size();
    require(!(high[m - 1] > high[m - 2] && high[m - 2] > high[m - 3]),
            fmt("large-r ratio grows monotonically at the extreme (case %d)", k));
  }
  return fmt("%d randomized cases per law", cases);
}

// ---- c2: closed-form value of the limit covariance -------------------------

std::string crit2() {
  const QuadratureConfig q;
  const double g = model::gamma_mason_xiao(Matrix(1, 1, {0.5}), q)(0, 0);
  require(std::abs(g - kPi) <= 1e-6, fmt("Gamma(H=1/2) = %.9f, want pi within 1e-6", g));

  const model::OfbmSpec spec =
      model::make_spec(Matrix(1, 1, {0.5}), Matrix(1, 1, {1.0}), Matrix(1, 1, {0.0}));
  const double r = model::spectral_covariance(spec, 1.0, 1.0, q)(0, 0);
  require(std::abs(r - kPi) <= 1e-5, fmt("R(1,1) = %.9f, want pi within 1e-5", r));
  return fmt("Gamma err %.2e, R(1,1) err %.2e", std::abs(g - kPi), std::abs(r - kPi));
}

// ---- c3: fBm covariance shape ----------------------------------------------

std::string crit3() {
  const QuadratureConfig q;
  double worst = 0.0;
  for (double h : {0.3, 0.5, 0.7}) {
    const model::OfbmSpec spec =
        model::make_spec(Matrix(1, 1, {h}), Matrix(1, 1, {1.0}), Matrix(1, 1, {0.0}));
    const double scale = model::spectral_covariance(spec, 1.0, 1.0, q)(0, 0);
    const std::vector<double> pts = {0.2, 0.4, 0.6, 0.8, 1.0};
    for (double t : pts)
      for (double s : pts) {
        if (s > t) continue;
        const double got = model::spectral_covariance(spec, t, s, q)(0, 0) / scale;
        const double err = std::abs(got - fbm_cov(h, t, s));
        worst = std::max(worst, err);
        require(err <= 1e-4, fmt("H=%.1f (t,s)=(%.1f,%.1f): err %.2e > 1e-4", h, t, s, err));
      }
  }
  return fmt("worst shape error %.2e over 5-point grids, H in {0.3, 0.5, 0.7}", worst);
}

// ---- c4: exact sampler law checks ------------------------------------------

std::string crit4() {
  const Matrix dexp = Matrix::diag({0.7, 0.6});
  const std::vector<double> grid = dyadic_grid(8);
  const exact_sampler::ExactSampler sampler(grid, dexp, Matrix());
  const long m = 20000;

  const std::vector<GridPath> paths = diagnostics::generate_paths(
      [&](uint64_t r) { return sampler.sample(kSeed, r); }, m);
  const diagnostics::EmpiricalCov emp = diagnostics::empirical_covariance(paths);

  const diagnostics::CovDistance dist = diagnostics::covariance_distance(
      emp, [&](double t, double s) { return model::reversible_covariance(t, s, dexp, sampler.gamma()); });
  const double z_ss = diagnostics::self_similarity_check(paths, 2.0, dexp);
  const double z_rev = diagnostics::reversibility_check(emp);
  const double z_gauss = diagnostics::gaussianity_check(paths);

  require(dist.max_z <= 5.0, fmt("covariance z %.2f > 5", dist.max_z));
  require(z_ss <= 5.0, fmt("self-similarity z %.2f > 5", z_ss));
  require(z_rev <= 5.0, fmt("reversibility z %.2f > 5", z_rev));
  require(z_gauss <= 5.0, fmt("gaussianity z %.2f > 5", z_gauss));
  return fmt("M=%ld: z_cov=%.2f z_selfsim=%.2f z_rev=%.2f z_gauss=%.2f", m, dist.max_z, z_ss,
             z_rev, z_gauss);
}

// ---- c5: telegraph convergence ---------------------------------------------

std::string crit5() {
  QuadratureConfig q;
  q.x_max = 64.0;
  const std::vector<double> grid = {0.0, 0.25, 0.5, 0.75, 1.0};
  std::string note;
  const auto part0 = std::chrono::steady_clock::now();

  {  // d = 1, Brownian parameters: finite-n oracle per level, decreasing limit distance.
    const model::OfbmSpec spec =
        model::make_spec(Matrix(1, 1, {0.5}), Matrix(1, 1, {1.0}), Matrix(1, 1, {0.0}));
    const telegraph::TelegraphSampler sampler(spec, grid, q);
    const auto limit = model::spectral_covariance_grid(spec, grid, q);
    const long m = 2000;
    double prev = 0.0;
    for (long level : {10L, 100L, 1000L}) {
      const auto target = telegraph::finite_n_covariance_grid(spec, double(level), grid, q);
      const std::vector<GridPath> paths = diagnostics::generate_paths(
          [&](uint64_t r) { return sampler.sample(double(level), kSeed, r); }, m);
      const diagnostics::EmpiricalCov emp = diagnostics::empirical_covariance(paths);
      const diagnostics::CovDistance dist =
          diagnostics::covariance_distance(emp, table_target(grid, target));
      require(dist.max_z <= 5.0,
              fmt("d=1 n=%ld: finite-n covariance z %.2f > 5", level, dist.max_z));

      // Convergence of the scheme itself: the finite-n covariance approaches
      // the limit. The deterministic gap is the right trend statistic; the
      // empirical estimate is tied to the finite-n oracle above, and at
      // M=2000 its Monte Carlo noise would swamp the n=100 -> n=1000 step.
      const double gap = max_table_gap(target, limit);
      if (level > 10L)
        require(gap < prev,
                fmt("d=1 distance to the limit not decreasing at n=%ld (%.4f >= %.4f)", level,
                    gap, prev));
      prev = gap;
      note += fmt("d1 n=%ld gap=%.4f ", level, gap);
    }
  }
  const double d1_secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - part0).count();
  require(d1_secs <= 600.0, fmt("d=1 study over its 10-minute budget (%.0f s)", d1_secs));
  const auto part1 = std::chrono::steady_clock::now();

  {  // d = 2 exponent diag(0.7, 0.6): decreasing distance to the limit.
    const model::OfbmSpec spec = model::make_spec(Matrix::diag({0.7, 0.6}), Matrix::identity(2),
                                                  Matrix(2, 2));
    const telegraph::TelegraphSampler sampler(spec, grid, q);
    const auto limit = model::spectral_covariance_grid(spec, grid, q);
    const long m = 1000;
    double prev = 0.0;
    for (long level : {100L, 1000L}) {
      const auto target = telegraph::finite_n_covariance_grid(spec, double(level), grid, q);
      const std::vector<GridPath> paths = diagnostics::generate_paths(
          [&](uint64_t r) { return sampler.sample(double(level), kSeed, r); }, m);
      const diagnostics::EmpiricalCov emp = diagnostics::empirical_covariance(paths);
      const diagnostics::CovDistance dist =
          diagnostics::covariance_distance(emp, table_target(grid, target));
      require(dist.max_z <= 5.0,
              fmt("d=2 n=%ld: finite-n covariance z %.2f > 5", level, dist.max_z));

      const double gap = max_table_gap(target, limit);
      if (level > 100L)
        require(gap < prev,
                fmt("d=2 distance to the limit not decreasing at n=%ld (%.4f >= %.4f)", level,
                    gap, prev));
      prev = gap;
      note += fmt("d2 n=%ld gap=%.4f ", level, gap);
    }
  }
  const double d2_secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - part1).count();
  require(d2_secs <= 1200.0, fmt("d=2 study over its 20-minute budget (%.0f s)", d2_secs));
  return note + fmt("(d1 %.0f s, d2 %.0f s)", d1_secs, d2_secs);
}

// ---- c6: partial sums --------------------------------------------------------

std::string crit6() {
  const std::vector<double> grid = dyadic_grid(8);
  const std::vector<long> levels = {256, 1024, 4096};
  const long m = 5000;
  std::string note;

  const std::vector<std::vector<double>> hursts = {{0.7, 0.6}, {0.3, 0.4}};
  for (const std::vector<double>& h : hursts) {
    const partial_sums::StationaryCovSeq cov =
        partial_sums::StationaryCovSeq::fgn_diagonal(h, {1.0, 1.0});

    double top_limit_z = 0.0;
    for (long level : levels) {
      partial_sums::PartialSumConfig pcfg;
      pcfg.n = level;
      pcfg.dexp = Matrix::diag(h);
      const partial_sums::PartialSumSampler sampler(cov, pcfg, grid);
      const std::vector<GridPath> paths = diagnostics::generate_paths(
          [&](uint64_t r) { return sampler.sample(kSeed, r); }, m);
      const diagnostics::EmpiricalCov emp = diagnostics::empirical_covariance(paths);

      // Raw distances: no scale fitting anywhere in the acceptance gate.
      const diagnostics::CovDistance dist =
          diagnostics::covariance_distance(emp, [&](double t, double s) {
            return partial_sums::finite_n_partial_sum_covariance(cov, level, t, s);
          });
      require(dist.max_z <= 5.0, fmt("H=(%.1f,%.1f) N=%ld: finite-N z %.2f > 5", h[0], h[1],
                                     level, dist.max_z));
      if (level == levels.back()) {
        const diagnostics::CovDistance ldist =
            diagnostics::covariance_distance(emp, [&](double t, double s) {
              return partial_sums::fbm_limit_covariance(cov, t, s);
            });
        top_limit_z = ldist.max_z;
        require(ldist.max_z <= 5.0,
                fmt("H=(%.1f,%.1f) N=%ld: limit z %.2f > 5", h[0], h[1], level, ldist.max_z));
      }

      // E_N growth: the normalized sum variance telescopes to N^{2H} exactly.
      const Matrix en = partial_sums::en_asymptotics(cov, level);
      for (size_t k = 0; k < h.size(); ++k) {
        const double ratio = en(int(k), int(k)) / std::pow(double(level), 2.0 * h[k]);
        require(std::abs(ratio - 1.0) <= 1e-12,
                fmt("E_N ratio off by %.2e at N=%ld, H=%.1f", std::abs(ratio - 1.0), level,
                    h[k]));
      }
    }
    note += fmt("H=(%.1f,%.1f) top limit z=%.2f; ", h[0], h[1], top_limit_z);
  }

  // Antipersistent lag sums keep shrinking with the window.
  const partial_sums::StationaryCovSeq anti =
      partial_sums::StationaryCovSeq::fgn_diagonal({0.3, 0.4}, {1.0, 1.0});
  double prev = -1.0;
  for (long l : {10L, 100L, 1000L}) {
    const partial_sums::AntipersistentCheck c = partial_sums::check_antipersistent_sum(anti, l);
    if (prev >= 0.0)
      require(c.residual < prev, fmt("antipersistent residual not decreasing at L=%ld", l));
    prev = c.residual;
  }
  note += fmt("antipersistent residual at L=1000: %.2e", prev);
  return note;
}

// ---- c7: moment scaling of telegraph paths ---------------------------------

std::string crit7() {
  QuadratureConfig q;
  q.x_max = 64.0;
  const model::OfbmSpec spec =
      model::make_spec(Matrix(1, 1, {0.7}), Matrix(1, 1, {1.0}), Matrix(1, 1, {0.0}));
  const std::vector<double> grid = dyadic_grid(8);
  const telegraph::TelegraphSampler sampler(spec, grid, q);
  const long m = 400;
  const std::vector<GridPath> paths = diagnostics::generate_paths(
      [&](uint64_t r) { return sampler.sample(1000.0, kSeed, r); }, m);
  const double slope = diagnostics::holder_moment_slope(paths, 2);
  require(slope >= 1.2 && slope <= 1.6,
          fmt("second-moment slope %.3f outside [1.2, 1.6]", slope));
  return fmt("n=1000, H=0.7, M=%ld: slope %.3f (target 1.4)", m, slope);
}

// ---- c8: Brownian limit of telegraph integrals ------------------------------

std::string crit8() {
  const double n = 1e4;
  const long m = 5000;
  const std::vector<double> ts = {0.25, 0.5, 1.0};
  std::vector<double> sum(ts.size(), 0.0), sumsq(ts.size(), 0.0);
  for (long r = 0; r < m; ++r) {
    RngStream stream(kSeed, uint32_t(r), 0, StreamRole::kTelegraphSign);
    const telegraph::TelegraphPath p = telegraph::sample_telegraph(n, 1.0, stream);
    for (size_t k = 0; k < ts.size(); ++k) {
      const double v = telegraph::integrate_telegraph_sign(p, ts[k]);
      sum[k] += v * v;
      sumsq[k] += v * v * v * v;
    }
  }
  std::string note = fmt("n=1e4, M=%ld:", m);
  for (size_t k = 0; k < ts.size(); ++k) {
    const double var = sum[k] / double(m);  // the mean is zero by symmetry
    const double se = std::sqrt((sumsq[k] / double(m) - var * var) / double(m));
    const double z = std::abs(var - ts[k]) / se;
    require(z <= 5.0, fmt("Var at t=%.2f: %.4f vs %.2f, z=%.2f > 5", ts[k], var, ts[k], z));
    note += fmt(" t=%.2f z=%.2f", ts[k], z);
  }
  return note;
}

// ---- c9: byte-identical verification reports -------------------------------

int run_tool(const std::string& cmd) {
  const int rc = std::system(cmd.c_str());
  if (rc == -1) throw Failure("system() failed");
  return (rc >> 8) & 0xff;  // POSIX wait status -> exit code
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  require(bool(in), "cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string crit9(const char* tool) {
  require(tool != nullptr, "c9 needs the tool path as its second argument");
  namespace fs = std::filesystem;
  const fs::path work =
      fs::temp_directory_path() / fmt("ofbm-c9-%ld", long(::getpid()));
  fs::remove_all(work);
  fs::create_directories(work);

  std::string note;
  for (const std::string scheme : {"exact", "partial-sums", "telegraph"}) {
    const fs::path d1 = work / (scheme + "-a"), d2 = work / (scheme + "-b");
    const std::string base = std::string("\"") + tool + "\" verify --scheme " + scheme +
                             " --replicates 400 --out ";
    const int rc1 = run_tool(base + d1.string() + " > /dev/null");
    const int rc2 = run_tool(base + d2.string() + " > /dev/null");
    require(rc1 == 0, scheme + ": first verify run failed (exit " + std::to_string(rc1) + ")");
    require(rc2 == 0, scheme + ": second verify run failed");
    require(slurp(d1 / "report.json") == slurp(d2 / "report.json"),
            scheme + ": reports differ between identical runs");
    note += scheme + " ";
  }
  fs::remove_all(work);
  return note + "reports byte-identical across reruns";
}

struct Criterion {
  const char* name;
  double budget_seconds;
  const char* label;
};

const Criterion kCriteria[] = {
    {"c1", 10.0, "matrix calculus battery"},
    {"c2", 5.0, "closed-form limit covariance"},
    {"c3", 30.0, "fBm covariance shape"},
    {"c4", 120.0, "exact sampler law checks"},
    {"c5", 1800.0, "telegraph convergence"},
    {"c6", 300.0, "partial-sum convergence"},
    {"c7", 300.0, "telegraph moment scaling"},
    {"c8", 60.0, "Brownian limit of telegraph integrals"},
    {"c9", 120.0, "byte-identical verification reports"},
};

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: %s c1..c9 [tool-path-for-c9]\n", argv[0]);
    return 2;
  }
  const std::string which = argv[1];
  const Criterion* crit = nullptr;
  for (const Criterion& c : kCriteria)
    if (which == c.name) crit = &c;
  if (!crit) {
    std::fprintf(stderr, "unknown criterion %s\n", which.c_str());
    return 2;
  }

  const auto t0 = std::chrono::steady_clock::now();
  std::string detail;
  try {
    if (which == "c1") detail = crit1();
    if (which == "c2") detail = crit2();
    if (which == "c3") detail = crit3();
    if (which == "c4") detail = crit4();
    if (which == "c5") detail = crit5();
    if (which == "c6") detail = crit6();
    if (which == "c7") detail = crit7();
    if (which == "c8") detail = crit8();
    if (which == "c9") detail = crit9(argc > 2 ? argv[2] : nullptr);
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs > crit->budget_seconds) {
      std::printf("[FAIL] %s: %s: over budget (%.1f s > %.0f s)\n", crit->name, crit->label,
                  secs, crit->budget_seconds);
      return 1;
    }
    std::printf("[PASS] %s: %s: %s (%.1f s < %.0f s)\n", crit->name, crit->label,
                detail.c_str(), secs, crit->budget_seconds);
    return 0;
  } catch (const std::exception& e) {
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("[FAIL] %s: %s: %s (%.1f s)\n", crit->name, crit->label, e.what(), secs);
    return 1;
  }
}
