#include "ofbm/telegraph.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <utility>

#include "pow_op.hpp"

namespace ofbm::telegraph {
namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

linalg::SpectralBounds checked_bounds(const Matrix& dexp) {
  auto b = linalg::spectral_real_bounds(dexp);
  if (!(b.lambda_min > 0.0 && b.lambda_max < 1.0))
    throw DomainError("exponent eigenvalue real parts must lie in (0, 1)");
  return b;
}

// Mesh for panel antiderivatives of the kernels themselves (integrand ~ x^{1/2-L}
// near zero, oscillation frequency <= max(1, tmax)).
std::vector<double> kernel_mesh(double lambda_max, double tmax, const QuadratureConfig& q) {
  const double width = kPi / std::max(1.0, tmax);
  return quadrature::build_mesh(width, q.x_max, q.panels_near_zero, q.grading_ratio,
                                0.5 - lambda_max, 1e-13);
}

// out[v] = int f_v(x) (-1)^{N(x)} dx over the primitive's domain (amplitude
// sqrt(n) NOT applied), telescoped so each jump costs one primitive evaluation:
//   (-1)^J Phi(end) + 2 sum_{m=1..J} (-1)^{m-1} Phi(tau_m).
void alternating_integral(const quadrature::PanelPrimitive& prim, const std::vector<double>& jumps,
                          double* out, double* scratch) {
  const int nv = prim.n_values();
  prim.total(out);
  if (jumps.size() % 2 == 1)
    for (int v = 0; v < nv; ++v) out[v] = -out[v];
  int hint = 0;
  double sign = 2.0;
  for (double tau : jumps) {
    prim.eval(tau, &hint, scratch);
    for (int v = 0; v < nv; ++v) out[v] += sign * scratch[v];
    sign = -sign;
  }
}

void check_intensity(double n) {
  if (!(n > 0.0) || !std::isfinite(n))
    throw InvalidInputError("telegraph intensity n must be positive and finite");
}

}  // namespace

TelegraphPath sample_telegraph(double n, double x_max, RngStream& stream) {
  check_intensity(n);
  if (!(x_max > 0.0) || !std::isfinite(x_max))
    throw InvalidInputError("sample_telegraph: x_max must be positive and finite");
  TelegraphPath p;
  p.intensity = n;
  p.domain_end = x_max;
  p.jump_times.reserve(static_cast<size_t>(n * x_max * 1.1) + 16);
  double x = 0.0;
  for (;;) {
    x += stream.exponential(n);
    if (x >= x_max) break;
    p.jump_times.push_back(x);
  }
  return p;
}

double telegraph_sign_at(const TelegraphPath& p, double x) {
  if (!(x > 0.0 && x <= p.domain_end))
    throw DomainError("telegraph_sign_at: x must lie in (0, domain_end]");
  const auto it = std::upper_bound(p.jump_times.begin(), p.jump_times.end(), x);
  const auto count = it - p.jump_times.begin();
  const double amp = std::sqrt(p.intensity);
  return (count % 2 == 0) ? amp : -amp;
}

double integrate_telegraph_sign(const TelegraphPath& p, double t) {
  if (!(t >= 0.0 && t <= p.domain_end))
    throw DomainError("integrate_telegraph_sign: t must lie in [0, domain_end]");
  if (t == 0.0) return 0.0;
  const auto end = std::upper_bound(p.jump_times.begin(), p.jump_times.end(), t);
  double alt = 0.0;
  double sign = 1.0;
  for (auto it = p.jump_times.begin(); it != end; ++it) {
    alt += sign * *it;
    sign = -sign;
  }
  const auto count = end - p.jump_times.begin();
  const double head = (count % 2 == 0) ? t : -t;
  return std::sqrt(p.intensity) * (head + 2.0 * alt);
}

std::vector<double> integrate_kernel_column(Kernel kernel, const model::OfbmSpec& spec, double t,
                                            int column, const TelegraphPath& p,
                                            const QuadratureConfig& q) {
  q.validate();
  check_intensity(p.intensity);
  if (p.domain_end != q.x_max)
    throw InvalidInputError("integrate_kernel_column: path domain_end must equal q.x_max");
  if (column < 0 || column >= spec.d)
    throw InvalidInputError("integrate_kernel_column: bad column index");
  if (!std::isfinite(t)) throw InvalidInputError("integrate_kernel_column: t must be finite");
  const auto bounds = checked_bounds(spec.dexp);
  const int d = spec.d;
  const model::detail::PowOp pw(spec.dexp);
  const std::vector<double> times{t};
  Matrix pm(d, d), pa1(d, d), pa2(d, d);
  std::vector<Matrix> g1(1, Matrix(d, d)), g2(1, Matrix(d, d));
  auto fill = [&](double x, double* out) {
    model::detail::fill_kernel_matrices(pw, spec.a1, spec.a2, x, times, pm, pa1, pa2, g1, g2);
    const Matrix& g = (kernel == Kernel::kG1) ? g1[0] : g2[0];
    for (int i = 0; i < d; ++i) out[i] = g(i, column);
  };
  quadrature::PanelPrimitive prim(kernel_mesh(bounds.lambda_max, std::abs(t), q), d, fill);
  std::vector<double> out(d, 0.0), scratch(d, 0.0);
  alternating_integral(prim, p.jump_times, out.data(), scratch.data());
  const double amp = std::sqrt(p.intensity);
  for (double& v : out) v *= amp;
  return out;
}

TelegraphSampler::TelegraphSampler(model::OfbmSpec spec, std::vector<double> grid,
                                   const QuadratureConfig& q)
    : spec_(std::move(spec)), grid_(std::move(grid)), x_max_(q.x_max) {
  q.validate();
  check_sampling_grid(grid_);
  const auto bounds = checked_bounds(spec_.dexp);
  const model::detail::PowOp pw(spec_.dexp);
  const int d = spec_.d;
  const int nt = static_cast<int>(grid_.size());
  const auto breaks = kernel_mesh(bounds.lambda_max, grid_.back(), q);
  Matrix pm(d, d), pa1(d, d), pa2(d, d);
  std::vector<Matrix> g1(nt, Matrix(d, d)), g2(nt, Matrix(d, d));
  g1_cols_.reserve(d);
  g2_cols_.reserve(d);
  for (int j = 0; j < d; ++j) {
    auto fill1 = [&, j](double x, double* out) {
      model::detail::fill_kernel_matrices(pw, spec_.a1, spec_.a2, x, grid_, pm, pa1, pa2, g1, g2);
      for (int v = 0; v < nt; ++v)
        for (int i = 0; i < d; ++i) out[size_t(v) * d + i] = g1[v](i, j);
    };
    g1_cols_.emplace_back(breaks, nt * d, fill1);
    auto fill2 = [&, j](double x, double* out) {
      model::detail::fill_kernel_matrices(pw, spec_.a1, spec_.a2, x, grid_, pm, pa1, pa2, g1, g2);
      for (int v = 0; v < nt; ++v)
        for (int i = 0; i < d; ++i) out[size_t(v) * d + i] = g2[v](i, j);
    };
    g2_cols_.emplace_back(breaks, nt * d, fill2);
  }
}

GridPath TelegraphSampler::sample(double n, std::uint64_t seed, std::uint64_t replicate) const {
  check_intensity(n);
  const int d = spec_.d;
  const int nt = static_cast<int>(grid_.size());
  GridPath path;
  path.grid = grid_;
  path.d = d;
  path.seed = seed;
  path.replicate = replicate;
  path.values.assign(size_t(nt) * d, 0.0);
  const double amp = std::sqrt(n);
  std::vector<double> acc(size_t(nt) * d), scratch(size_t(nt) * d);
  for (int j = 0; j < d; ++j) {
    {
      RngStream stream(seed, replicate, static_cast<std::uint32_t>(j), StreamRole::kTelegraphSign);
      const auto tp = sample_telegraph(n, x_max_, stream);
      alternating_integral(g1_cols_[j], tp.jump_times, acc.data(), scratch.data());
      for (size_t k = 0; k < path.values.size(); ++k) path.values[k] += amp * acc[k];
    }
    {
      RngStream stream(seed, replicate, static_cast<std::uint32_t>(j),
                       StreamRole::kTelegraphSignHat);
      const auto tp = sample_telegraph(n, x_max_, stream);
      alternating_integral(g2_cols_[j], tp.jump_times, acc.data(), scratch.data());
      for (size_t k = 0; k < path.values.size(); ++k) path.values[k] += amp * acc[k];
    }
  }
  return path;
}

GridPath sample_xn(const model::OfbmSpec& spec, double n, const std::vector<double>& grid,
                   const QuadratureConfig& q, std::uint64_t seed, std::uint64_t replicate) {
  return TelegraphSampler(spec, grid, q).sample(n, seed, replicate);
}

namespace {

// Inner-mesh skeleton: window [lo, hi] around x, the kink at y = x, every global
// breakpoint inside, then every gap split to length <= piece (the telegraph
// correlation scale 1/(2n), halved per refinement level).
void inner_breaks(double x, double lo, double hi, double piece,
                  const std::vector<double>& global_breaks, std::vector<double>& pts,
                  std::vector<double>& out) {
  pts.clear();
  pts.push_back(lo);
  if (x > lo && x < hi) pts.push_back(x);
  auto it = std::lower_bound(global_breaks.begin(), global_breaks.end(), lo);
  for (; it != global_breaks.end() && *it < hi; ++it)
    if (*it > lo) pts.push_back(*it);
  pts.push_back(hi);
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  out.clear();
  out.push_back(pts[0]);
  for (size_t k = 1; k < pts.size(); ++k) {
    const double a = pts[k - 1], b = pts[k];
    const int ns = std::max(1, static_cast<int>(std::ceil((b - a) / piece - 1e-9)));
    for (int i = 1; i < ns; ++i) out.push_back(a + (b - a) * double(i) / ns);
    out.push_back(b);
  }
}

std::vector<Matrix> finite_pairs_once(const model::OfbmSpec& spec,
                                      const model::detail::PowOp& pw, double n,
                                      const std::vector<double>& vals,
                                      const std::vector<std::pair<int, int>>& prs,
                                      const std::vector<double>& outer_breaks,
                                      const std::vector<double>& global_breaks, double piece,
                                      double x_max) {
  const int d = spec.d;
  const int m = static_cast<int>(vals.size());
  const auto& xi = quadrature::gl16_nodes();
  const auto& wt = quadrature::gl16_weights();
  std::vector<Matrix> acc(prs.size(), Matrix(d, d));
  Matrix pm(d, d), pa1(d, d), pa2(d, d);
  std::vector<Matrix> g1x(m, Matrix(d, d)), g2x(m, Matrix(d, d));
  std::vector<Matrix> g1y(m, Matrix(d, d)), g2y(m, Matrix(d, d));
  std::vector<Matrix> m1(m, Matrix(d, d)), m2(m, Matrix(d, d));
  const double hw = 10.0 / n;  // 20 decay lengths of e^{-2n|x-y|}
  std::vector<double> pts, ib;
  pts.reserve(256);
  ib.reserve(1024);

  for (size_t k = 0; k + 1 < outer_breaks.size(); ++k) {
    const double mid = 0.5 * (outer_breaks[k] + outer_breaks[k + 1]);
    const double half = 0.5 * (outer_breaks[k + 1] - outer_breaks[k]);
    for (int node = 0; node < 16; ++node) {
      const double x = mid + half * xi[node];
      const double wx = half * wt[node];
      model::detail::fill_kernel_matrices(pw, spec.a1, spec.a2, x, vals, pm, pa1, pa2, g1x, g2x);

      const double lo = std::max(global_breaks.front(), x - hw);
      const double hi = std::min(x_max, x + hw);
      inner_breaks(x, lo, hi, piece, global_breaks, pts, ib);
      for (int v = 0; v < m; ++v)
        for (int i = 0; i < d; ++i)
          for (int j = 0; j < d; ++j) {
            m1[v](i, j) = 0.0;
            m2[v](i, j) = 0.0;
          }
      for (size_t kk = 0; kk + 1 < ib.size(); ++kk) {
        const double imid = 0.5 * (ib[kk] + ib[kk + 1]);
        const double ihalf = 0.5 * (ib[kk + 1] - ib[kk]);
        for (int inode = 0; inode < 16; ++inode) {
          const double y = imid + ihalf * xi[inode];
          const double c = ihalf * wt[inode] * n * std::exp(-2.0 * n * std::abs(x - y));
          model::detail::fill_kernel_matrices(pw, spec.a1, spec.a2, y, vals, pm, pa1, pa2, g1y,
                                              g2y);
          for (int v = 0; v < m; ++v)
            for (int i = 0; i < d; ++i)
              for (int j = 0; j < d; ++j) {
                m1[v](i, j) += c * g1y[v](i, j);
                m2[v](i, j) += c * g2y[v](i, j);
              }
        }
      }
      for (size_t e = 0; e < prs.size(); ++e) {
        add_scaled_abt(acc[e], wx, g1x[prs[e].first], m1[prs[e].second]);
        add_scaled_abt(acc[e], wx, g2x[prs[e].first], m2[prs[e].second]);
      }
    }
  }
  return acc;
}

std::vector<Matrix> finite_pairs(const model::OfbmSpec& spec, double n,
                                 const std::vector<double>& vals,
                                 const std::vector<std::pair<int, int>>& prs,
                                 const QuadratureConfig& q) {
  q.validate();
  check_intensity(n);
  for (double v : vals)
    if (!std::isfinite(v)) throw InvalidInputError("finite_n_covariance: times must be finite");
  const auto bounds = checked_bounds(spec.dexp);
  const model::detail::PowOp pw(spec.dexp);

  double tmax = 0.0;
  for (double v : vals) tmax = std::max(tmax, std::abs(v));
  const double width = kPi / std::max(1.0, tmax);
  auto mesh = quadrature::build_mesh(width, q.x_max, q.panels_near_zero, q.grading_ratio,
                                     1.0 - 2.0 * bounds.lambda_max, 0.01 * q.rel_tol);
  // Resolve the truncated-kernel boundary layer at x_max (features of scale
  // 1/(2n) from the clipped exponential mass; near zero the graded panels are
  // already finer than the layer wherever its amplitude is non-negligible).
  for (int k = 1; k <= 20; ++k) {
    const double bx = q.x_max - 0.5 * double(k) / n;
    if (bx > mesh.front()) mesh.push_back(bx);
  }
  std::sort(mesh.begin(), mesh.end());
  mesh.erase(std::unique(mesh.begin(), mesh.end()), mesh.end());

  const double tol = 10.0 * q.rel_tol;
  std::vector<Matrix> prev = finite_pairs_once(spec, pw, n, vals, prs, mesh, mesh,
                                               0.5 / n, q.x_max);
  std::vector<double> outer = mesh;
  double piece = 0.5 / n;
  double achieved = 0.0;
  for (int round = 0; round < 2; ++round) {
    outer = quadrature::halve_mesh(outer);
    piece *= 0.5;
    std::vector<Matrix> cur = finite_pairs_once(spec, pw, n, vals, prs, outer, mesh, piece,
                                                q.x_max);
    double delta = 0.0, scale = 0.0;
    for (size_t e = 0; e < prs.size(); ++e) {
      for (int i = 0; i < spec.d; ++i)
        for (int j = 0; j < spec.d; ++j)
          delta = std::max(delta, std::abs(cur[e](i, j) - prev[e](i, j)));
      scale = std::max(scale, cur[e].max_abs());
    }
    achieved = delta / std::max(scale, 1e-300);
    if (achieved <= tol) return cur;
    prev = std::move(cur);
  }
  std::ostringstream msg;
  msg << "finite_n_covariance quadrature did not converge: achieved relative delta " << achieved
      << " > tolerance " << tol;
  throw NumericalFailureError(msg.str());
}

}  // namespace

Matrix finite_n_covariance(const model::OfbmSpec& spec, double n, double t, double s,
                           const QuadratureConfig& q) {
  std::vector<double> vals;
  std::vector<std::pair<int, int>> prs;
  if (t == s) {
    vals = {t};
    prs = {{0, 0}};
  } else {
    vals = {t, s};
    prs = {{0, 1}};
  }
  return finite_pairs(spec, n, vals, prs, q)[0];
}

std::vector<std::vector<Matrix>> finite_n_covariance_grid(const model::OfbmSpec& spec, double n,
                                                          const std::vector<double>& grid,
                                                          const QuadratureConfig& q) {
  const int m = static_cast<int>(grid.size());
  if (m == 0) return {};
  std::vector<std::pair<int, int>> prs;
  for (int i = 0; i < m; ++i)
    for (int j = i; j < m; ++j) prs.emplace_back(i, j);
  auto flat = finite_pairs(spec, n, grid, prs, q);
  std::vector<std::vector<Matrix>> out(m, std::vector<Matrix>(m));
  size_t e = 0;
  for (int i = 0; i < m; ++i)
    for (int j = i; j < m; ++j, ++e) {
      out[i][j] = flat[e];
      if (j != i) out[j][i] = flat[e].transpose();
    }
  return out;
}

}  // namespace ofbm::telegraph
