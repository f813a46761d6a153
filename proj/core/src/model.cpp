#include "ofbm/model.hpp"

#include <cmath>
#include <sstream>
#include <utility>

#include "ofbm/error.hpp"
#include "pow_op.hpp"

namespace ofbm::model {
namespace {

using detail::PowOp;

constexpr double kPi = 3.141592653589793238462643383279502884;

void require_valid_shapes(const OfbmSpec& spec) {
  if (spec.d < 1 || !spec.dexp.square() || spec.dexp.rows() != spec.d ||
      spec.a1.rows() != spec.d || spec.a1.cols() != spec.d || spec.a2.rows() != spec.d ||
      spec.a2.cols() != spec.d)
    throw InvalidInputError("OfbmSpec: D, A1, A2 must all be d x d with d >= 1");
  if (!spec.dexp.all_finite() || !spec.a1.all_finite() || !spec.a2.all_finite())
    throw InvalidInputError("OfbmSpec: parameters must be finite");
}

linalg::SpectralBounds require_valid_exponent(const Matrix& dexp) {
  auto b = linalg::spectral_real_bounds(dexp);
  if (!(b.lambda_min > 0.0 && b.lambda_max < 1.0))
    throw DomainError("exponent eigenvalue real parts must lie in (0, 1)");
  return b;
}

// A1 A1^T + A2 A2^T, bitwise symmetric by construction.
Matrix coefficient_gram(const OfbmSpec& spec) {
  Matrix s(spec.d, spec.d);
  add_scaled_abt(s, 1.0, spec.a1, spec.a1);
  add_scaled_abt(s, 1.0, spec.a2, spec.a2);
  return s;
}

// Closed form for the non-oscillatory part of the tail integral:
//   int_X^inf x^{-(D+I/2)} S x^{-(D+I/2)^T} dx = X * P(X) T P(X)^T,
// where T solves D T + T D^T = S (substitute x = X e^y). Returned bitwise
// symmetric; per-pair covariances add it scaled by c0(t,s).
Matrix nonosc_tail_unit(const Matrix& dexp, const PowOp& pw, const Matrix& s, double x_max) {
  const int d = dexp.rows();
  Matrix t = linalg::detail::lyapunov(dexp, s);
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) {
      const double avg = 0.5 * (t(i, j) + t(j, i));
      t(i, j) = avg;
      t(j, i) = avg;
    }
  Matrix px(d, d);
  pw.eval(x_max, px);
  Matrix pt = px * t;
  Matrix out(d, d);
  add_scaled_abt(out, x_max, pt, px);
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) out(j, i) = out(i, j);
  return out;
}

// Multiplicity of the non-oscillatory integrand term for the time pair (t,s):
// 2 on the diagonal t = s != 0, 1 off it, 0 when either time is zero.
double nonosc_coefficient(double t, double s) {
  return (t != 0.0 ? 1.0 : 0.0) + (s != 0.0 ? 1.0 : 0.0) - (t != s ? 1.0 : 0.0);
}

// GL16 sum over the mesh of w * [G1(x,t_i) G1(x,t_j)^T + G2(x,t_i) G2(x,t_j)^T]
// for each requested index pair, sharing kernel evaluations across pairs.
std::vector<Matrix> integrate_pairs(const OfbmSpec& spec, const PowOp& pw,
                                    const std::vector<double>& vals,
                                    const std::vector<std::pair<int, int>>& prs,
                                    const std::vector<double>& breaks) {
  const int d = spec.d;
  const int m = static_cast<int>(vals.size());
  const auto& xi = quadrature::gl16_nodes();
  const auto& wt = quadrature::gl16_weights();
  std::vector<Matrix> acc(prs.size(), Matrix(d, d));
  Matrix p(d, d), pa1(d, d), pa2(d, d);
  std::vector<Matrix> g1(m, Matrix(d, d)), g2(m, Matrix(d, d));
  for (size_t k = 0; k + 1 < breaks.size(); ++k) {
    const double mid = 0.5 * (breaks[k] + breaks[k + 1]);
    const double half = 0.5 * (breaks[k + 1] - breaks[k]);
    for (int n = 0; n < 16; ++n) {
      const double x = mid + half * xi[n];
      const double w = half * wt[n];
      detail::fill_kernel_matrices(pw, spec.a1, spec.a2, x, vals, p, pa1, pa2, g1, g2);
      for (size_t e = 0; e < prs.size(); ++e) {
        add_scaled_abt(acc[e], w, g1[prs[e].first], g1[prs[e].second]);
        add_scaled_abt(acc[e], w, g2[prs[e].first], g2[prs[e].second]);
      }
    }
  }
  return acc;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  double m = 0.0;
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) m = std::max(m, std::abs(a(i, j) - b(i, j)));
  return m;
}

// Quadrature driver shared by the covariance entry points: integrate on the base
// mesh, then keep halving panels until successive results agree to rel_tol
// (relative to the largest finished covariance). The truncation tail is added
// after convergence; it is exact for the non-oscillatory part, and the
// oscillatory remainder is O(x_max^{-1-2*lambda_min}) by stationary phase.
std::vector<Matrix> covariance_pairs(const OfbmSpec& spec,
                                     const std::vector<double>& vals,
                                     const std::vector<std::pair<int, int>>& prs,
                                     const QuadratureConfig& q) {
  q.validate();
  require_valid_shapes(spec);
  for (double v : vals)
    if (!std::isfinite(v)) throw InvalidInputError("covariance times must be finite");
  const auto bounds = require_valid_exponent(spec.dexp);
  const PowOp pw(spec.dexp);

  double maxabs = 0.0;
  for (double v : vals) maxabs = std::max(maxabs, std::abs(v));
  const double width = kPi / std::max(1.0, maxabs);
  const double sing_power = 1.0 - 2.0 * bounds.lambda_max;
  auto breaks = quadrature::build_mesh(width, q.x_max, q.panels_near_zero, q.grading_ratio,
                                       sing_power, 0.01 * q.rel_tol);

  const Matrix tail_unit = nonosc_tail_unit(spec.dexp, pw, coefficient_gram(spec), q.x_max);

  std::vector<Matrix> prev = integrate_pairs(spec, pw, vals, prs, breaks);
  double achieved = 0.0;
  for (int round = 0; round < 3; ++round) {
    breaks = quadrature::halve_mesh(breaks);
    std::vector<Matrix> cur = integrate_pairs(spec, pw, vals, prs, breaks);
    double delta = 0.0, scale = 0.0;
    for (size_t e = 0; e < prs.size(); ++e) {
      delta = std::max(delta, max_abs_diff(cur[e], prev[e]));
      const double c0 = nonosc_coefficient(vals[prs[e].first], vals[prs[e].second]);
      Matrix full = cur[e];
      Matrix scaled_tail = tail_unit;
      scaled_tail *= c0;
      full += scaled_tail;
      scale = std::max(scale, full.max_abs());
    }
    achieved = delta / std::max(scale, 1e-300);
    if (achieved <= q.rel_tol) {
      for (size_t e = 0; e < prs.size(); ++e) {
        const double c0 = nonosc_coefficient(vals[prs[e].first], vals[prs[e].second]);
        Matrix scaled_tail = tail_unit;
        scaled_tail *= c0;
        cur[e] += scaled_tail;
      }
      return cur;
    }
    prev = std::move(cur);
  }
  std::ostringstream msg;
  msg << "spectral covariance quadrature did not converge: achieved relative delta " << achieved
      << " > rel_tol " << q.rel_tol << " within the panel budget";
  throw NumericalFailureError(msg.str());
}

}  // namespace

OfbmSpec make_spec(const Matrix& dexp, const Matrix& a1, const Matrix& a2, std::string label) {
  OfbmSpec spec;
  spec.d = dexp.rows();
  spec.dexp = dexp;
  spec.a1 = a1;
  spec.a2 = a2;
  spec.label = std::move(label);
  require_valid_shapes(spec);
  return spec;
}

Matrix kernel_g1(const OfbmSpec& spec, double x, double t) {
  require_valid_shapes(spec);
  if (!(x > 0.0) || !std::isfinite(x)) throw DomainError("kernel_g1: x must be positive");
  if (!std::isfinite(t)) throw InvalidInputError("kernel_g1: t must be finite");
  const PowOp pw(spec.dexp);
  Matrix p(spec.d, spec.d);
  pw.eval(x, p);
  const double st = std::sin(t * x);
  const double sh = std::sin(0.5 * t * x);
  const double omc = 2.0 * sh * sh;
  Matrix out = p * spec.a1;
  out *= st;
  Matrix second = p * spec.a2;
  second *= omc;
  out -= second;
  return out;
}

Matrix kernel_g2(const OfbmSpec& spec, double x, double t) {
  require_valid_shapes(spec);
  if (!(x > 0.0) || !std::isfinite(x)) throw DomainError("kernel_g2: x must be positive");
  if (!std::isfinite(t)) throw InvalidInputError("kernel_g2: t must be finite");
  const PowOp pw(spec.dexp);
  Matrix p(spec.d, spec.d);
  pw.eval(x, p);
  const double st = std::sin(t * x);
  const double sh = std::sin(0.5 * t * x);
  const double omc = 2.0 * sh * sh;
  Matrix out = p * spec.a2;
  out *= st;
  Matrix second = p * spec.a1;
  second *= omc;
  out += second;
  return out;
}

void kernel_columns(const OfbmSpec& spec, double x, int column, const std::vector<double>& times,
                    std::vector<double>& g1_out, std::vector<double>& g2_out) {
  if (column < 0 || column >= spec.d) throw InvalidInputError("kernel_columns: bad column");
  if (!(x > 0.0) || !std::isfinite(x)) throw DomainError("kernel_columns: x must be positive");
  const int d = spec.d;
  const int nt = static_cast<int>(times.size());
  g1_out.resize(size_t(nt) * d);
  g2_out.resize(size_t(nt) * d);
  const PowOp pw(spec.dexp);
  Matrix p(d, d);
  pw.eval(x, p);
  std::vector<double> pa1(d, 0.0), pa2(d, 0.0);
  for (int i = 0; i < d; ++i)
    for (int k = 0; k < d; ++k) {
      pa1[i] += p(i, k) * spec.a1(k, column);
      pa2[i] += p(i, k) * spec.a2(k, column);
    }
  for (int v = 0; v < nt; ++v) {
    const double tx = times[v] * x;
    const double st = std::sin(tx);
    const double sh = std::sin(0.5 * tx);
    const double omc = 2.0 * sh * sh;
    for (int i = 0; i < d; ++i) {
      g1_out[size_t(v) * d + i] = st * pa1[i] - omc * pa2[i];
      g2_out[size_t(v) * d + i] = st * pa2[i] + omc * pa1[i];
    }
  }
}

Matrix spectral_covariance(const OfbmSpec& spec, double t, double s, const QuadratureConfig& q) {
  std::vector<double> vals;
  std::vector<std::pair<int, int>> prs;
  if (t == s) {
    vals = {t};
    prs = {{0, 0}};
  } else {
    vals = {t, s};
    prs = {{0, 1}};
  }
  return covariance_pairs(spec, vals, prs, q)[0];
}

std::vector<std::vector<Matrix>> spectral_covariance_grid(const OfbmSpec& spec,
                                                          const std::vector<double>& grid,
                                                          const QuadratureConfig& q) {
  const int m = static_cast<int>(grid.size());
  if (m == 0) return {};
  std::vector<std::pair<int, int>> prs;
  for (int i = 0; i < m; ++i)
    for (int j = i; j < m; ++j) prs.emplace_back(i, j);
  auto flat = covariance_pairs(spec, grid, prs, q);
  std::vector<std::vector<Matrix>> out(m, std::vector<Matrix>(m));
  size_t e = 0;
  for (int i = 0; i < m; ++i)
    for (int j = i; j < m; ++j, ++e) {
      out[i][j] = flat[e];
      if (j != i) out[j][i] = flat[e].transpose();
    }
  return out;
}

Matrix gamma_mason_xiao(const Matrix& dexp, const QuadratureConfig& q) {
  q.validate();
  if (!dexp.square() || dexp.rows() < 1 || !dexp.all_finite())
    throw InvalidInputError("gamma_mason_xiao: D must be a finite square matrix");
  const auto bounds = require_valid_exponent(dexp);
  const int d = dexp.rows();
  const PowOp pw(dexp);

  // (1-cos x)^2 + sin^2 x = 2 (1-cos x) exactly, so a single even weight remains.
  auto integrate = [&](const std::vector<double>& breaks) {
    const auto& xi = quadrature::gl16_nodes();
    const auto& wt = quadrature::gl16_weights();
    Matrix acc(d, d);
    Matrix p(d, d);
    for (size_t k = 0; k + 1 < breaks.size(); ++k) {
      const double mid = 0.5 * (breaks[k] + breaks[k + 1]);
      const double half = 0.5 * (breaks[k + 1] - breaks[k]);
      for (int n = 0; n < 16; ++n) {
        const double x = mid + half * xi[n];
        const double sh = std::sin(0.5 * x);
        pw.eval(x, p);
        add_scaled_abt(acc, half * wt[n] * 4.0 * sh * sh, p, p);
      }
    }
    return acc;
  };

  const double sing_power = 1.0 - 2.0 * bounds.lambda_max;
  auto breaks = quadrature::build_mesh(kPi, q.x_max, q.panels_near_zero, q.grading_ratio,
                                       sing_power, 0.01 * q.rel_tol);
  Matrix tail = nonosc_tail_unit(dexp, pw, Matrix::identity(d), q.x_max);
  tail *= 2.0;

  Matrix prev = integrate(breaks);
  double achieved = 0.0;
  for (int round = 0; round < 3; ++round) {
    breaks = quadrature::halve_mesh(breaks);
    Matrix cur = integrate(breaks);
    Matrix full = cur;
    full += tail;
    achieved = max_abs_diff(cur, prev) / std::max(full.max_abs(), 1e-300);
    if (achieved <= q.rel_tol) {
      try {
        linalg::cholesky_psd(full, 0.0);
      } catch (const NotPositiveSemidefiniteError&) {
        throw NumericalFailureError("gamma_mason_xiao: computed matrix is not positive definite");
      }
      return full;
    }
    prev = std::move(cur);
  }
  std::ostringstream msg;
  msg << "gamma_mason_xiao quadrature did not converge: achieved relative delta " << achieved
      << " > rel_tol " << q.rel_tol;
  throw NumericalFailureError(msg.str());
}

Matrix reversible_covariance(double t, double s, const Matrix& dexp, const Matrix& gamma) {
  if (!dexp.square() || !gamma.square() || dexp.rows() != gamma.rows())
    throw InvalidInputError("reversible_covariance: D and Gamma must be square, same size");
  if (!std::isfinite(t) || !std::isfinite(s))
    throw InvalidInputError("reversible_covariance: times must be finite");
  if (max_abs_diff(gamma, gamma.transpose()) > 1e-10 * std::max(1.0, gamma.max_abs()))
    throw InvalidInputError("reversible_covariance: Gamma must be symmetric");
  const int d = dexp.rows();
  auto term = [&](double u) {
    Matrix out(d, d);
    const double au = std::abs(u);
    if (au == 0.0) return out;
    Matrix w = linalg::mat_power(au, dexp);
    Matrix wg = w * gamma;
    add_scaled_abt(out, 1.0, wg, w);
    return out;
  };
  Matrix r = term(t);
  r += term(s);
  r -= term(t - s);
  r *= 0.5;
  return r;
}

bool is_time_reversible_params(const OfbmSpec& spec, double tol) {
  require_valid_shapes(spec);
  const int d = spec.d;
  Matrix diff(d, d);
  add_scaled_abt(diff, 1.0, spec.a2, spec.a1);
  add_scaled_abt(diff, -1.0, spec.a1, spec.a2);
  return linalg::operator_norm(diff) <= tol;
}

SquareIntegrability square_integrability_check(const OfbmSpec& spec, double t,
                                               const QuadratureConfig& q) {
  q.validate();
  require_valid_shapes(spec);
  const auto bounds = require_valid_exponent(spec.dexp);
  const PowOp pw(spec.dexp);
  const int d = spec.d;

  Matrix p(d, d), pa1(d, d), pa2(d, d);
  auto f = [&](double x) {
    pw.eval(x, p);
    pa1 = p * spec.a1;
    pa2 = p * spec.a2;
    const double tx = t * x;
    const double st = std::sin(tx);
    const double sh = std::sin(0.5 * tx);
    const double omc = 2.0 * sh * sh;
    double sum = 0.0;
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        const double e1 = st * pa1(i, j) - omc * pa2(i, j);
        const double e2 = st * pa2(i, j) + omc * pa1(i, j);
        sum += e1 * e1 + e2 * e2;
      }
    return sum;
  };

  const double width = kPi / std::max(1.0, std::abs(t));
  const double sing_power = 1.0 - 2.0 * bounds.lambda_max;
  auto breaks = quadrature::build_mesh(width, q.x_max, q.panels_near_zero, q.grading_ratio,
                                       sing_power, 0.01 * q.rel_tol);
  SquareIntegrability out;
  const double coarse = quadrature::integrate_scalar(breaks, f);
  out.value = quadrature::integrate_scalar(quadrature::halve_mesh(breaks), f);
  out.refine_delta = std::abs(out.value - coarse);

  auto window = [&](double lo, double hi) {
    const int npan = std::max(1, static_cast<int>(std::ceil((hi - lo) / kPi)));
    std::vector<double> b(npan + 1);
    for (int k = 0; k <= npan; ++k) b[k] = lo + (hi - lo) * double(k) / npan;
    return quadrature::integrate_scalar(b, f);
  };
  const double t1 = window(q.x_max, 2.0 * q.x_max);
  const double t2 = window(2.0 * q.x_max, 4.0 * q.x_max);
  out.tail_ratio = t2 / std::max(t1, 1e-300);
  return out;
}

ValidationReport validate_spec(const OfbmSpec& spec, const QuadratureConfig& q) {
  ValidationReport report;
  auto add = [&](std::string name, bool pass, std::string detail) {
    report.checks.push_back({std::move(name), pass, std::move(detail)});
  };

  try {
    require_valid_shapes(spec);
    std::ostringstream ss;
    ss << "d = " << spec.d << ", all parameters finite";
    add("shapes", true, ss.str());
  } catch (const Error& e) {
    add("shapes", false, e.what());
    return report;
  }

  bool exponent_ok = false;
  linalg::SpectralBounds bounds;
  try {
    bounds = linalg::spectral_real_bounds(spec.dexp);
    exponent_ok = bounds.lambda_min > 0.0 && bounds.lambda_max < 1.0;
    std::ostringstream ss;
    ss << "eigenvalue real parts in [" << bounds.lambda_min << ", " << bounds.lambda_max
       << "], required to lie in (0, 1)";
    add("exponent_bounds", exponent_ok, ss.str());
  } catch (const Error& e) {
    add("exponent_bounds", false, e.what());
  }

  if (!exponent_ok) {
    add("properness", false, "skipped: exponent bounds invalid");
    add("square_integrability", false, "skipped: exponent bounds invalid");
  } else {
    try {
      Matrix r = spectral_covariance(spec, 1.0, 1.0, q);
      auto chol = linalg::cholesky_psd(r, 0.0);
      double min_pivot = chol.l(0, 0) * chol.l(0, 0);
      for (int i = 1; i < spec.d; ++i)
        min_pivot = std::min(min_pivot, chol.l(i, i) * chol.l(i, i));
      const double threshold = 1e-10 * r.trace() / spec.d;
      std::ostringstream ss;
      ss << "time-1 covariance min Cholesky pivot " << min_pivot << " vs threshold " << threshold;
      add("properness", min_pivot > threshold, ss.str());
    } catch (const Error& e) {
      add("properness", false, std::string("time-1 covariance not positive definite: ") + e.what());
    }

    try {
      auto si = square_integrability_check(spec, 1.0, q);
      // Tail windows shrink like x^{-2*lambda_min}; doubling the window must cut
      // the mass by at least 2^(2*lambda_min - 0.2) (slack for oscillation).
      const double required = std::pow(2.0, -(2.0 * bounds.lambda_min - 0.2));
      const bool converged =
          std::isfinite(si.value) && si.refine_delta <= std::max(1e-6 * si.value, 1e-12);
      const bool decays = si.tail_ratio <= required;
      std::ostringstream ss;
      ss << "integral " << si.value << " (refine delta " << si.refine_delta << "), tail ratio "
         << si.tail_ratio << " vs bound " << required;
      add("square_integrability", converged && decays, ss.str());
    } catch (const Error& e) {
      add("square_integrability", false, e.what());
    }
  }

  add("time_reversible", true,
      is_time_reversible_params(spec) ? "A1 A2^T = A2 A1^T: reversible parameters"
                                      : "A1 A2^T != A2 A1^T: not time-reversible");
  return report;
}

}  // namespace ofbm::model
