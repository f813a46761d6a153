#include "ofbm/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace ofbm::linalg {

namespace {

double one_norm(const Matrix& m) {
  double best = 0.0;
  for (int j = 0; j < m.cols(); ++j) {
    double s = 0.0;
    for (int i = 0; i < m.rows(); ++i) s += std::fabs(m(i, j));
    best = std::max(best, s);
  }
  return best;
}

void require_square_finite(const Matrix& m, const char* who) {
  if (!m.square() || m.rows() == 0)
    throw InvalidInputError(std::string(who) + ": square nonempty matrix required");
  if (!m.all_finite()) throw InvalidInputError(std::string(who) + ": non-finite entries");
}

}  // namespace

Matrix detail::lu_solve(Matrix a, const Matrix& b) {
  int n = a.rows();
  if (!a.square() || b.rows() != n) throw InvalidInputError("lu_solve: shape mismatch");
  Matrix x = b;
  std::vector<int> piv(n);
  for (int i = 0; i < n; ++i) piv[i] = i;
  for (int k = 0; k < n; ++k) {
    int p = k;
    for (int i = k + 1; i < n; ++i)
      if (std::fabs(a(i, k)) > std::fabs(a(p, k))) p = i;
    if (a(p, k) == 0.0) throw NumericalFailureError("lu_solve: singular matrix");
    if (p != k) {
      for (int j = 0; j < n; ++j) std::swap(a(k, j), a(p, j));
      for (int j = 0; j < x.cols(); ++j) std::swap(x(k, j), x(p, j));
    }
    for (int i = k + 1; i < n; ++i) {
      double f = a(i, k) / a(k, k);
      a(i, k) = f;
      for (int j = k + 1; j < n; ++j) a(i, j) -= f * a(k, j);
      for (int j = 0; j < x.cols(); ++j) x(i, j) -= f * x(k, j);
    }
  }
  for (int k = n - 1; k >= 0; --k)
    for (int j = 0; j < x.cols(); ++j) {
      double s = x(k, j);
      for (int i = k + 1; i < n; ++i) s -= a(k, i) * x(i, j);
      x(k, j) = s / a(k, k);
    }
  return x;
}

Matrix mat_exp(const Matrix& m) {
  require_square_finite(m, "mat_exp");
  const int n = m.rows();

  // Pade-13 coefficients and the standard order-13 threshold.
  static const double b[14] = {64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
                               1187353796428800.0,  129060195264000.0,   10559470521600.0,
                               670442572800.0,      33522128640.0,       1323241920.0,
                               40840800.0,          960960.0,            16380.0,
                               182.0,               1.0};
  const double theta13 = 5.371920351148152;

  double nrm = one_norm(m);
  int s = 0;
  if (nrm > theta13) s = int(std::ceil(std::log2(nrm / theta13)));
  Matrix a = m * std::pow(2.0, -s);

  Matrix id = Matrix::identity(n);
  Matrix a2 = a * a;
  Matrix a4 = a2 * a2;
  Matrix a6 = a2 * a4;

  Matrix u_inner = a6 * b[13] + a4 * b[11] + a2 * b[9];
  Matrix u = a * (a6 * u_inner + a6 * b[7] + a4 * b[5] + a2 * b[3] + id * b[1]);
  Matrix v_inner = a6 * b[12] + a4 * b[10] + a2 * b[8];
  Matrix v = a6 * v_inner + a6 * b[6] + a4 * b[4] + a2 * b[2] + id * b[0];

  Matrix r = detail::lu_solve(v - u, v + u);
  for (int k = 0; k < s; ++k) r = r * r;
  if (!r.all_finite()) throw NumericalFailureError("mat_exp: overflow in result");
  return r;
}

Matrix mat_power(double c, const Matrix& d) {
  require_square_finite(d, "mat_power");
  if (!(c > 0.0) || !std::isfinite(c)) throw DomainError("mat_power: base must be positive finite");
  if (c == 1.0) return Matrix::identity(d.rows());
  return mat_exp(d * std::log(c));
}

double operator_norm(const Matrix& m) {
  if (m.rows() == 0 || m.cols() == 0) throw InvalidInputError("operator_norm: empty matrix");
  if (!m.all_finite()) throw InvalidInputError("operator_norm: non-finite entries");
  const int n = m.cols();

  // B = M^T M, symmetric PSD; power iteration converges to its top eigenvalue.
  Matrix b(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      for (int k = 0; k < m.rows(); ++k) s += m(k, i) * m(k, j);
      b(i, j) = s;
    }
  double bmax = b.max_abs();
  if (bmax == 0.0) return 0.0;

  std::vector<double> v(n, 1.0 / std::sqrt(double(n)));
  double lam = 0.0;
  for (int it = 0; it < 10000; ++it) {
    std::vector<double> w = matvec(b, v);
    double wn = 0.0;
    for (double x : w) wn += x * x;
    wn = std::sqrt(wn);
    if (wn <= bmax * 1e-306) {
      // all-ones start landed in the kernel; restart from the heaviest column
      int jmax = 0;
      for (int j = 1; j < n; ++j)
        if (b(j, j) > b(jmax, jmax)) jmax = j;
      std::fill(v.begin(), v.end(), 0.0);
      v[jmax] = 1.0;
      continue;
    }
    double lam_new = 0.0;  // Rayleigh quotient with the normalized previous vector
    for (int i = 0; i < n; ++i) lam_new += v[i] * w[i];
    for (int i = 0; i < n; ++i) v[i] = w[i] / wn;
    if (it > 0 && std::fabs(lam_new - lam) <= 1e-12 * std::fabs(lam_new)) {
      lam = lam_new;
      break;
    }
    lam = lam_new;
  }
  return std::sqrt(std::max(lam, 0.0));
}

namespace {

// Householder reduction to upper Hessenberg form, in place.
void hessenberg(Matrix& h) {
  int n = h.rows();
  for (int k = 0; k < n - 2; ++k) {
    double scale = 0.0;
    for (int i = k + 1; i < n; ++i) scale += std::fabs(h(i, k));
    if (scale == 0.0) continue;
    double alpha = 0.0;
    std::vector<double> u(n, 0.0);
    for (int i = k + 1; i < n; ++i) {
      u[i] = h(i, k) / scale;
      alpha += u[i] * u[i];
    }
    alpha = std::sqrt(alpha);
    if (u[k + 1] > 0) alpha = -alpha;
    double beta = alpha * (alpha - u[k + 1]);
    if (beta == 0.0) continue;
    u[k + 1] -= alpha;
    // H <- P H P with P = I - u u^T / beta
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      for (int i = k + 1; i < n; ++i) s += u[i] * h(i, j);
      s /= beta;
      for (int i = k + 1; i < n; ++i) h(i, j) -= s * u[i];
    }
    for (int i = 0; i < n; ++i) {
      double s = 0.0;
      for (int j = k + 1; j < n; ++j) s += h(i, j) * u[j];
      s /= beta;
      for (int j = k + 1; j < n; ++j) h(i, j) -= s * u[j];
    }
    h(k + 1, k) = scale * alpha;
    for (int i = k + 2; i < n; ++i) h(i, k) = 0.0;
  }
}

// One implicit Francis double-shift sweep on the active block h[lo..hi].
void francis_sweep(Matrix& h, int lo, int hi, bool exceptional) {
  int n = h.rows();
  double s, p;
  if (exceptional) {
    // ad hoc shift built from subdiagonal magnitudes, breaks cycling
    double w = std::fabs(h(hi, hi - 1)) + std::fabs(h(hi - 1, hi - 2 >= lo ? hi - 2 : lo));
    s = 1.5 * w;
    p = w * w;
  } else {
    s = h(hi - 1, hi - 1) + h(hi, hi);
    p = h(hi - 1, hi - 1) * h(hi, hi) - h(hi - 1, hi) * h(hi, hi - 1);
  }
  // first column of H^2 - s H + p I restricted to rows lo..lo+2
  double x = h(lo, lo) * h(lo, lo) + h(lo, lo + 1) * h(lo + 1, lo) - s * h(lo, lo) + p;
  double y = h(lo + 1, lo) * (h(lo, lo) + h(lo + 1, lo + 1) - s);
  double z = (lo + 2 <= hi) ? h(lo + 2, lo + 1) * h(lo + 1, lo) : 0.0;

  for (int k = lo; k <= hi - 1; ++k) {
    // Householder on (x,y,z) -> e1; at k = hi-1 it degenerates to 2 elements
    double alpha = std::sqrt(x * x + y * y + z * z);
    if (alpha == 0.0) {
      x = h(k + 1, k);
      y = (k + 2 <= hi) ? h(k + 2, k) : 0.0;
      z = (k + 3 <= hi) ? h(k + 3, k) : 0.0;
      continue;
    }
    if (x > 0) alpha = -alpha;
    double v0 = x - alpha, v1 = y, v2 = z;
    double beta = -alpha * v0;
    if (beta == 0.0) beta = 1.0;

    int r0 = k, r1 = k + 1, r2 = (k + 2 <= hi) ? k + 2 : -1;
    int jstart = (k > lo) ? k - 1 : lo;
    for (int j = jstart; j < n; ++j) {
      double t = v0 * h(r0, j) + v1 * h(r1, j) + (r2 >= 0 ? v2 * h(r2, j) : 0.0);
      t /= beta;
      h(r0, j) -= t * v0;
      h(r1, j) -= t * v1;
      if (r2 >= 0) h(r2, j) -= t * v2;
    }
    int iend = std::min(hi, k + 3);
    for (int i = 0; i <= iend; ++i) {
      double t = v0 * h(i, r0) + v1 * h(i, r1) + (r2 >= 0 ? v2 * h(i, r2) : 0.0);
      t /= beta;
      h(i, r0) -= t * v0;
      h(i, r1) -= t * v1;
      if (r2 >= 0) h(i, r2) -= t * v2;
    }
    x = h(k + 1, k);
    y = (k + 2 <= hi) ? h(k + 2, k) : 0.0;
    z = (k + 3 <= hi) ? h(k + 3, k) : 0.0;
  }
}

}  // namespace

SpectralBounds spectral_real_bounds(const Matrix& m) {
  require_square_finite(m, "spectral_real_bounds");
  const int n = m.rows();
  if (n == 1) return {m(0, 0), m(0, 0)};

  Matrix h = m;
  hessenberg(h);

  std::vector<double> re;
  re.reserve(n);
  const double eps = 2.2204460492503131e-16;
  int hi = n - 1;
  int iter_since_deflate = 0;
  int total_iters = 0;
  const int max_total = 40 * n;

  auto neglect = [&](int i) {
    // subdiagonal negligible relative to its neighbors
    double tol = eps * (std::fabs(h(i - 1, i - 1)) + std::fabs(h(i, i)));
    if (tol == 0.0) tol = eps * h.max_abs();
    return std::fabs(h(i, i - 1)) <= tol;
  };

  while (hi >= 0) {
    // find the active block [lo..hi]
    int lo = hi;
    while (lo > 0 && !neglect(lo)) --lo;
    if (lo > 0) h(lo, lo - 1) = 0.0;

    if (lo == hi) {
      re.push_back(h(hi, hi));
      hi -= 1;
      iter_since_deflate = 0;
      continue;
    }
    if (lo == hi - 1) {
      double a = h(hi - 1, hi - 1), bq = h(hi - 1, hi), c = h(hi, hi - 1), d = h(hi, hi);
      double tr = a + d, disc = (a - d) * (a - d) + 4.0 * bq * c;
      if (disc >= 0.0) {
        double sq = std::sqrt(disc);
        re.push_back(0.5 * (tr + sq));
        re.push_back(0.5 * (tr - sq));
      } else {
        re.push_back(0.5 * tr);  // complex pair, equal real parts
        re.push_back(0.5 * tr);
      }
      hi -= 2;
      iter_since_deflate = 0;
      continue;
    }

    if (++total_iters > max_total)
      throw NumericalFailureError("spectral_real_bounds: QR iteration did not converge");
    bool exceptional = (++iter_since_deflate % 12 == 0);
    francis_sweep(h, lo, hi, exceptional);
  }

  SpectralBounds b{re[0], re[0]};
  for (double v : re) {
    b.lambda_min = std::min(b.lambda_min, v);
    b.lambda_max = std::max(b.lambda_max, v);
  }
  return b;
}

CholeskyResult cholesky_psd(const Matrix& m, double jitter_max) {
  require_square_finite(m, "cholesky_psd");
  if (jitter_max < 0.0 || !std::isfinite(jitter_max))
    throw InvalidInputError("cholesky_psd: jitter_max must be finite and >= 0");
  const int n = m.rows();
  double scale = std::max(1.0, m.max_abs());
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (std::fabs(m(i, j) - m(j, i)) > 1e-10 * scale)
        throw InvalidInputError("cholesky_psd: matrix not symmetric within 1e-10");

  auto attempt = [&](double jit, Matrix& l) {
    l = Matrix(n, n);
    for (int j = 0; j < n; ++j) {
      double diag = m(j, j) + jit;
      for (int k = 0; k < j; ++k) diag -= l(j, k) * l(j, k);
      if (!(diag > 0.0) || !std::isfinite(diag)) return false;
      double lj = std::sqrt(diag);
      l(j, j) = lj;
      for (int i = j + 1; i < n; ++i) {
        double s = m(i, j) + (i == j ? jit : 0.0);
        for (int k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
        l(i, j) = s / lj;
      }
    }
    return true;
  };

  double jit = 0.0;
  while (true) {
    Matrix l;
    if (attempt(jit, l)) {
      // reconstruction check
      double err = 0.0;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j <= i; ++j) {
          double s = 0.0;
          for (int k = 0; k <= j; ++k) s += l(i, k) * l(j, k);
          double target = 0.5 * (m(i, j) + m(j, i)) + (i == j ? jit : 0.0);
          err = std::max(err, std::fabs(s - target));
        }
      if (err <= 1e-8 * scale) return {l, jit};
    }
    if (jit == 0.0)
      jit = 1e-12;
    else
      jit *= 100.0;
    if (jit > jitter_max)
      throw NotPositiveSemidefiniteError("cholesky_psd: not positive semidefinite within jitter ladder");
  }
}

Matrix detail::lyapunov(const Matrix& d, const Matrix& s) {
  require_square_finite(d, "lyapunov");
  int n = d.rows();
  if (s.rows() != n || s.cols() != n) throw InvalidInputError("lyapunov: shape mismatch");
  // (I (x) D + D (x) I) vec(T) = vec(S), vec stacking columns: vec(X)_{i + n j}
  int nn = n * n;
  Matrix k(nn, nn);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      int row = i + n * j;
      for (int p = 0; p < n; ++p) {
        k(row, p + n * j) += d(i, p);  // (I (x) D): D T
        k(row, i + n * p) += d(j, p);  // (D (x) I): T D^T
      }
    }
  Matrix rhs(nn, 1);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) rhs(i + n * j, 0) = s(i, j);
  Matrix sol = lu_solve(k, rhs);
  Matrix t(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) t(i, j) = sol(i + n * j, 0);
  return t;
}

}  // namespace ofbm::linalg
