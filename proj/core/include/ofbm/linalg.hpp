#pragma once

#include "ofbm/matrix.hpp"

namespace ofbm::linalg {

// Real parts of the eigenvalue spectrum of a square matrix.
struct SpectralBounds {
  double lambda_min = 0.0;  // smallest real part
  double lambda_max = 0.0;  // largest real part
};

struct CholeskyResult {
  Matrix l;             // lower triangular factor of m + jitter*I
  double jitter = 0.0;  // diagonal jitter actually used (0 if none needed)
};

// exp(M) by scaling-and-squaring with a fixed-order (13) Pade kernel.
// Relative accuracy ~1e-12 in operator norm for moderate ||M||; exp(0) = I exactly.
Matrix mat_exp(const Matrix& m);

// c^D = exp(ln(c) * D) for c > 0. Throws DomainError for c <= 0 or non-finite c.
// mat_power(1, D) = I exactly.
Matrix mat_power(double c, const Matrix& d);

// Largest singular value via power iteration on M^T M (deterministic all-ones
// start, relative stagnation threshold 1e-12, at most 10000 iterations).
double operator_norm(const Matrix& m);

// Eigenvalue real-part bounds via Hessenberg reduction and Francis double-shift
// QR; complex pairs are read off the 2x2 diagonal blocks of the quasi-triangular
// form. Throws NumericalFailureError if the iteration does not deflate.
SpectralBounds spectral_real_bounds(const Matrix& m);

// Cholesky factorization of a symmetric matrix, retried along a geometric jitter
// ladder (1e-12 * 100^k, k = 0,1,...) up to jitter_max when pivots fail. The
// returned factor satisfies ||L L^T - (M + jitter I)||_max <= 1e-8 * ||M||_max.
CholeskyResult cholesky_psd(const Matrix& m, double jitter_max);

namespace detail {

// Solve A X = B by LU with partial pivoting (A square, small).
Matrix lu_solve(Matrix a, const Matrix& b);

// Solve D T + T D^T = S for T via the Kronecker system; requires every
// eigenvalue-pair sum of D to be nonzero (true when all real parts > 0).
// For symmetric S this is int_0^inf exp(-yD) S exp(-yD^T) dy when D is stable^-.
Matrix lyapunov(const Matrix& d, const Matrix& s);

}  // namespace detail

}  // namespace ofbm::linalg
