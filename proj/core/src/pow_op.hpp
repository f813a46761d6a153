#pragma once

// Internal helpers shared by the covariance and sampler translation units.
// Not installed; include only from core/src.

#include <cmath>
#include <vector>

#include "ofbm/linalg.hpp"
#include "ofbm/matrix.hpp"

namespace ofbm::model::detail {

// x^{-(D + I/2)} evaluator with a fast path for diagonal D (the common case);
// otherwise exp(ln(x) * M) with M = -(D + I/2).
struct PowOp {
  bool diagonal = true;
  Matrix mhalf;
  std::vector<double> dpow;

  explicit PowOp(const Matrix& dexp) : mhalf(dexp.rows(), dexp.cols()) {
    const int d = dexp.rows();
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        mhalf(i, j) = -dexp(i, j) - (i == j ? 0.5 : 0.0);
        if (i != j && dexp(i, j) != 0.0) diagonal = false;
      }
    if (diagonal)
      for (int i = 0; i < d; ++i) dpow.push_back(mhalf(i, i));
  }

  void eval(double x, Matrix& out) const {
    const int d = mhalf.rows();
    if (diagonal) {
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) out(i, j) = 0.0;
      for (int i = 0; i < d; ++i) out(i, i) = std::pow(x, dpow[i]);
      return;
    }
    Matrix m = mhalf;
    m *= std::log(x);
    out = linalg::mat_exp(m);
  }
};

// g1[v] = sin(t_v x) P A1 - (1-cos(t_v x)) P A2 and
// g2[v] = sin(t_v x) P A2 + (1-cos(t_v x)) P A1 with P = x^{-(D+I/2)};
// 1-cos is evaluated as 2 sin^2(z/2) (the naive form loses everything for tiny z
// against the huge entries of P). p/pa1/pa2 are caller-owned scratch; g1/g2 must
// be presized to times.size() matrices of shape d x d.
inline void fill_kernel_matrices(const PowOp& pw, const Matrix& a1, const Matrix& a2, double x,
                                 const std::vector<double>& times, Matrix& p, Matrix& pa1,
                                 Matrix& pa2, std::vector<Matrix>& g1, std::vector<Matrix>& g2) {
  pw.eval(x, p);
  pa1 = p * a1;
  pa2 = p * a2;
  const int d = p.rows();
  for (size_t v = 0; v < times.size(); ++v) {
    const double tx = times[v] * x;
    const double st = std::sin(tx);
    const double sh = std::sin(0.5 * tx);
    const double omc = 2.0 * sh * sh;
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        g1[v](i, j) = st * pa1(i, j) - omc * pa2(i, j);
        g2[v](i, j) = st * pa2(i, j) + omc * pa1(i, j);
      }
  }
}

}  // namespace ofbm::model::detail
