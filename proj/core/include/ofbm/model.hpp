#pragma once

#include <string>
#include <utility>
#include <vector>

#include "ofbm/linalg.hpp"
#include "ofbm/matrix.hpp"
#include "ofbm/quadrature.hpp"

namespace ofbm::model {

// Parameter set of an operator-self-similar Gaussian model: exponent D (eigenvalue
// real parts must lie in (0,1) for a valid model) and spectral coefficients A1, A2.
struct OfbmSpec {
  int d = 0;
  Matrix dexp;  // exponent D
  Matrix a1;
  Matrix a2;
  std::string label;
};

// Shape/finiteness checks only; eigenvalue bounds are validate_spec's job so that
// invalid parameter sets can still be constructed and reported on.
OfbmSpec make_spec(const Matrix& dexp, const Matrix& a1, const Matrix& a2,
                   std::string label = "");

struct ValidationCheck {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct ValidationReport {
  std::vector<ValidationCheck> checks;
  bool all_pass() const {
    for (const auto& c : checks)
      if (!c.pass) return false;
    return true;
  }
};

// Exponent bounds, properness of the time-1 covariance, square integrability of
// the kernels (with tail-decay rate), plus an informational reversibility entry.
ValidationReport validate_spec(const OfbmSpec& spec, const QuadratureConfig& q);

// Spectral-domain kernels. In the form actually integrated,
//   G1(x,t) = sin(tx) x^{-(D+I/2)} A1 - (1-cos(tx)) x^{-(D+I/2)} A2,
//   G2(x,t) = sin(tx) x^{-(D+I/2)} A2 + (1-cos(tx)) x^{-(D+I/2)} A1,
// with 1-cos evaluated as 2 sin^2(z/2) (the naive form loses everything for
// small z against the huge entries of x^{-(D+I/2)}).
Matrix kernel_g1(const OfbmSpec& spec, double x, double t);
Matrix kernel_g2(const OfbmSpec& spec, double x, double t);

// Column `column` of G1(x,t) and G2(x,t) for one frequency x and many times,
// written into flat [time][component] arrays. Used by samplers that integrate
// one source column at a time; shares the single x^{-(D+I/2)} evaluation.
void kernel_columns(const OfbmSpec& spec, double x, int column, const std::vector<double>& times,
                    std::vector<double>& g1_out, std::vector<double>& g2_out);

// R(t,s) = int_0^inf [G1(x,t) G1(x,s)^T + G2(x,t) G2(x,s)^T] dx via graded-panel
// GL16 quadrature on (0, x_max] plus the analytic non-oscillatory tail
//   c0(t,s) * x_max * x_max^{-(D+I/2)} T x_max^{-(D+I/2)}^T,
// where T solves D T + T D^T = A1 A1^T + A2 A2^T and
// c0 = [t!=0] + [s!=0] - [t!=s]. Accuracy is checked by panel refinement;
// non-convergence raises NumericalFailureError.
Matrix spectral_covariance(const OfbmSpec& spec, double t, double s,
                           const QuadratureConfig& q);

// All grid pairs with quadrature nodes shared across pairs; out[i][j] for times
// (grid[i], grid[j]), with out[j][i] the exact transpose of out[i][j].
std::vector<std::vector<Matrix>> spectral_covariance_grid(const OfbmSpec& spec,
                                                          const std::vector<double>& grid,
                                                          const QuadratureConfig& q);

// Gamma = int_0^inf [(1-cos x)^2 + sin^2 x] x^{-(D+I/2)} x^{-(D+I/2)^T} dx,
// symmetric positive definite; same tail treatment with S = I and coefficient 2.
Matrix gamma_mason_xiao(const Matrix& dexp, const QuadratureConfig& q);

// Time-reversible closed-form covariance
//   R(t,s) = 1/2 [ |t|^D G |t|^{D^T} + |s|^D G |s|^{D^T} - |t-s|^D G |t-s|^{D^T} ],
// with 0^D G 0^{D^T} taken as 0.
Matrix reversible_covariance(double t, double s, const Matrix& dexp, const Matrix& gamma);

// Whether ||A2 A1^T - A1 A2^T|| <= tol (the time-reversibility condition).
bool is_time_reversible_params(const OfbmSpec& spec, double tol = 1e-12);

// Square-integrability diagnostic at time t: value of int_0^xmax ||G1||_F^2+||G2||_F^2,
// its panel-refinement delta, and the decay ratio of the tail integral when the
// window [x_max, 2 x_max] is moved to [2 x_max, 4 x_max].
struct SquareIntegrability {
  double value = 0.0;
  double refine_delta = 0.0;
  double tail_ratio = 0.0;  // tail([2X,4X]) / tail([X,2X])
};
SquareIntegrability square_integrability_check(const OfbmSpec& spec, double t,
                                               const QuadratureConfig& q);

}  // namespace ofbm::model
