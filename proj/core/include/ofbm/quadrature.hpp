#pragma once

#include <array>
#include <functional>
#include <vector>

#include "ofbm/error.hpp"

namespace ofbm {

// Spectral-integral controls. x_max truncates the frequency domain, rel_tol is the
// target relative accuracy (estimated by panel refinement), panels_near_zero and
// grading_ratio shape the geometric mesh that resolves the x -> 0 singularity.
struct QuadratureConfig {
  double x_max = 1e4;
  double rel_tol = 1e-8;
  int panels_near_zero = 40;
  double grading_ratio = 0.5;

  void validate() const {
    if (!(x_max >= 1.0)) throw InvalidInputError("QuadratureConfig: x_max must be >= 1");
    if (!(rel_tol >= 1e-12 && rel_tol <= 1e-2))
      throw InvalidInputError("QuadratureConfig: rel_tol must lie in [1e-12, 1e-2]");
    if (panels_near_zero < 1) throw InvalidInputError("QuadratureConfig: panels_near_zero < 1");
    if (!(grading_ratio > 0.0 && grading_ratio < 1.0))
      throw InvalidInputError("QuadratureConfig: grading_ratio must lie in (0,1)");
  }
};

namespace quadrature {

// 16-point Gauss-Legendre rule on [-1, 1].
const std::array<double, 16>& gl16_nodes();
const std::array<double, 16>& gl16_weights();

// Panel breakpoints on (0, x_max]: geometric grading with the given ratio below
// `width`, then uniform panels of `width`. The grading depth is at least
// panels_near_zero and is extended until the dropped stub [0, breaks[0]] of an
// integrand ~ x^singularity_power contributes less than stub_tol (bounded so the
// bottom breakpoint stays above ~1e-140).
std::vector<double> build_mesh(double width, double x_max, int panels_near_zero,
                               double grading_ratio, double singularity_power,
                               double stub_tol);

// Mesh with every panel split in two (for refinement-based error estimates).
std::vector<double> halve_mesh(const std::vector<double>& breaks);

// GL16 integral of a scalar function over the mesh.
double integrate_scalar(const std::vector<double>& breaks,
                        const std::function<double(double)>& f);

// Piecewise-Legendre representation of the running integral Phi(x) = int_a0^x f,
// where f is a vector-valued function sampled at the GL16 nodes of each panel.
// Phi is exact for the degree-15 interpolant of f per panel (spectrally accurate
// for smooth f) and additive across panels by construction. Phi(x) = 0 for
// x <= breaks.front().
class PanelPrimitive {
 public:
  PanelPrimitive(std::vector<double> breaks, int n_values,
                 const std::function<void(double, double*)>& fill_values);

  int n_values() const { return nv_; }
  const std::vector<double>& breaks() const { return breaks_; }

  // out[v] = Phi_v(tau). `panel_hint` caches the last panel index; pass the same
  // variable across monotone tau sequences to skip the binary search.
  void eval(double tau, int* panel_hint, double* out) const;

  // out[v] = Phi_v(breaks.back()), the full integral.
  void total(double* out) const;

 private:
  int nv_;
  std::vector<double> breaks_;
  std::vector<double> coeffs_;  // [panel][value][16]
  std::vector<double> prefix_;  // [panel+1][value]
};

}  // namespace quadrature
}  // namespace ofbm
