#include "ofbm/quadrature.hpp"

#include <algorithm>
#include <cmath>

namespace ofbm::quadrature {

namespace {

struct Gl16Table {
  std::array<double, 16> nodes;
  std::array<double, 16> weights;
  // Legendre P_k(node_i) for k = 0..16, used for expansion coefficients.
  double p[16][17];

  Gl16Table() {
    // Newton iteration on P_16 (classic gauleg construction).
    const int n = 16;
    for (int i = 0; i < n / 2; ++i) {
      double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
      double pp = 0.0;
      for (int it = 0; it < 100; ++it) {
        double p0 = 1.0, p1 = 0.0;
        for (int k = 0; k < n; ++k) {
          double p2 = p1;
          p1 = p0;
          p0 = ((2.0 * k + 1.0) * x * p1 - k * p2) / (k + 1.0);
        }
        pp = n * (x * p0 - p1) / (x * x - 1.0);
        double dx = p0 / pp;
        x -= dx;
        if (std::fabs(dx) < 1e-15) break;
      }
      nodes[i] = -x;
      nodes[n - 1 - i] = x;
      double w = 2.0 / ((1.0 - x * x) * pp * pp);
      weights[i] = w;
      weights[n - 1 - i] = w;
    }
    for (int i = 0; i < n; ++i) {
      double xi = nodes[i];
      p[i][0] = 1.0;
      p[i][1] = xi;
      for (int k = 1; k < 16; ++k)
        p[i][k + 1] = ((2.0 * k + 1.0) * xi * p[i][k] - k * p[i][k - 1]) / (k + 1.0);
    }
  }
};

const Gl16Table& table() {
  static const Gl16Table t;
  return t;
}

}  // namespace

const std::array<double, 16>& gl16_nodes() { return table().nodes; }
const std::array<double, 16>& gl16_weights() { return table().weights; }

std::vector<double> build_mesh(double width, double x_max, int panels_near_zero,
                               double grading_ratio, double singularity_power,
                               double stub_tol) {
  if (!(width > 0.0) || !(x_max > 0.0)) throw InvalidInputError("build_mesh: bad width/x_max");
  double w = std::min(width, x_max);
  double r = grading_ratio;

  // depth so that stub ~ bottom^{p+1}/(p+1) <= stub_tol
  int depth = panels_near_zero;
  double p1 = singularity_power + 1.0;
  if (p1 > 0.0 && stub_tol > 0.0) {
    double bottom_target = std::pow(stub_tol * p1, 1.0 / p1);
    if (bottom_target < w) {
      int need = int(std::ceil(std::log(bottom_target / w) / std::log(r)));
      depth = std::max(depth, need);
    }
  }
  int depth_cap = int(std::floor(std::log(1e-140 / w) / std::log(r)));
  depth = std::min(depth, std::max(panels_near_zero, depth_cap));
  depth = std::min(depth, 2000);

  std::vector<double> breaks;
  breaks.reserve(size_t(depth) + size_t(std::ceil(x_max / w)) + 2);
  for (int k = depth; k >= 1; --k) breaks.push_back(w * std::pow(r, k));
  double x = w;
  while (x < x_max - 1e-12 * x_max) {
    breaks.push_back(x);
    x += w;
  }
  breaks.push_back(x_max);
  return breaks;
}

std::vector<double> halve_mesh(const std::vector<double>& breaks) {
  std::vector<double> out;
  out.reserve(breaks.size() * 2);
  for (size_t i = 0; i + 1 < breaks.size(); ++i) {
    out.push_back(breaks[i]);
    out.push_back(0.5 * (breaks[i] + breaks[i + 1]));
  }
  out.push_back(breaks.back());
  return out;
}

double integrate_scalar(const std::vector<double>& breaks,
                        const std::function<double(double)>& f) {
  const auto& xs = gl16_nodes();
  const auto& ws = gl16_weights();
  double total = 0.0;
  for (size_t p = 0; p + 1 < breaks.size(); ++p) {
    double a = breaks[p], b = breaks[p + 1];
    double c = 0.5 * (a + b), h = 0.5 * (b - a);
    double s = 0.0;
    for (int i = 0; i < 16; ++i) s += ws[i] * f(c + h * xs[i]);
    total += h * s;
  }
  return total;
}

PanelPrimitive::PanelPrimitive(std::vector<double> breaks, int n_values,
                               const std::function<void(double, double*)>& fill_values)
    : nv_(n_values), breaks_(std::move(breaks)) {
  if (breaks_.size() < 2 || nv_ < 1) throw InvalidInputError("PanelPrimitive: bad arguments");
  const auto& t = table();
  size_t np = breaks_.size() - 1;
  coeffs_.assign(np * size_t(nv_) * 16, 0.0);
  prefix_.assign((np + 1) * size_t(nv_), 0.0);

  std::vector<double> vals(size_t(nv_) * 16);
  for (size_t p = 0; p < np; ++p) {
    double a = breaks_[p], b = breaks_[p + 1];
    double c = 0.5 * (a + b), h = 0.5 * (b - a);
    for (int i = 0; i < 16; ++i) fill_values(c + h * t.nodes[i], &vals[size_t(i) * nv_]);
    double* cf = &coeffs_[p * size_t(nv_) * 16];
    for (int v = 0; v < nv_; ++v) {
      for (int k = 0; k < 16; ++k) {
        double s = 0.0;
        for (int i = 0; i < 16; ++i) s += t.weights[i] * t.p[i][k] * vals[size_t(i) * nv_ + v];
        cf[size_t(v) * 16 + k] = 0.5 * (2.0 * k + 1.0) * s;
      }
      // prefix[p+1] = prefix[p] + h * c_0 * 2 ... the full-panel integral is h*(b-a)/2 * 2*c0
      prefix_[(p + 1) * size_t(nv_) + v] =
          prefix_[p * size_t(nv_) + v] + (b - a) * cf[size_t(v) * 16 + 0];
    }
  }
}

void PanelPrimitive::eval(double tau, int* panel_hint, double* out) const {
  size_t np = breaks_.size() - 1;
  if (tau <= breaks_.front()) {
    for (int v = 0; v < nv_; ++v) out[v] = 0.0;
    return;
  }
  if (tau >= breaks_.back()) {
    total(out);
    return;
  }
  size_t p;
  if (panel_hint && *panel_hint >= 0 && size_t(*panel_hint) < np &&
      tau >= breaks_[*panel_hint] && tau <= breaks_[*panel_hint + 1]) {
    p = size_t(*panel_hint);
  } else {
    p = size_t(std::upper_bound(breaks_.begin(), breaks_.end(), tau) - breaks_.begin()) - 1;
    if (p >= np) p = np - 1;
  }
  while (p + 1 < np && tau > breaks_[p + 1]) ++p;
  if (panel_hint) *panel_hint = int(p);

  double a = breaks_[p], b = breaks_[p + 1];
  double xi = 2.0 * (tau - a) / (b - a) - 1.0;

  // integrated Legendre basis: q_0 = xi+1, q_k = (P_{k+1}-P_{k-1})/(2k+1)
  double pk[17];
  pk[0] = 1.0;
  pk[1] = xi;
  for (int k = 1; k < 16; ++k)
    pk[k + 1] = ((2.0 * k + 1.0) * xi * pk[k] - k * pk[k - 1]) / (k + 1.0);
  double q[16];
  q[0] = xi + 1.0;
  for (int k = 1; k < 16; ++k) q[k] = (pk[k + 1] - pk[k - 1]) / (2.0 * k + 1.0);

  double half_h = 0.5 * (b - a);
  const double* cf = &coeffs_[p * size_t(nv_) * 16];
  for (int v = 0; v < nv_; ++v) {
    const double* c = cf + size_t(v) * 16;
    double s = 0.0;
    for (int k = 0; k < 16; ++k) s += c[k] * q[k];
    out[v] = prefix_[p * size_t(nv_) + v] + half_h * s;
  }
}

void PanelPrimitive::total(double* out) const {
  size_t np = breaks_.size() - 1;
  for (int v = 0; v < nv_; ++v) out[v] = prefix_[np * size_t(nv_) + v];
}

}  // namespace ofbm::quadrature
