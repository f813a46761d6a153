#pragma once

#include <cstddef>
#include <initializer_list>
#include <vector>

#include "ofbm/error.hpp"

namespace ofbm {

// Small dense row-major matrix of doubles. Dimensions in this library are tiny
// (operators are d x d with d <= 16, grid covariances a few hundred square), so
// everything is plain triple loops; no blocking, no expression templates.
class Matrix {
 public:
  Matrix() : rows_(0), cols_(0) {}
  Matrix(int rows, int cols) : rows_(rows), cols_(cols), data_(checked_extent(rows, cols), 0.0) {}
  Matrix(int rows, int cols, std::initializer_list<double> vals) : Matrix(rows, cols) {
    if (vals.size() != data_.size()) throw InvalidInputError("Matrix: initializer size mismatch");
    size_t k = 0;
    for (double v : vals) data_[k++] = v;
  }

  static Matrix identity(int d);
  static Matrix diag(const std::vector<double>& entries);

  double& operator()(int i, int j) { return data_[size_t(i) * cols_ + j]; }
  double operator()(int i, int j) const { return data_[size_t(i) * cols_ + j]; }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  bool square() const { return rows_ == cols_; }
  bool empty() const { return data_.empty(); }

  const double* data() const { return data_.data(); }
  double* data() { return data_.data(); }

  Matrix transpose() const;
  double trace() const;
  double max_abs() const;
  bool all_finite() const;

  Matrix& operator+=(const Matrix& o);
  Matrix& operator-=(const Matrix& o);
  Matrix& operator*=(double a);

  friend Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
  friend Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
  friend Matrix operator*(Matrix a, double s) { return a *= s; }
  friend Matrix operator*(double s, Matrix a) { return a *= s; }
  friend Matrix operator*(const Matrix& a, const Matrix& b);

  friend bool operator==(const Matrix& a, const Matrix& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
  }

 private:
  static size_t checked_extent(int rows, int cols) {
    if (rows < 0 || cols < 0) throw InvalidInputError("Matrix: negative dimension");
    return size_t(rows) * size_t(cols);
  }

  int rows_, cols_;
  std::vector<double> data_;
};

// Matrix-vector product, y = M x.
std::vector<double> matvec(const Matrix& m, const std::vector<double>& x);

// C += w * A * B^T accumulated entrywise as sum_k A(i,k) B(j,k). The accumulation
// order is fixed, so swapping the roles of A and B yields the exact transpose in
// floating point (relied on for exact argument-symmetry of covariance quadrature).
void add_scaled_abt(Matrix& c, double w, const Matrix& a, const Matrix& b);

}  // namespace ofbm
