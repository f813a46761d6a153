#include <limits>
#include <vector>

#include "doctest.h"
#include "ofbm/error.hpp"
#include "ofbm/matrix.hpp"

using ofbm::Matrix;

TEST_CASE("construction and element access") {
  Matrix m(2, 3);
  CHECK(m.rows() == 2);
  CHECK(m.cols() == 3);
  CHECK(m(1, 2) == 0.0);
  m(1, 2) = 5.0;
  CHECK(m(1, 2) == 5.0);
  CHECK_FALSE(m.square());
  CHECK_THROWS_AS(Matrix(-1, 2), ofbm::InvalidInputError);
  CHECK_THROWS_AS(Matrix(2, 2, {1.0, 2.0}), ofbm::InvalidInputError);

  const Matrix i3 = Matrix::identity(3);
  CHECK(i3(0, 0) == 1.0);
  CHECK(i3(0, 1) == 0.0);
  CHECK(i3.trace() == 3.0);

  const Matrix d = Matrix::diag({2.0, -3.0});
  CHECK(d(1, 1) == -3.0);
  CHECK(d.max_abs() == 3.0);
}

TEST_CASE("arithmetic") {
  const Matrix a(2, 2, {1, 2, 3, 4});
  const Matrix b(2, 2, {0, 1, 1, 0});
  const Matrix sum = a + b;
  CHECK(sum(0, 1) == 3.0);
  const Matrix prod = a * b;
  CHECK(prod(0, 0) == 2.0);  // row (1,2) . col (0,1)
  CHECK(prod(1, 0) == 4.0);
  const Matrix t = a.transpose();
  CHECK(t(0, 1) == 3.0);
  CHECK((2.0 * a)(1, 1) == 8.0);
  CHECK(a == a);
  CHECK_FALSE(a == b);

  const std::vector<double> y = ofbm::matvec(a, {1.0, 1.0});
  CHECK(y[0] == 3.0);
  CHECK(y[1] == 7.0);
}

TEST_CASE("add_scaled_abt is exactly transpose-symmetric in its arguments") {
  // C += w A B^T with a fixed accumulation order: swapping A and B must give
  // the bitwise transpose, which grid covariance assembly relies on.
  const Matrix a(2, 2, {0.123456789, -0.987654321, 3.14159, -2.71828});
  const Matrix b(2, 2, {1.0 / 3.0, 2.0 / 7.0, -5.0 / 11.0, 1.0 / 13.0});
  Matrix ab(2, 2), ba(2, 2);
  ofbm::add_scaled_abt(ab, 0.37, a, b);
  ofbm::add_scaled_abt(ba, 0.37, b, a);
  CHECK(ab == ba.transpose());
}

TEST_CASE("finiteness flag") {
  Matrix m(2, 2, {1, 2, 3, 4});
  CHECK(m.all_finite());
  m(0, 0) = std::numeric_limits<double>::infinity();
  CHECK_FALSE(m.all_finite());
}
