#include <gtest/gtest.h>

#include "msda/linear.hpp"
#include "oracles.hpp"

using namespace msda;
using namespace msda::testing;

TEST(Ols, SimpleRegressionClosedForm) {
  // slope = cov(x, y) / var(x), intercept = ybar - slope xbar.
  Matrix x(5, 1);
  x << 1, 2, 3, 4, 5;
  Vector y(5);
  y << 2.1, 3.9, 6.2, 7.8, 10.1;
  const LinearModel m = fit_ols(x, y, false);
  const double xbar = 3.0, ybar = y.mean();
  const double slope = ((x.col(0).array() - xbar) * (y.array() - ybar)).sum() /
                       (x.col(0).array() - xbar).square().sum();
  EXPECT_NEAR(m.coefficients(1), slope, 1e-12);
  EXPECT_NEAR(m.coefficients(0), ybar - slope * xbar, 1e-12);
}

TEST(Ols, SatisfiesNormalEquations) {
  Rng rng(1);
  const Matrix x = random_matrix(40, 3, rng);
  const Vector y = random_vector(40, rng);
  for (bool quad : {false, true}) {
    const LinearModel m = fit_ols(x, y, quad);
    const Matrix d = linear_design(x, quad);
    ASSERT_EQ(d.cols(), quad ? 7 : 4);
    EXPECT_LT((d.transpose() * (y - d * m.coefficients)).norm(), 1e-10);
    EXPECT_LT((m.predict(x) - d * m.coefficients).norm(), 1e-12);
  }
}

TEST(Wls, IntegerWeightsEqualRowDuplication) {
  Rng rng(2);
  const Matrix x = random_matrix(12, 2, rng);
  const Vector y = random_vector(12, rng);
  Vector w(12);
  std::vector<Index> rows;
  for (Index i = 0; i < 12; ++i) {
    w(i) = static_cast<double>(i % 3);
    for (int k = 0; k < i % 3; ++k) rows.push_back(i);
  }
  Matrix xd(static_cast<Index>(rows.size()), 2);
  Vector yd(static_cast<Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    xd.row(static_cast<Index>(r)) = x.row(rows[r]);
    yd(static_cast<Index>(r)) = y(rows[r]);
  }
  const LinearModel a = fit_wls(x, y, w, true);
  const LinearModel b = fit_ols(xd, yd, true);
  EXPECT_LT((a.coefficients - b.coefficients).norm(), 1e-10);
}

TEST(Wls, Validation) {
  const Matrix x = Matrix::Ones(4, 1);
  const Vector y = Vector::Ones(4);
  EXPECT_THROW(fit_ols(x, y, false), DataError);  // constant column duplicates the intercept
  Vector w = Vector::Ones(4);
  w(0) = -1;
  Matrix x2(4, 1);
  x2 << 1, 2, 3, 4;
  EXPECT_THROW(fit_wls(x2, y, w, false), DataError);
  EXPECT_THROW(fit_wls(x2, y, Vector::Ones(3), false), DimensionError);
  const LinearModel m = fit_ols(x2, y, false);
  EXPECT_THROW(m.predict(Matrix::Ones(2, 2)), DimensionError);
}
