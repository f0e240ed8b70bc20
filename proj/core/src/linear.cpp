#include "msda/linear.hpp"

namespace msda {

Matrix linear_design(const Matrix& x, bool quadratic) {
  const Index p = x.cols();
  Matrix d(x.rows(), 1 + p * (quadratic ? 2 : 1));
  d.col(0).setOnes();
  d.middleCols(1, p) = x;
  if (quadratic) d.rightCols(p) = x.array().square().matrix();
  return d;
}

Vector LinearModel::predict(const Matrix& x) const {
  const Matrix d = linear_design(x, quadratic);
  if (d.cols() != coefficients.size()) {
    throw DimensionError("linear model expects " +
                         std::to_string((coefficients.size() - 1) / (quadratic ? 2 : 1)) +
                         " features, got " + std::to_string(x.cols()));
  }
  return d * coefficients;
}

LinearModel fit_wls(const Matrix& x, const Vector& y, const Vector& weights, bool quadratic) {
  if (x.rows() != y.size() || weights.size() != y.size()) {
    throw DimensionError("fit_wls: rows, outcomes and weights must have equal length");
  }
  if ((weights.array() < 0.0).any()) throw DataError("fit_wls: negative weight");
  const Matrix d = linear_design(x, quadratic);
  const Vector sw = weights.cwiseSqrt();
  const Matrix a = sw.asDiagonal() * d;
  Eigen::ColPivHouseholderQR<Matrix> qr(a);
  if (qr.rank() < d.cols()) throw DataError("fit_wls: singular design matrix");
  LinearModel m;
  m.coefficients = qr.solve(sw.cwiseProduct(y));
  m.quadratic = quadratic;
  return m;
}

LinearModel fit_ols(const Matrix& x, const Vector& y, bool quadratic) {
  return fit_wls(x, y, Vector::Ones(y.size()), quadratic);
}

}  // namespace msda
