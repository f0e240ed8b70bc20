#pragma once

#include "msda/data.hpp"

namespace msda {

/// Linear regression y ~ 1 + x (+ x^2 column-wise when quadratic).
struct LinearModel {
  Vector coefficients;  // intercept, linear terms, then squared terms
  bool quadratic = false;

  Vector predict(const Matrix& x) const;
};

Matrix linear_design(const Matrix& x, bool quadratic);

/// Weighted least squares via the normal equations, solved with a
/// rank-revealing QR of sqrt(w) X. Throws DataError for a singular design.
LinearModel fit_wls(const Matrix& x, const Vector& y, const Vector& weights, bool quadratic);
LinearModel fit_ols(const Matrix& x, const Vector& y, bool quadratic);

}  // namespace msda
