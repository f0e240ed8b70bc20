#pragma once

#include <vector>

#include "msda/data.hpp"

namespace msda {

/// Knot set of a restricted (natural) cubic spline. The basis has one column
/// per knot: intercept, linear term, and knots().size() - 2 cubic terms.
class SplineSpec {
 public:
  SplineSpec() = default;
  /// Knots must be finite, strictly increasing, and at least 3.
  explicit SplineSpec(std::vector<double> knots);

  const std::vector<double>& knots() const { return knots_; }
  Index basis_size() const { return static_cast<Index>(knots_.size()); }

 private:
  std::vector<double> knots_;
};

/// Knots at the empirical quantiles (type 7) of y at levels k / (J + 1),
/// k = 1..J. Tied quantiles collapse to one knot and a warning is appended;
/// fewer than J distinct outcome values is an error.
SplineSpec knots_from_quantiles(const Vector& y, int knot_count, Warnings* warnings = nullptr);

/// Basis matrix (n x M) in Harrell's parameterization. Cubic columns are
///   C_j(y) = [(y - t_j)+^3 - (y - t_{J-1})+^3 (t_J - t_j) / (t_J - t_{J-1})
///             + (y - t_J)+^3 (t_{J-1} - t_j) / (t_J - t_{J-1})] / (t_J - t_1)^2
/// for j = 1..J-2, which are linear beyond the boundary knots.
Matrix rcs_basis(const SplineSpec& spec, const Vector& y);

}  // namespace msda
