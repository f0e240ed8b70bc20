#include "msda/splines.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "msda/stats.hpp"

namespace msda {
namespace {

double cube_plus(double v) { return v > 0.0 ? v * v * v : 0.0; }

}  // namespace

SplineSpec::SplineSpec(std::vector<double> knots) : knots_(std::move(knots)) {
  if (knots_.size() < 3) throw DataError("restricted cubic spline needs at least 3 knots");
  for (std::size_t i = 0; i < knots_.size(); ++i) {
    if (!std::isfinite(knots_[i])) throw DataError("spline knot is not finite");
    if (i > 0 && !(knots_[i] > knots_[i - 1])) {
      throw DataError("spline knots must be strictly increasing");
    }
  }
}

SplineSpec knots_from_quantiles(const Vector& y, int knot_count, Warnings* warnings) {
  if (knot_count < 3) throw DataError("knot count must be at least 3");
  std::vector<double> sorted = to_std(y);
  std::sort(sorted.begin(), sorted.end());
  const std::set<double> distinct(sorted.begin(), sorted.end());
  if (static_cast<int>(distinct.size()) < knot_count) {
    throw DataError("outcome has " + std::to_string(distinct.size()) +
                    " distinct values, fewer than the " + std::to_string(knot_count) +
                    " knots requested; use a smaller knot count");
  }
  std::vector<double> knots;
  for (int k = 1; k <= knot_count; ++k) {
    const double q = quantile_sorted(sorted, static_cast<double>(k) / (knot_count + 1));
    if (knots.empty() || q > knots.back()) knots.push_back(q);
  }
  if (static_cast<int>(knots.size()) < knot_count && warnings) {
    warnings->push_back("tied outcome quantiles: spline reduced from " +
                        std::to_string(knot_count) + " to " + std::to_string(knots.size()) +
                        " knots");
  }
  if (knots.size() < 3) throw DataError("fewer than 3 distinct quantile knots");
  return SplineSpec(std::move(knots));
}

Matrix rcs_basis(const SplineSpec& spec, const Vector& y) {
  const auto& t = spec.knots();
  const std::size_t J = t.size();
  if (J < 3) throw DataError("rcs_basis: spline spec is empty");
  const double tJ = t[J - 1];
  const double tJm1 = t[J - 2];
  const double norm = (tJ - t[0]) * (tJ - t[0]);
  Matrix basis(y.size(), static_cast<Index>(J));
  for (Index i = 0; i < y.size(); ++i) {
    const double v = y(i);
    basis(i, 0) = 1.0;
    basis(i, 1) = v;
    const double tail_a = cube_plus(v - tJm1);
    const double tail_b = cube_plus(v - tJ);
    for (std::size_t j = 0; j + 2 < J; ++j) {
      const double c = cube_plus(v - t[j]) - tail_a * (tJ - t[j]) / (tJ - tJm1) +
                       tail_b * (tJm1 - t[j]) / (tJ - tJm1);
      basis(i, static_cast<Index>(j) + 2) = c / norm;
    }
  }
  return basis;
}

}  // namespace msda
