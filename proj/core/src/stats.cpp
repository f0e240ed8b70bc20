#include "msda/stats.hpp"

#include <algorithm>
#include <cmath>

namespace msda {

double quantile_sorted(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw DataError("quantile of an empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw DataError("quantile level outside [0, 1]");
  const double h = static_cast<double>(sorted.size() - 1) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= sorted.size()) return sorted.back();
  const double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

double quantile(std::vector<double> values, double p) {
  std::sort(values.begin(), values.end());
  return quantile_sorted(values, p);
}

double median(std::vector<double> values) { return quantile(std::move(values), 0.5); }

BoxSummary box_summary(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  BoxSummary s;
  s.min = quantile_sorted(values, 0.0);
  s.q1 = quantile_sorted(values, 0.25);
  s.median = quantile_sorted(values, 0.5);
  s.q3 = quantile_sorted(values, 0.75);
  s.max = quantile_sorted(values, 1.0);
  return s;
}

double rmse(const Vector& prediction, const Vector& truth) {
  if (prediction.size() != truth.size() || truth.size() == 0) {
    throw DimensionError("rmse: prediction/truth sizes differ or are empty");
  }
  return std::sqrt((prediction - truth).squaredNorm() / static_cast<double>(truth.size()));
}

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace msda
