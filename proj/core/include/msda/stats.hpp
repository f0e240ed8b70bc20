#pragma once

#include <span>
#include <vector>

#include "msda/data.hpp"

namespace msda {

/// Empirical quantile with linear interpolation between order statistics
/// (Hyndman-Fan type 7): h = (n - 1) p, q = x[floor h] + (h - floor h)(x[floor h + 1] - x[floor h]).
/// `sorted` must be ascending and non-empty; p in [0, 1].
double quantile_sorted(std::span<const double> sorted, double p);
double quantile(std::vector<double> values, double p);

double median(std::vector<double> values);

struct BoxSummary {
  double min = 0, q1 = 0, median = 0, q3 = 0, max = 0;
  double iqr() const { return q3 - q1; }
};
BoxSummary box_summary(std::vector<double> values);

double rmse(const Vector& prediction, const Vector& truth);

std::vector<double> to_std(const Vector& v);

}  // namespace msda
