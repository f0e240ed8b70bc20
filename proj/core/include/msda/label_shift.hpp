#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "msda/data.hpp"
#include "msda/qp.hpp"
#include "msda/splines.hpp"

namespace msda {

/// Coarsening of a continuous outcome into L ordered categories.
/// Category of y = number of cut points strictly below y.
class Discretization {
 public:
  enum class Origin { source_quantile, user };

  Discretization() = default;
  Discretization(std::vector<double> cuts, Origin origin);

  int categories() const { return static_cast<int>(cuts_.size()) + 1; }
  const std::vector<double>& cuts() const { return cuts_; }
  Origin origin() const { return origin_; }

  int category_of(double y) const;
  std::vector<int> assign(const Vector& y) const;
  /// Count per category.
  std::vector<Index> counts(const Vector& y) const;

 private:
  std::vector<double> cuts_;
  Origin origin_ = Origin::user;
};

/// Cuts at the type-7 quantiles l / L of the source outcomes.
Discretization make_discretization(const Vector& y_source, int categories);
/// User-supplied, strictly increasing cut points.
Discretization make_discretization(std::vector<double> cuts);

/// Largest L with n / L^2 >= 5, clamped to [2, 10].
int recommended_categories(Index n);

/// Any probabilistic classifier over L categories.
class BlackBoxClassifier {
 public:
  virtual ~BlackBoxClassifier() = default;
  virtual int categories() const = 0;
  /// n x L matrix of class probabilities; rows sum to one.
  virtual Matrix predict_proba(const Matrix& x) const = 0;
  std::vector<int> predict(const Matrix& x) const;
};

struct LogisticOptions {
  double l2 = 1e-4;
  int max_iterations = 500;
  double tolerance = 1e-6;  // on the max-abs gradient entry
};

/// Multinomial logistic regression on column-standardized features.
class MultinomialLogistic final : public BlackBoxClassifier {
 public:
  MultinomialLogistic(Matrix coefficients, Vector feature_mean, Vector feature_scale);

  int categories() const override { return static_cast<int>(coefficients_.rows()); }
  Matrix predict_proba(const Matrix& x) const override;

  /// L x (p + 1); column 0 is the intercept.
  const Matrix& coefficients() const { return coefficients_; }
  /// Mean negative log-likelihood plus the l2 penalty used in fitting.
  double loss(const Matrix& x, const std::vector<int>& labels, double l2) const;

 private:
  Matrix coefficients_;
  Vector feature_mean_;
  Vector feature_scale_;
};

/// Gradient descent with backtracking line search on the penalized
/// multinomial log-likelihood. Throws DataError when a category is absent.
MultinomialLogistic fit_blackbox(const Matrix& x, const std::vector<int>& labels, int categories,
                                 const LogisticOptions& options = {});

/// Target prediction mass and the joint confusion proportions of the
/// classifier on a labeled source holdout.
struct ShiftStatistics {
  Vector target_mass;  // L, [l] = fraction of target rows predicted l
  Matrix confusion;    // L x L, [i][j] = fraction of holdout rows predicted i with true j
  double condition_number = 0.0;
};

ShiftStatistics shift_statistics(const BlackBoxClassifier& classifier, const Matrix& holdout_x,
                                 const std::vector<int>& holdout_labels, const Matrix& target_x);

struct BbseOptions {
  int categories = 0;  // 0 selects recommended_categories(n)
  std::vector<double> cut_points;  // overrides quantile cuts when non-empty
  int knots = 12;
  double epsilon = 0.05;
  double ridge = 1e-8;
  double train_fraction = 0.5;
  /// Average the statistics over both fold orientations of each split.
  bool cross_fit = true;
  /// Number of independent random splits averaged.
  int split_repeats = 1;
  LogisticOptions logistic;
};

/// Continuous importance-weight function beta(y) = sum_m alpha_m q_m(y).
struct ImportanceModel {
  SplineSpec spline;
  Vector alpha;
  Discretization discretization;
  Vector category_weights;     // per-category mean of beta over source points
  Vector source_proportions;   // pi_l
  double epsilon = 0.05;

  /// Pointwise weights, clamped below at 0.
  Vector evaluate(const Vector& y) const;
};

/// Solve min_alpha ||mu - C A alpha||^2 + ridge ||alpha||^2
/// s.t. A alpha >= 0 and |pi^T A alpha - 1| <= epsilon, where row l of A is
/// the mean spline basis row over source points in category l.
ImportanceModel fit_importance_model(const ShiftStatistics& stats, const Discretization& disc,
                                     const SplineSpec& spline, const Vector& y_source,
                                     double epsilon, double ridge = 1e-8);

Vector evaluate_weights(const ImportanceModel& model, const Vector& y);

struct BbseResult {
  ImportanceModel model;
  ShiftStatistics stats;
  Vector weights;  // evaluated at the source outcomes
  Warnings warnings;
};

/// Full extended-BBSE pass: discretize, split the source, fit the classifier on
/// one fold, compute statistics on the other fold and the target, fit the
/// spline weights. Features may be raw or already transformed.
BbseResult estimate_importance_weights(const Matrix& source_x, const Vector& source_y,
                                       const Matrix& target_x, const BbseOptions& options,
                                       std::uint64_t seed);

}  // namespace msda
