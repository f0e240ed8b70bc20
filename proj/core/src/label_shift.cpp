#include "msda/label_shift.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "msda/rng.hpp"
#include "msda/stats.hpp"

namespace msda {

// ---------------------------------------------------------------- discretization

Discretization::Discretization(std::vector<double> cuts, Origin origin)
    : cuts_(std::move(cuts)), origin_(origin) {
  for (std::size_t i = 0; i < cuts_.size(); ++i) {
    if (!std::isfinite(cuts_[i])) throw DataError("cut point is not finite");
    if (i > 0 && !(cuts_[i] > cuts_[i - 1])) {
      throw DataError("cut points must be strictly increasing");
    }
  }
}

int Discretization::category_of(double y) const {
  return static_cast<int>(std::lower_bound(cuts_.begin(), cuts_.end(), y) - cuts_.begin());
}

std::vector<int> Discretization::assign(const Vector& y) const {
  std::vector<int> out(static_cast<std::size_t>(y.size()));
  for (Index i = 0; i < y.size(); ++i) out[static_cast<std::size_t>(i)] = category_of(y(i));
  return out;
}

std::vector<Index> Discretization::counts(const Vector& y) const {
  std::vector<Index> c(static_cast<std::size_t>(categories()), 0);
  for (Index i = 0; i < y.size(); ++i) ++c[static_cast<std::size_t>(category_of(y(i)))];
  return c;
}

Discretization make_discretization(const Vector& y_source, int categories) {
  if (categories < 2) throw DataError("need at least 2 outcome categories");
  std::vector<double> sorted = to_std(y_source);
  std::sort(sorted.begin(), sorted.end());
  const std::set<double> distinct(sorted.begin(), sorted.end());
  if (static_cast<int>(distinct.size()) < categories) {
    throw DataError("source outcome has " + std::to_string(distinct.size()) +
                    " distinct values, fewer than the " + std::to_string(categories) +
                    " categories requested");
  }
  std::vector<double> cuts;
  for (int l = 1; l < categories; ++l) {
    const double q = quantile_sorted(sorted, static_cast<double>(l) / categories);
    if (!cuts.empty() && !(q > cuts.back())) {
      throw DataError("tied source quantiles; use fewer categories or explicit cut points");
    }
    cuts.push_back(q);
  }
  return Discretization(std::move(cuts), Discretization::Origin::source_quantile);
}

Discretization make_discretization(std::vector<double> cuts) {
  if (cuts.empty()) throw DataError("need at least one cut point");
  return Discretization(std::move(cuts), Discretization::Origin::user);
}

int recommended_categories(Index n) {
  int L = 2;
  while (L < 10 && static_cast<double>(n) / ((L + 1.0) * (L + 1.0)) >= 5.0) ++L;
  return L;
}

// ---------------------------------------------------------------- classifier

std::vector<int> BlackBoxClassifier::predict(const Matrix& x) const {
  const Matrix p = predict_proba(x);
  std::vector<int> out(static_cast<std::size_t>(p.rows()));
  for (Index i = 0; i < p.rows(); ++i) {
    Index best = 0;
    p.row(i).maxCoeff(&best);
    out[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return out;
}

namespace {

Matrix with_intercept(const Matrix& x, const Vector& mean, const Vector& scale) {
  Matrix a(x.rows(), x.cols() + 1);
  a.col(0).setOnes();
  a.rightCols(x.cols()) = (x.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array();
  return a;
}

Matrix softmax_rows(const Matrix& logits) {
  Matrix p = logits;
  for (Index i = 0; i < p.rows(); ++i) {
    const double m = p.row(i).maxCoeff();
    p.row(i) = (p.row(i).array() - m).exp();
    p.row(i) /= p.row(i).sum();
  }
  return p;
}

struct LogisticObjective {
  const Matrix& design;  // n x (p + 1)
  const std::vector<int>& labels;
  double l2;

  double value(const Matrix& theta) const {
    const Matrix logits = design * theta.transpose();
    double nll = 0.0;
    for (Index i = 0; i < logits.rows(); ++i) {
      const double m = logits.row(i).maxCoeff();
      const double lse = m + std::log((logits.row(i).array() - m).exp().sum());
      nll += lse - logits(i, labels[static_cast<std::size_t>(i)]);
    }
    const double penalty = 0.5 * l2 * theta.rightCols(theta.cols() - 1).squaredNorm();
    return nll / static_cast<double>(logits.rows()) + penalty;
  }

  Matrix gradient(const Matrix& theta) const {
    Matrix resid = softmax_rows(design * theta.transpose());
    for (Index i = 0; i < resid.rows(); ++i) resid(i, labels[static_cast<std::size_t>(i)]) -= 1.0;
    Matrix g = resid.transpose() * design / static_cast<double>(design.rows());
    g.rightCols(g.cols() - 1) += l2 * theta.rightCols(theta.cols() - 1);
    return g;
  }
};

}  // namespace

MultinomialLogistic::MultinomialLogistic(Matrix coefficients, Vector feature_mean,
                                         Vector feature_scale)
    : coefficients_(std::move(coefficients)),
      feature_mean_(std::move(feature_mean)),
      feature_scale_(std::move(feature_scale)) {
  if (coefficients_.cols() != feature_mean_.size() + 1 ||
      feature_mean_.size() != feature_scale_.size()) {
    throw DimensionError("MultinomialLogistic: coefficient/feature shapes disagree");
  }
}

Matrix MultinomialLogistic::predict_proba(const Matrix& x) const {
  if (x.cols() != feature_mean_.size()) {
    throw DimensionError("classifier expects " + std::to_string(feature_mean_.size()) +
                         " features, got " + std::to_string(x.cols()));
  }
  return softmax_rows(with_intercept(x, feature_mean_, feature_scale_) * coefficients_.transpose());
}

double MultinomialLogistic::loss(const Matrix& x, const std::vector<int>& labels, double l2) const {
  const Matrix design = with_intercept(x, feature_mean_, feature_scale_);
  return LogisticObjective{design, labels, l2}.value(coefficients_);
}

MultinomialLogistic fit_blackbox(const Matrix& x, const std::vector<int>& labels, int categories,
                                 const LogisticOptions& options) {
  if (static_cast<Index>(labels.size()) != x.rows()) {
    throw DimensionError("fit_blackbox: label count differs from feature rows");
  }
  if (categories < 2) throw DataError("fit_blackbox: need at least 2 categories");
  std::vector<Index> seen(static_cast<std::size_t>(categories), 0);
  for (int l : labels) {
    if (l < 0 || l >= categories) throw DataError("fit_blackbox: label out of range");
    ++seen[static_cast<std::size_t>(l)];
  }
  for (int l = 0; l < categories; ++l) {
    if (seen[static_cast<std::size_t>(l)] == 0) {
      throw DataError("category " + std::to_string(l) +
                      " is absent from the classifier training fold; use fewer categories");
    }
  }

  const Vector mean = x.colwise().mean();
  Vector scale = ((x.rowwise() - mean.transpose()).colwise().squaredNorm() /
                  std::max<double>(1.0, static_cast<double>(x.rows())))
                     .cwiseSqrt()
                     .transpose();
  for (Index j = 0; j < scale.size(); ++j) {
    if (!(scale(j) > 1e-12)) scale(j) = 1.0;
  }
  const Matrix design = with_intercept(x, mean, scale);
  const LogisticObjective obj{design, labels, options.l2};

  Matrix theta = Matrix::Zero(categories, design.cols());
  double f = obj.value(theta);
  double step = 1.0;
  for (int it = 0; it < options.max_iterations; ++it) {
    const Matrix g = obj.gradient(theta);
    if (g.cwiseAbs().maxCoeff() < options.tolerance) break;
    const double gg = g.squaredNorm();
    step = std::min(step * 2.0, 64.0);
    Matrix trial = theta - step * g;
    double ft = obj.value(trial);
    while (ft > f - 0.5 * step * gg && step > 1e-12) {
      step *= 0.5;
      trial = theta - step * g;
      ft = obj.value(trial);
    }
    if (!(ft < f)) break;
    theta = std::move(trial);
    f = ft;
  }
  return MultinomialLogistic(std::move(theta), mean, scale);
}

// ---------------------------------------------------------------- statistics

ShiftStatistics shift_statistics(const BlackBoxClassifier& classifier, const Matrix& holdout_x,
                                 const std::vector<int>& holdout_labels, const Matrix& target_x) {
  if (holdout_x.rows() == 0 || target_x.rows() == 0) {
    throw DataError("shift_statistics: empty holdout or target");
  }
  if (static_cast<Index>(holdout_labels.size()) != holdout_x.rows()) {
    throw DimensionError("shift_statistics: holdout label count differs from rows");
  }
  const int L = classifier.categories();
  ShiftStatistics s;
  s.confusion = Matrix::Zero(L, L);
  s.target_mass = Vector::Zero(L);
  const std::vector<int> pred_h = classifier.predict(holdout_x);
  for (std::size_t i = 0; i < pred_h.size(); ++i) s.confusion(pred_h[i], holdout_labels[i]) += 1.0;
  s.confusion /= static_cast<double>(holdout_x.rows());
  for (int l : classifier.predict(target_x)) s.target_mass(l) += 1.0;
  s.target_mass /= static_cast<double>(target_x.rows());

  const Vector sv = Eigen::JacobiSVD<Matrix>(s.confusion).singularValues();
  const double smin = sv(sv.size() - 1);
  s.condition_number = smin > 0.0 ? sv(0) / smin : std::numeric_limits<double>::infinity();
  return s;
}

// ---------------------------------------------------------------- weight model

Vector ImportanceModel::evaluate(const Vector& y) const {
  return (rcs_basis(spline, y) * alpha).cwiseMax(0.0);
}

Vector evaluate_weights(const ImportanceModel& model, const Vector& y) { return model.evaluate(y); }

ImportanceModel fit_importance_model(const ShiftStatistics& stats, const Discretization& disc,
                                     const SplineSpec& spline, const Vector& y_source,
                                     double epsilon, double ridge) {
  const int L = disc.categories();
  if (stats.confusion.rows() != L || stats.confusion.cols() != L || stats.target_mass.size() != L) {
    throw DimensionError("fit_importance_model: statistics were built for a different L");
  }
  if (!(epsilon >= 0.0)) throw DataError("epsilon must be non-negative");

  const Matrix basis = rcs_basis(spline, y_source);
  const Index M = basis.cols();
  Matrix agg = Matrix::Zero(L, M);
  Vector counts = Vector::Zero(L);
  for (Index i = 0; i < y_source.size(); ++i) {
    const int l = disc.category_of(y_source(i));
    agg.row(l) += basis.row(i);
    counts(l) += 1.0;
  }
  for (int l = 0; l < L; ++l) {
    if (counts(l) == 0.0) {
      throw DataError("category " + std::to_string(l) + " has no source outcomes");
    }
    agg.row(l) /= counts(l);
  }
  const Vector pi = counts / static_cast<double>(y_source.size());

  qp::Problem prob;
  prob.objective = stats.confusion * agg;
  prob.target = stats.target_mass;
  prob.ridge = ridge;
  prob.inequality.resize(L + 2, M);
  prob.inequality_rhs.resize(L + 2);
  prob.inequality.topRows(L) = agg;
  prob.inequality_rhs.head(L).setZero();
  const Eigen::RowVectorXd mass = pi.transpose() * agg;
  prob.inequality.row(L) = mass;
  prob.inequality_rhs(L) = 1.0 - epsilon;
  prob.inequality.row(L + 1) = -mass;
  prob.inequality_rhs(L + 1) = -(1.0 + epsilon);

  qp::Solution sol;
  try {
    sol = qp::solve(prob);
  } catch (const qp::InfeasibleError& e) {
    throw qp::InfeasibleError(std::string(e.what()) +
                              "; try a larger epsilon or fewer categories");
  }

  ImportanceModel model;
  model.spline = spline;
  model.alpha = sol.z;
  model.discretization = disc;
  model.category_weights = agg * sol.z;
  model.source_proportions = pi;
  model.epsilon = epsilon;
  return model;
}

BbseResult estimate_importance_weights(const Matrix& source_x, const Vector& source_y,
                                       const Matrix& target_x, const BbseOptions& options,
                                       std::uint64_t seed) {
  if (source_x.rows() != source_y.size()) {
    throw DimensionError("estimate_importance_weights: source rows and outcomes differ");
  }
  if (source_x.cols() != target_x.cols()) {
    throw DimensionError("estimate_importance_weights: source has " +
                         std::to_string(source_x.cols()) + " features, target " +
                         std::to_string(target_x.cols()));
  }
  BbseResult out;
  const Index n = source_y.size();
  const Discretization disc =
      options.cut_points.empty()
          ? make_discretization(source_y, options.categories > 0 ? options.categories
                                                                  : recommended_categories(n))
          : make_discretization(options.cut_points);
  const SplineSpec spline = knots_from_quantiles(source_y, options.knots, &out.warnings);

  const std::vector<int> labels = disc.assign(source_y);
  const auto n_train = static_cast<Index>(std::floor(options.train_fraction * static_cast<double>(n)));
  if (n_train < 1 || n_train >= n) throw DataError("train fraction leaves an empty fold");
  const int repeats = std::max(1, options.split_repeats);

  // Each repeat draws a fresh split; with cross_fit the two folds also swap
  // roles. Statistics are averaged over every (train, holdout) orientation.
  int fits = 0;
  out.stats.confusion = Matrix::Zero(disc.categories(), disc.categories());
  out.stats.target_mass = Vector::Zero(disc.categories());
  for (int rep = 0; rep < repeats; ++rep) {
    Rng rng(derive_seed(seed, "bbse/split", static_cast<std::uint64_t>(rep)));
    const auto perm = rng.permutation(static_cast<std::size_t>(n));
    Matrix fold_x[2] = {Matrix(n_train, source_x.cols()), Matrix(n - n_train, source_x.cols())};
    std::vector<int> fold_l[2];
    for (Index k = 0; k < n; ++k) {
      const auto i = static_cast<Index>(perm[static_cast<std::size_t>(k)]);
      const int f = k < n_train ? 0 : 1;
      fold_x[f].row(f == 0 ? k : k - n_train) = source_x.row(i);
      fold_l[f].push_back(labels[static_cast<std::size_t>(i)]);
    }
    for (int orient = 0; orient < (options.cross_fit ? 2 : 1); ++orient) {
      const int tr = orient;
      const int ho = 1 - orient;
      const MultinomialLogistic clf =
          fit_blackbox(fold_x[tr], fold_l[tr], disc.categories(), options.logistic);
      const ShiftStatistics s = shift_statistics(clf, fold_x[ho], fold_l[ho], target_x);
      out.stats.confusion += s.confusion;
      out.stats.target_mass += s.target_mass;
      ++fits;
    }
  }
  out.stats.confusion /= fits;
  out.stats.target_mass /= fits;
  {
    const Vector sv = Eigen::JacobiSVD<Matrix>(out.stats.confusion).singularValues();
    const double smin = sv(sv.size() - 1);
    out.stats.condition_number =
        smin > 0.0 ? sv(0) / smin : std::numeric_limits<double>::infinity();
  }
  if (out.stats.condition_number > 1e6) {
    out.warnings.push_back("confusion matrix is ill-conditioned (condition number " +
                           std::to_string(out.stats.condition_number) + ")");
  }
  out.model = fit_importance_model(out.stats, disc, spline, source_y, options.epsilon, options.ridge);
  out.weights = out.model.evaluate(source_y);
  return out;
}

}  // namespace msda
