#include <gtest/gtest.h>

#include <cmath>

#include "msda/ensemble.hpp"
#include "oracles.hpp"

using namespace msda;
using namespace msda::testing;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

StackingMatrix random_stacking(Index n, Index k, Rng& rng, bool mean_column = false) {
  StackingMatrix sm;
  sm.predictions = random_matrix(n, k + (mean_column ? 1 : 0), rng);
  sm.outcomes = random_vector(n, rng);
  sm.merged_mean_column = mean_column;
  if (mean_column) {
    sm.merged_mean = 0.25;
    sm.predictions.col(k).setConstant(0.25);
  }
  sm.blocks = {{0, n}};
  return sm;
}

double blend_objective(const StackingMatrix& sm, const Vector& prior, double gamma, const Vector& w) {
  return (1 - gamma) * (sm.outcomes - sm.predictions * w).squaredNorm() + gamma * (w - prior).squaredNorm();
}

void expect_on_simplex(const Vector& w) {
  EXPECT_NEAR(w.sum(), 1.0, 1e-8);
  EXPECT_GE(w.minCoeff(), 0.0);
}

std::vector<DomainData> hier_sources(int k, Index n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<DomainData> out;
  for (int d = 0; d < k; ++d) {
    const double mu = rng.normal(0, 0.5), b = rng.normal(1, 0.3);
    Matrix x(n, 1);
    Vector y(n);
    for (Index i = 0; i < n; ++i) {
      y(i) = rng.normal(mu, 1);
      x(i, 0) = b * y(i) + rng.normal(0, 0.5);
    }
    out.emplace_back(x, y, "s" + std::to_string(d + 1));
  }
  return out;
}

EnsembleConfig tiny_config() {
  EnsembleConfig c;
  c.single_da.adversarial.epochs = 15;
  c.single_da.adversarial.lr_generator = 5e-3;
  c.single_da.max_iterations = 1;
  c.single_da.bbse.categories = 2;
  c.single_da.bbse.knots = 4;
  c.seed = 5;
  return c;
}

}  // namespace

TEST(SimilarityWeights, HandValues) {
  const Vector a = similarity_weights(vec({1, 1, 2}));
  EXPECT_NEAR(a(0), 0.4, 1e-15);
  EXPECT_NEAR(a(1), 0.4, 1e-15);
  EXPECT_NEAR(a(2), 0.2, 1e-15);
  const Vector b = similarity_weights(vec({0.5, 4}));
  EXPECT_NEAR(b(0), 8.0 / 9.0, 1e-15);
  EXPECT_NEAR(b(1), 1.0 / 9.0, 1e-15);
  EXPECT_EQ(similarity_weights(vec({3.0}))(0), 1.0);
}

TEST(SimilarityWeights, ScaleInvariance) {
  Rng rng(1);
  for (int t = 0; t < 50; ++t) {
    const Vector j = random_vector(4, rng).cwiseAbs().array() + 0.01;
    const Vector w = similarity_weights(j);
    expect_on_simplex(w);
    // Power-of-two scalings are exact in binary floating point.
    for (double c : {0.25, 2.0, 1024.0}) EXPECT_EQ(similarity_weights(c * j), w);
    for (double c : {0.3, 7.0, 1e6}) {
      EXPECT_LT((similarity_weights(c * j) - w).cwiseAbs().maxCoeff(), 1e-15);
    }
  }
}

TEST(SimilarityWeights, RejectsBadLosses) {
  EXPECT_THROW(similarity_weights(vec({1, 0})), DataError);
  EXPECT_THROW(similarity_weights(vec({1, -2})), DataError);
  EXPECT_THROW(similarity_weights(vec({1, std::nan("")})), DataError);
  EXPECT_THROW(similarity_weights(vec({1, INFINITY})), DataError);
  EXPECT_THROW(similarity_weights(Vector(0)), DataError);
}

TEST(StackingWeights, RecoversExactConvexCombination) {
  Rng rng(2);
  StackingMatrix sm = random_stacking(30, 3, rng);
  sm.outcomes = sm.predictions * vec({0.3, 0.7, 0.0});
  const Vector w = stacking_weights(sm);
  EXPECT_LT((w - vec({0.3, 0.7, 0.0})).norm(), 1e-9);
}

TEST(StackingWeights, MatchesGridOracle) {
  Rng rng(3);
  for (int t = 0; t < 20; ++t) {
    const StackingMatrix sm = random_stacking(25, 3, rng);
    const Vector w = stacking_weights(sm);
    expect_on_simplex(w);
    double best = INFINITY;
    for_each_simplex_point(3, 60, [&](const Vector& g) {
      best = std::min(best, (sm.outcomes - sm.predictions * g).squaredNorm());
    });
    EXPECT_LE((sm.outcomes - sm.predictions * w).squaredNorm(), best + 1e-9);
  }
}

TEST(BlendedWeights, UniformSimilarityEqualsStacking) {
  Rng rng(4);
  for (bool mean_col : {false, true}) {
    const StackingMatrix sm = random_stacking(40, 3, rng, mean_col);
    const BlendResult r = blended_weights(sm, Vector::Constant(3, 1.0 / 3.0));
    EXPECT_EQ(r.gamma, 0.0);
    EXPECT_LT((r.weights - stacking_weights(sm)).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(BlendedWeights, GammaOneReturnsSimilarityWeights) {
  Rng rng(5);
  const StackingMatrix sm = random_stacking(40, 3, rng);
  const Vector w_sim = vec({0.2, 0.5, 0.3});
  EXPECT_LT((blended_weights(sm, w_sim, 1.0) - w_sim).cwiseAbs().maxCoeff(), 1e-10);
  const StackingMatrix smm = random_stacking(40, 3, rng, true);
  const Vector padded = blended_weights(smm, w_sim, 1.0);
  ASSERT_EQ(padded.size(), 4);
  EXPECT_LT((padded.head(3) - w_sim).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_NEAR(padded(3), 0.0, 1e-10);
  // A single source with all the similarity mass has gamma = 1.
  const BlendResult one = blended_weights(sm, vec({1.0, 0.0, 0.0}));
  EXPECT_EQ(one.gamma, 1.0);
  EXPECT_LT((one.weights - vec({1, 0, 0})).norm(), 1e-10);
}

TEST(BlendedWeights, InteriorGammaMatchesGridOracle) {
  Rng rng(6);
  for (int t = 0; t < 15; ++t) {
    const StackingMatrix sm = random_stacking(10, 3, rng);
    Vector w_sim = random_vector(3, rng).cwiseAbs().array() + 0.1;
    w_sim /= w_sim.sum();
    const BlendResult r = blended_weights(sm, w_sim);
    EXPECT_NEAR(r.gamma, w_sim.maxCoeff() - w_sim.minCoeff(), 1e-15);
    expect_on_simplex(r.weights);
    double best = INFINITY;
    for_each_simplex_point(3, 60, [&](const Vector& g) {
      best = std::min(best, blend_objective(sm, w_sim, r.gamma, g));
    });
    EXPECT_LE(blend_objective(sm, w_sim, r.gamma, r.weights), best + 1e-9);
  }
}

TEST(BlendedWeights, Validation) {
  Rng rng(7);
  const StackingMatrix sm = random_stacking(10, 3, rng);
  EXPECT_THROW(blended_weights(sm, vec({0.5, 0.5})), DimensionError);
  EXPECT_THROW(blended_weights(sm, vec({0.2, 0.3, 0.5}), 1.5), DataError);
}

TEST(ProjectToSimplex, ClampsAndRenormalises) {
  const Vector w = project_to_simplex_tolerance(vec({-1e-14, 0.5, 0.5 + 1e-14}));
  EXPECT_EQ(w(0), 0.0);
  EXPECT_NEAR(w.sum(), 1.0, 1e-15);
  EXPECT_THROW(project_to_simplex_tolerance(vec({-1.0, 0.0})), Error);
}

TEST(Schemes, StringRoundTrip) {
  for (Scheme s : {Scheme::stack, Scheme::similarity, Scheme::blend}) {
    EXPECT_EQ(scheme_from_string(to_string(s)), s);
  }
  EXPECT_THROW(scheme_from_string("vote"), DataError);
}

TEST(StackingMatrix, LayoutAndLabelHiding) {
  const auto sources = hier_sources(3, 40, 8);
  EnsembleConfig c = tiny_config();
  c.merged_mean_column = true;
  const StackingMatrix sm = build_stacking_matrix(sources, c);
  ASSERT_EQ(sm.domains(), 3);
  ASSERT_EQ(sm.predictions.rows(), 120);
  ASSERT_EQ(sm.predictions.cols(), 4);
  double grand = 0;
  for (int d = 0; d < 3; ++d) {
    EXPECT_EQ(sm.blocks[static_cast<std::size_t>(d)].first, 40 * d);
    EXPECT_EQ(sm.blocks[static_cast<std::size_t>(d)].second, 40);
    EXPECT_EQ(sm.outcomes.segment(40 * d, 40), sources[static_cast<std::size_t>(d)].outcomes());
    grand += sources[static_cast<std::size_t>(d)].outcomes().sum();
  }
  grand /= 120;
  EXPECT_NEAR(sm.merged_mean, grand, 1e-12);
  EXPECT_TRUE((sm.predictions.col(3).array() == sm.merged_mean).all());
  for (int r = 0; r < 3; ++r) {
    for (int col = 0; col < 3; ++col) {
      const BlockInfo& b = sm.block(r, col);
      EXPECT_EQ(b.row, r);
      EXPECT_EQ(b.column, col);
      EXPECT_EQ(b.kind == BlockInfo::Kind::diagonal, r == col);
      EXPECT_EQ(b.hidden_outcome_reads, 0u);
    }
  }
}

TEST(StackingMatrix, ThreadCountDoesNotChangeResults) {
  const auto sources = hier_sources(3, 40, 9);
  EnsembleConfig c = tiny_config();
  const StackingMatrix a = build_stacking_matrix(sources, c);
  c.threads = 3;
  const StackingMatrix b = build_stacking_matrix(sources, c);
  EXPECT_EQ(a.predictions, b.predictions);
  c.cross_fit_diagonal = true;
  const StackingMatrix x = build_stacking_matrix(sources, c);
  EXPECT_EQ(x.predictions.col(1).segment(40, 40).size(), 40);
  EXPECT_NE(x.predictions.col(0).head(40), a.predictions.col(0).head(40));
  EXPECT_EQ(x.predictions.col(1).head(40), a.predictions.col(1).head(40));
}

TEST(StackingMatrix, Validation) {
  const auto sources = hier_sources(2, 30, 10);
  EXPECT_THROW(build_stacking_matrix({sources[0]}, tiny_config()), DataError);
  EXPECT_THROW(build_stacking_matrix({sources[0], sources[1].without_outcomes()}, tiny_config()),
               DataError);
}

TEST(Ensemble, SchemesShareComponentsAndPredictLinearly) {
  const auto sources = hier_sources(3, 50, 11);
  const DomainData target = hier_sources(1, 50, 12)[0].without_outcomes();
  EnsembleConfig c = tiny_config();
  c.merged_mean_column = true;
  const EnsembleComponents parts = fit_ensemble_components(sources, target, c, true);
  ASSERT_TRUE(parts.stacking.has_value());
  const Matrix x = target.features();
  for (Scheme s : {Scheme::stack, Scheme::similarity, Scheme::blend}) {
    const EnsembleModel m = combine(parts, s);
    expect_on_simplex(m.weights);
    Vector manual = Vector::Zero(x.rows());
    for (std::size_t k = 0; k < m.learners.size(); ++k) {
      manual += m.weights(static_cast<Index>(k)) * m.learners[k].predict(x);
    }
    if (m.merged_mean) manual.array() += m.weights(3) * *m.merged_mean;
    EXPECT_LT((predict_ensemble(m, x) - manual).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_EQ(m.sources.size(), 3u);
  }
  const EnsembleModel sim = combine(parts, Scheme::similarity);
  ASSERT_EQ(sim.weights.size(), 3);
  Vector losses(3);
  for (int k = 0; k < 3; ++k) losses(k) = parts.runs[static_cast<std::size_t>(k)].learner.weighted_loss;
  EXPECT_LT((sim.weights - similarity_weights(losses)).norm(), 1e-15);
  EXPECT_EQ(target.audit().outcome_reads(), 0u);

  const EnsembleModel direct = fit_target_ensemble(sources, target, Scheme::stack, c);
  EXPECT_EQ(direct.weights, combine(parts, Scheme::stack).weights);
}

TEST(Ensemble, SingleSourceGetsAllWeight) {
  const auto sources = hier_sources(1, 50, 13);
  const DomainData target = hier_sources(1, 50, 14)[0].without_outcomes();
  for (Scheme s : {Scheme::stack, Scheme::similarity, Scheme::blend}) {
    const EnsembleModel m = fit_target_ensemble(sources, target, s, tiny_config());
    ASSERT_EQ(m.weights.size(), 1);
    EXPECT_EQ(m.weights(0), 1.0);
  }
}

TEST(Ensemble, StackWithoutMatrixIsAnError) {
  const auto sources = hier_sources(2, 40, 15);
  const DomainData target = hier_sources(1, 40, 16)[0].without_outcomes();
  const EnsembleComponents parts = fit_ensemble_components(sources, target, tiny_config(), false);
  EXPECT_THROW(combine(parts, Scheme::stack), Error);
  EXPECT_NO_THROW(combine(parts, Scheme::similarity));
  EnsembleModel m = combine(parts, Scheme::similarity);
  m.weights = Vector::Ones(5);
  EXPECT_THROW(predict_ensemble(m, target.features()), DimensionError);
}
