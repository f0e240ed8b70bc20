#include <gtest/gtest.h>

#include "msda/adversarial.hpp"
#include "oracles.hpp"

using namespace msda;
using namespace msda::testing;

namespace {

DomainData linear_domain(Index n, double shift, std::uint64_t seed, bool labeled = true) {
  Rng rng(seed);
  Matrix x(n, 2);
  Vector y(n);
  for (Index i = 0; i < n; ++i) {
    y(i) = rng.normal(shift, 1.0);
    x(i, 0) = y(i) + rng.normal(0, 0.3);
    x(i, 1) = rng.normal(0, 1);
  }
  if (!labeled) return DomainData(x, std::nullopt, "t");
  return DomainData(x, y, "s");
}

AdvConfig quick(int epochs = 60) {
  AdvConfig c;
  c.epochs = epochs;
  c.lr_generator = 5e-3;
  c.seed = 17;
  return c;
}

}  // namespace

TEST(Losses, HandArithmetic) {
  Vector p(3), y(3), w(3);
  p << 1, 2, 3;
  y << 0, 2, 5;
  w << 2, 1, 0.5;
  EXPECT_DOUBLE_EQ(weighted_regression_loss(p, y, w), (2 * 1 + 0 + 0.5 * 4) / 3.0);
  Vector ds(2), dt(3), ws(2);
  ds << 1, 3;
  dt << 1, 1, 4;
  ws << 1, 0.5;
  EXPECT_DOUBLE_EQ(critic_gap(ds, dt, ws), (1 + 1.5) / 2.0 - 2.0);
  EXPECT_THROW(weighted_regression_loss(p, y, Vector(2)), DimensionError);
  EXPECT_THROW(critic_gap(ds, Vector(0), ws), DataError);
}

TEST(Losses, ModuleFunctionsAgreeWithLearner) {
  const DomainData s = linear_domain(80, 0, 1), t = linear_domain(70, 1, 2, false);
  const Vector w = Vector::LinSpaced(80, 0.5, 1.5);
  const AdaptedLearner l = train_adversarial(s, t, w, quick(20));
  EXPECT_NEAR(loss_regression(l, s, w), l.weighted_loss, 1e-12);
  EXPECT_NEAR(loss_regression(l, s, w), weighted_regression_loss(l.predict(s.features()), s.outcomes(), w),
              1e-12);
  const Vector ds = nn::forward(l.critic, l.transform(s.features())).col(0);
  const Vector dt = nn::forward(l.critic, l.transform(t.features())).col(0);
  EXPECT_NEAR(loss_da(l.critic, l, s, t, w), critic_gap(ds, dt, w), 1e-12);
}

TEST(Adversarial, ZeroLambdaNeverReadsTarget) {
  const DomainData s = linear_domain(60, 0, 3), t = linear_domain(60, 1, 4, false);
  AdvConfig c = quick(10);
  c.lambda = 0.0;
  train_adversarial(s, t, Vector::Ones(60), c);
  EXPECT_EQ(t.audit().feature_reads(), 0u);
  EXPECT_EQ(t.audit().outcome_reads(), 0u);
}

TEST(Adversarial, NeverReadsTargetOutcomes) {
  const DomainData s = linear_domain(60, 0, 3), t = linear_domain(60, 1, 4, true);
  train_adversarial(s, t, Vector::Ones(60), quick(10));
  EXPECT_GT(t.audit().feature_reads(), 0u);
  EXPECT_EQ(t.audit().outcome_reads(), 0u);
}

TEST(Adversarial, DeterministicForFixedSeed) {
  const DomainData s = linear_domain(50, 0, 5), t = linear_domain(50, 1, 6, false);
  AdvConfig c = quick(15);
  c.batch_size = 16;
  const AdaptedLearner a = train_adversarial(s, t, Vector::Ones(50), c);
  const AdaptedLearner b = train_adversarial(s, t, Vector::Ones(50), c);
  EXPECT_EQ(a.feature_map.parameters(), b.feature_map.parameters());
  EXPECT_EQ(a.critic.parameters(), b.critic.parameters());
  EXPECT_EQ(a.regressor.parameters(), b.regressor.parameters());
  c.seed = 18;
  const AdaptedLearner d = train_adversarial(s, t, Vector::Ones(50), c);
  EXPECT_NE(a.feature_map.parameters(), d.feature_map.parameters());
}

TEST(Adversarial, CriticStaysClipped) {
  const DomainData s = linear_domain(50, 0, 7), t = linear_domain(50, 2, 8, false);
  AdvConfig c = quick(30);
  c.clip = 0.05;
  c.lr_critic = 0.05;
  const AdaptedLearner l = train_adversarial(s, t, Vector::Ones(50), c);
  EXPECT_LE(l.critic.parameters().cwiseAbs().maxCoeff(), 0.05);
  ASSERT_EQ(l.history.size(), 30u);
  for (const auto& r : l.history) EXPECT_TRUE(std::isfinite(r.critic_gap));
}

TEST(Adversarial, PlainRegressionFitsALinearSignal) {
  const DomainData s = linear_domain(300, 0, 9);
  AdvConfig c = quick(600);
  c.lr_generator = 1e-2;
  const AdaptedLearner l = train_plain_regression(s, c);
  // Noise on y given x0 has variance about 0.3^2 / (1 + 0.3^2).
  EXPECT_LT(l.weighted_loss, 0.12);
  EXPECT_LT(l.history.back().regression_loss, l.history.front().regression_loss);
  EXPECT_TRUE(l.critic.empty() || l.critic.input_dim() > 0);
}

TEST(Adversarial, LinearShapeKeepsIdentityFeatureMap) {
  const DomainData s = linear_domain(80, 0, 10), t = linear_domain(80, 1, 11, false);
  AdvConfig c = quick(40);
  c.shape.linear = true;
  const AdaptedLearner l = train_adversarial(s, t, Vector::Ones(80), c);
  ASSERT_EQ(l.feature_map.layers().size(), 1u);
  EXPECT_EQ(l.feature_map.layers()[0].weight, Matrix::Identity(2, 2));
  // The composite predictor is affine in x.
  Matrix x(3, 2);
  x << 1, 2, -1, 0.5, 0, 1.25;
  const Vector p = l.predict(x);
  EXPECT_NEAR(p(2), 0.5 * p(0) + 0.5 * p(1), 1e-12);
}

TEST(Adversarial, WarmStartBeginsFromGivenParameters) {
  const DomainData s = linear_domain(40, 0, 12), t = linear_domain(40, 1, 13, false);
  const AdaptedLearner a = train_adversarial(s, t, Vector::Ones(40), quick(10));
  AdvConfig c = quick(1);
  c.lr_generator = 1e-12;
  c.lr_critic = 1e-12;
  const AdaptedLearner b = train_adversarial(s, t, Vector::Ones(40), c, &a);
  EXPECT_LT((a.feature_map.parameters() - b.feature_map.parameters()).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LT((a.regressor.parameters() - b.regressor.parameters()).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_EQ(b.history.size(), 1u);
}

TEST(Adversarial, DivergenceGuardCarriesHistory) {
  const DomainData s = linear_domain(40, 0, 14), t = linear_domain(40, 1, 15, false);
  AdvConfig c = quick(200);
  c.lr_generator = 1e4;
  c.divergence_limit = 1e3;
  try {
    train_adversarial(s, t, Vector::Ones(40), c);
    FAIL() << "expected divergence";
  } catch (const DivergenceError& e) {
    EXPECT_GE(e.epoch(), 0);
    EXPECT_EQ(static_cast<int>(e.history().size()), e.epoch());
  }
}

TEST(Adversarial, Validation) {
  const DomainData s = linear_domain(20, 0, 16), t = linear_domain(20, 1, 17, false);
  EXPECT_THROW(train_adversarial(s, t, Vector::Ones(19), quick()), DimensionError);
  Vector neg = Vector::Ones(20);
  neg(0) = -1;
  EXPECT_THROW(train_adversarial(s, t, neg, quick()), DataError);
  AdvConfig bad = quick();
  bad.lambda = -1;
  EXPECT_THROW(train_adversarial(s, t, Vector::Ones(20), bad), DataError);
  bad = quick();
  bad.clip = 0;
  EXPECT_THROW(bad.validate(), DataError);
  const DomainData wide(Matrix::Ones(5, 3));
  EXPECT_THROW(train_adversarial(s, wide, Vector::Ones(20), quick()), DimensionError);
  EXPECT_THROW(train_adversarial(DomainData(Matrix::Ones(3, 2)), t, Vector::Ones(3), quick()),
               DataError);
}

TEST(AffineScaler, StandardizesColumns) {
  Matrix x(4, 2);
  x << 1, 5, 2, 5, 3, 5, 4, 5;
  const AffineScaler s = AffineScaler::fit(x);
  const Matrix z = s.apply(x);
  EXPECT_NEAR(z.col(0).mean(), 0.0, 1e-15);
  EXPECT_TRUE(z.col(1).isZero());  // constant column keeps a unit scale
  EXPECT_THROW(s.apply(Matrix::Ones(2, 3)), DimensionError);
  EXPECT_EQ(AffineScaler::identity(2).apply(x), x);
}
