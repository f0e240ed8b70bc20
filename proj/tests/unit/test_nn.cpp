#include <gtest/gtest.h>

#include <cmath>

#include "msda/nn.hpp"
#include "oracles.hpp"

using namespace msda;
using namespace msda::nn;
using msda::testing::random_matrix;

namespace {

Layer layer(Matrix w, Vector b, Activation a) { return Layer{std::move(w), std::move(b), a}; }

LossFn squared_loss(const Matrix& target) {
  return [target](const Matrix& out) {
    const Matrix r = out - target;
    return std::make_pair(r.squaredNorm(), Matrix(2.0 * r));
  };
}

}  // namespace

TEST(Mlp, ForwardMatchesHandComputation) {
  Matrix w1(2, 2), w2(2, 1);
  w1 << 1, -1, 0.5, 2;
  w2 << 1, 3;
  Vector b1(2), b2(1);
  b1 << 0.1, -0.2;
  b2 << 0.5;
  Mlp net({layer(w1, b1, Activation::tanh), layer(w2, b2, Activation::identity)});
  Matrix x(1, 2);
  x << 0.3, -0.4;
  const double h1 = std::tanh(0.3 * 1 + -0.4 * 0.5 + 0.1);
  const double h2 = std::tanh(0.3 * -1 + -0.4 * 2 - 0.2);
  EXPECT_NEAR(forward(net, x)(0, 0), h1 + 3 * h2 + 0.5, 1e-12);
}

TEST(Mlp, ReluAndTanhAgreeWithStd) {
  Rng rng(1);
  const Matrix x = random_matrix(50, 3, rng, 4.0);
  Mlp id({layer(Matrix::Identity(3, 3), Vector::Zero(3), Activation::tanh)});
  Mlp re({layer(Matrix::Identity(3, 3), Vector::Zero(3), Activation::relu)});
  const Matrix t = forward(id, x), r = forward(re, x);
  for (Index i = 0; i < x.rows(); ++i) {
    for (Index j = 0; j < 3; ++j) {
      EXPECT_NEAR(t(i, j), std::tanh(x(i, j)), 1e-12);
      EXPECT_EQ(r(i, j), std::max(0.0, x(i, j)));
    }
  }
  Matrix extreme(1, 3);
  extreme << 800.0, -800.0, 0.0;
  const Matrix te = forward(id, extreme);
  EXPECT_EQ(te(0, 0), 1.0);
  EXPECT_EQ(te(0, 1), -1.0);
  EXPECT_EQ(te(0, 2), 0.0);
}

TEST(Mlp, LinearLayerGradientsAreClosedForm) {
  // For out = X W + 1 b^T and loss sum(U .* out): dW = X^T U, db = U^T 1, dX = U W^T.
  Rng rng(2);
  const Matrix x = random_matrix(6, 3, rng), u = random_matrix(6, 2, rng), w = random_matrix(3, 2, rng);
  Mlp net({layer(w, Vector::Zero(2), Activation::identity)});
  const Gradients g = backward(net, x, u);
  EXPECT_LT((g.weight[0] - x.transpose() * u).norm(), 1e-12);
  EXPECT_LT((g.bias[0] - u.colwise().sum().transpose()).norm(), 1e-12);
  EXPECT_LT((g.input - u * w.transpose()).norm(), 1e-12);
}

TEST(Mlp, GradCheckRandomArchitectures) {
  Rng rng(3);
  const Activation acts[] = {Activation::identity, Activation::tanh, Activation::relu};
  for (int trial = 0; trial < 12; ++trial) {
    const Index in = 1 + static_cast<Index>(rng.below(4));
    const Index hidden = 2 + static_cast<Index>(rng.below(6));
    const Index out = 1 + static_cast<Index>(rng.below(2));
    const Index widths[] = {in, hidden, out};
    const Activation a[] = {acts[rng.below(3)], Activation::identity};
    const Mlp net = Mlp::random(widths, a, rng);
    const Matrix x = random_matrix(5, in, rng);
    const Matrix target = random_matrix(5, out, rng);
    const GradCheckReport rep = grad_check(net, squared_loss(target), x, 1e-5);
    EXPECT_TRUE(rep.passed) << "trial " << trial << " error " << rep.max_relative_error;
  }
}

TEST(Mlp, BackwardCanSkipInputGradient) {
  Rng rng(4);
  const Index widths[] = {3, 4, 1};
  const Activation a[] = {Activation::tanh, Activation::identity};
  const Mlp net = Mlp::random(widths, a, rng);
  const Matrix x = random_matrix(7, 3, rng), u = random_matrix(7, 1, rng);
  ForwardTrace trace;
  forward(net, x, trace);
  const Gradients full = backward(net, trace, u, true);
  const Gradients part = backward(net, trace, u, false);
  EXPECT_EQ(part.input.size(), 0);
  EXPECT_EQ((full.flat() - part.flat()).norm(), 0.0);
}

TEST(Mlp, ParameterRoundTripAndLayout) {
  Matrix w(2, 1);
  w << 1, 2;
  Vector b(1);
  b << 3;
  Mlp net({layer(w, b, Activation::identity)});
  EXPECT_EQ(net.parameter_count(), 3);
  Vector p = net.parameters();
  EXPECT_EQ(p, (Vector(3) << 1, 2, 3).finished());
  p << 4, 5, 6;
  net.set_parameters(p);
  EXPECT_DOUBLE_EQ(net.layers()[0].weight(1, 0), 5);
  EXPECT_DOUBLE_EQ(net.layers()[0].bias(0), 6);
  EXPECT_THROW(net.set_parameters(Vector(2)), DimensionError);
}

TEST(Mlp, ConstructionValidates) {
  EXPECT_THROW(Mlp({layer(Matrix::Ones(2, 3), Vector::Zero(3), Activation::tanh),
                    layer(Matrix::Ones(2, 1), Vector::Zero(1), Activation::identity)}),
               DimensionError);
  EXPECT_THROW(Mlp({layer(Matrix::Ones(2, 3), Vector::Zero(2), Activation::tanh)}), DimensionError);
  Matrix bad = Matrix::Ones(1, 1);
  bad(0, 0) = std::nan("");
  EXPECT_THROW(Mlp({layer(bad, Vector::Zero(1), Activation::tanh)}), DataError);
  const Mlp net({layer(Matrix::Ones(2, 1), Vector::Zero(1), Activation::identity)});
  EXPECT_THROW(forward(net, Matrix::Ones(3, 3)), DimensionError);
  EXPECT_THROW(activation_from_string("sigmoid"), DataError);
  EXPECT_EQ(activation_from_string(to_string(Activation::relu)), Activation::relu);
}

TEST(Mlp, RandomInitWithinFanInBound) {
  Rng rng(5);
  const Index widths[] = {9, 4};
  const Activation a[] = {Activation::tanh};
  const Mlp net = Mlp::random(widths, a, rng);
  EXPECT_LE(net.parameters().cwiseAbs().maxCoeff(), 1.0 / 3.0);
}

TEST(ClipWeights, ClampsEveryEntry) {
  Rng rng(6);
  const Index widths[] = {3, 5, 1};
  const Activation a[] = {Activation::relu, Activation::identity};
  Mlp net = Mlp::random(widths, a, rng);
  Vector p = net.parameters() * 10.0;
  net.set_parameters(p);
  const Mlp c = clip_weights(net, 0.1);
  const Vector q = c.parameters();
  for (Index i = 0; i < p.size(); ++i) {
    EXPECT_LE(std::abs(q(i)), 0.1);
    EXPECT_DOUBLE_EQ(q(i), std::clamp(p(i), -0.1, 0.1));
  }
  EXPECT_THROW(clip_weights(net, 0.0), DataError);
}

TEST(Optimizers, SgdAndAdamSteps) {
  Vector p = Vector::Zero(2), g(2);
  g << 1.0, -2.0;
  Sgd sgd(0.1);
  sgd.step(p, g);
  EXPECT_NEAR(p(0), -0.1, 1e-15);
  EXPECT_NEAR(p(1), 0.2, 1e-15);

  // After bias correction the first Adam step is lr * g / (|g| + eps).
  Vector q = Vector::Zero(2);
  Adam adam(0.01);
  adam.step(q, g);
  EXPECT_NEAR(q(0), -0.01, 1e-9);
  EXPECT_NEAR(q(1), 0.01, 1e-9);
  EXPECT_EQ(adam.steps(), 1);
  EXPECT_THROW(adam.step(q, Vector(3)), DimensionError);
}

TEST(Optimizers, AdamMinimisesAQuadratic) {
  Vector p(2);
  p << 3, -4;
  Adam adam(0.05);
  for (int i = 0; i < 3000; ++i) adam.step(p, 2.0 * p);
  EXPECT_LT(p.norm(), 1e-2);
}
