#include "msda/nn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace msda::nn {
namespace {

void apply_activation(Activation a, Matrix& m) {
  switch (a) {
    case Activation::identity:
      break;
    case Activation::tanh: {
      // sign(x) (1 - e) / (1 + e), e = exp(-2|x|); vectorises through exp
      const Eigen::ArrayXXd e = (-2.0 * m.array().abs()).exp();
      m = (m.array().sign() * (1.0 - e) / (1.0 + e)).matrix();
      break;
    }
    case Activation::relu:
      m = m.array().max(0.0).matrix();
      break;
  }
}

// Derivative of the nonlinearity expressed through its output.
Matrix activation_derivative(Activation a, const Matrix& out) {
  switch (a) {
    case Activation::tanh:
      return (1.0 - out.array().square()).matrix();
    case Activation::relu: {
      // 1 for out >= DBL_MIN, 0 for out == 0; avoids a per-element compare
      constexpr double tiny = std::numeric_limits<double>::min();
      return (out.array().min(tiny) * (1.0 / tiny)).matrix();
    }
    case Activation::identity:
      break;
  }
  return Matrix::Ones(out.rows(), out.cols());
}

void check_input(const Mlp& net, const Matrix& x) {
  if (net.empty()) throw DimensionError("forward: network has no layers");
  if (x.cols() != net.input_dim()) {
    throw DimensionError("layer 0 expects " + std::to_string(net.input_dim()) +
                         " input columns, got " + std::to_string(x.cols()));
  }
}

}  // namespace

std::string to_string(Activation a) {
  switch (a) {
    case Activation::identity:
      return "identity";
    case Activation::tanh:
      return "tanh";
    case Activation::relu:
      return "relu";
  }
  return "identity";
}

Activation activation_from_string(const std::string& s) {
  if (s == "identity") return Activation::identity;
  if (s == "tanh") return Activation::tanh;
  if (s == "relu") return Activation::relu;
  throw DataError("unknown activation '" + s + "'");
}

Mlp::Mlp(std::vector<Layer> layers) : layers_(std::move(layers)) {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const Layer& l = layers_[i];
    if (l.bias.size() != l.out_dim()) {
      throw DimensionError("layer " + std::to_string(i) + ": bias has " +
                           std::to_string(l.bias.size()) + " entries for " +
                           std::to_string(l.out_dim()) + " outputs");
    }
    if (i > 0 && layers_[i - 1].out_dim() != l.in_dim()) {
      throw DimensionError("layer " + std::to_string(i) + " expects " +
                           std::to_string(l.in_dim()) + " inputs but layer " +
                           std::to_string(i - 1) + " produces " +
                           std::to_string(layers_[i - 1].out_dim()));
    }
    if (!l.weight.allFinite() || !l.bias.allFinite()) {
      throw DataError("layer " + std::to_string(i) + " has non-finite parameters");
    }
  }
}

Mlp Mlp::random(std::span<const Index> widths, std::span<const Activation> activations, Rng& rng) {
  if (widths.size() < 2 || activations.size() != widths.size() - 1) {
    throw DimensionError("Mlp::random: need widths.size() == activations.size() + 1 >= 2");
  }
  std::vector<Layer> layers;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    const Index in = widths[i];
    const Index out = widths[i + 1];
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    Layer l{Matrix(in, out), Vector(out), activations[i]};
    for (Index c = 0; c < out; ++c) {
      for (Index r = 0; r < in; ++r) l.weight(r, c) = rng.uniform(-bound, bound);
    }
    for (Index c = 0; c < out; ++c) l.bias(c) = rng.uniform(-bound, bound);
    layers.push_back(std::move(l));
  }
  return Mlp(std::move(layers));
}

Index Mlp::input_dim() const { return layers_.empty() ? 0 : layers_.front().in_dim(); }
Index Mlp::output_dim() const { return layers_.empty() ? 0 : layers_.back().out_dim(); }

Index Mlp::parameter_count() const {
  Index n = 0;
  for (const auto& l : layers_) n += l.weight.size() + l.bias.size();
  return n;
}

Vector Mlp::parameters() const {
  Vector flat(parameter_count());
  Index at = 0;
  for (const auto& l : layers_) {
    flat.segment(at, l.weight.size()) = l.weight.reshaped();
    at += l.weight.size();
    flat.segment(at, l.bias.size()) = l.bias;
    at += l.bias.size();
  }
  return flat;
}

void Mlp::set_parameters(const Vector& flat) {
  if (flat.size() != parameter_count()) {
    throw DimensionError("set_parameters: expected " + std::to_string(parameter_count()) +
                         " values, got " + std::to_string(flat.size()));
  }
  Index at = 0;
  for (auto& l : layers_) {
    l.weight.reshaped() = flat.segment(at, l.weight.size());
    at += l.weight.size();
    l.bias = flat.segment(at, l.bias.size());
    at += l.bias.size();
  }
}

Matrix forward(const Mlp& net, const Matrix& x) {
  check_input(net, x);
  Matrix h = x;
  for (const auto& l : net.layers()) {
    Matrix z = h * l.weight;
    z.rowwise() += l.bias.transpose();
    apply_activation(l.activation, z);
    h = std::move(z);
  }
  return h;
}

Matrix forward(const Mlp& net, const Matrix& x, ForwardTrace& trace) {
  check_input(net, x);
  const auto& layers = net.layers();
  trace.input = x;
  trace.activations.resize(layers.size());
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const Layer& l = layers[i];
    Matrix& z = trace.activations[i];
    z.noalias() = trace.layer_input(i) * l.weight;
    z.rowwise() += l.bias.transpose();
    apply_activation(l.activation, z);
  }
  return trace.activations.back();
}

Gradients backward(const Mlp& net, const ForwardTrace& trace, const Matrix& upstream,
                   bool want_input) {
  const auto& layers = net.layers();
  if (trace.activations.size() != layers.size()) {
    throw DimensionError("backward: trace does not match the network");
  }
  const Matrix& out = trace.activations.back();
  if (upstream.rows() != out.rows() || upstream.cols() != out.cols()) {
    throw DimensionError("backward: upstream gradient is " + std::to_string(upstream.rows()) +
                         "x" + std::to_string(upstream.cols()) + ", output is " +
                         std::to_string(out.rows()) + "x" + std::to_string(out.cols()));
  }
  Gradients g;
  g.weight.resize(layers.size());
  g.bias.resize(layers.size());
  Matrix grad = upstream;
  for (std::size_t i = layers.size(); i-- > 0;) {
    const Layer& l = layers[i];
    Matrix delta;
    if (l.activation == Activation::identity) {
      delta = std::move(grad);
    } else {
      delta = grad.cwiseProduct(activation_derivative(l.activation, trace.activations[i]));
    }
    g.weight[i].noalias() = trace.layer_input(i).transpose() * delta;
    g.bias[i] = delta.colwise().sum().transpose();
    if (i > 0 || want_input) grad.noalias() = delta * l.weight.transpose();
  }
  if (want_input) g.input = std::move(grad);
  return g;
}

Gradients backward(const Mlp& net, const Matrix& x, const Matrix& upstream) {
  ForwardTrace trace;
  forward(net, x, trace);
  return backward(net, trace, upstream);
}

Vector Gradients::flat() const {
  Index n = 0;
  for (std::size_t i = 0; i < weight.size(); ++i) n += weight[i].size() + bias[i].size();
  Vector out(n);
  Index at = 0;
  for (std::size_t i = 0; i < weight.size(); ++i) {
    out.segment(at, weight[i].size()) = weight[i].reshaped();
    at += weight[i].size();
    out.segment(at, bias[i].size()) = bias[i];
    at += bias[i].size();
  }
  return out;
}

GradCheckReport grad_check(const Mlp& net, const LossFn& loss, const Matrix& x, double tol,
                           double step, double floor) {
  ForwardTrace trace;
  const Matrix out = forward(net, x, trace);
  const auto [value, upstream] = loss(out);
  (void)value;
  const Gradients analytic = backward(net, trace, upstream);
  const Vector flat_analytic = analytic.flat();

  GradCheckReport report;
  auto consider = [&](double a, double n, Index which) {
    const double denom = std::max({std::abs(a), std::abs(n), floor});
    const double rel = std::abs(a - n) / denom;
    if (report.checked == 0 || rel > report.max_relative_error) {
      report.max_relative_error = rel;
      report.worst_parameter = which;
    }
    ++report.checked;
  };

  Mlp probe = net;
  const Vector theta = net.parameters();
  for (Index k = 0; k < theta.size(); ++k) {
    Vector t = theta;
    t(k) = theta(k) + step;
    probe.set_parameters(t);
    const double plus = loss(forward(probe, x)).first;
    t(k) = theta(k) - step;
    probe.set_parameters(t);
    const double minus = loss(forward(probe, x)).first;
    consider(flat_analytic(k), (plus - minus) / (2.0 * step), k);
  }
  for (Index r = 0; r < x.rows(); ++r) {
    for (Index c = 0; c < x.cols(); ++c) {
      Matrix xp = x;
      xp(r, c) += step;
      const double plus = loss(forward(net, xp)).first;
      xp(r, c) = x(r, c) - step;
      const double minus = loss(forward(net, xp)).first;
      consider(analytic.input(r, c), (plus - minus) / (2.0 * step), -1);
    }
  }
  report.passed = report.max_relative_error <= tol;
  return report;
}

void Sgd::step(Vector& params, const Vector& grad) {
  if (params.size() != grad.size()) throw DimensionError("Sgd::step: size mismatch");
  if (momentum_ != 0.0) {
    if (velocity_.size() != params.size()) velocity_ = Vector::Zero(params.size());
    velocity_ = momentum_ * velocity_ + grad;
    params -= learning_rate_ * velocity_;
  } else {
    params -= learning_rate_ * grad;
  }
  ++steps_;
}

void Adam::step(Vector& params, const Vector& grad) {
  if (params.size() != grad.size()) throw DimensionError("Adam::step: size mismatch");
  if (m_.size() != params.size()) {
    m_ = Vector::Zero(params.size());
    v_ = Vector::Zero(params.size());
  }
  ++steps_;
  m_ = beta1_ * m_ + (1.0 - beta1_) * grad;
  v_ = beta2_ * v_ + (1.0 - beta2_) * grad.cwiseAbs2();
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(steps_));
  params.array() -=
      learning_rate_ * (m_.array() / c1) / ((v_.array() / c2).sqrt() + epsilon_);
}

Mlp clip_weights(const Mlp& net, double c) {
  if (!(c > 0.0)) throw DataError("clip_weights: c must be positive");
  std::vector<Layer> layers = net.layers();
  for (auto& l : layers) {
    l.weight = l.weight.cwiseMax(-c).cwiseMin(c);
    l.bias = l.bias.cwiseMax(-c).cwiseMin(c);
  }
  return Mlp(std::move(layers));
}

}  // namespace msda::nn
