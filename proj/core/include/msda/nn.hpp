#pragma once

#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "msda/data.hpp"
#include "msda/rng.hpp"

namespace msda::nn {

enum class Activation { identity, tanh, relu };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& s);

/// One dense layer: out = act(in * weight + bias^T), weight is in_dim x out_dim.
struct Layer {
  Matrix weight;
  Vector bias;
  Activation activation = Activation::identity;

  Index in_dim() const { return weight.rows(); }
  Index out_dim() const { return weight.cols(); }
};

/// Dense feedforward network. Construction validates that layer dimensions
/// chain and that every parameter is finite.
class Mlp {
 public:
  Mlp() = default;
  explicit Mlp(std::vector<Layer> layers);

  /// widths = {in, h1, ..., out}; activations has one entry per layer.
  /// Entries are drawn from uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)).
  static Mlp random(std::span<const Index> widths, std::span<const Activation> activations,
                    Rng& rng);

  Index input_dim() const;
  Index output_dim() const;
  bool empty() const { return layers_.empty(); }
  const std::vector<Layer>& layers() const { return layers_; }

  Index parameter_count() const;
  /// Layer by layer: weight (column-major), then bias.
  Vector parameters() const;
  void set_parameters(const Vector& flat);

 private:
  std::vector<Layer> layers_;
};

/// Intermediate values kept by forward() for backward().
/// Buffers are reused when a trace is passed to forward() repeatedly.
struct ForwardTrace {
  Matrix input;                     // network input
  std::vector<Matrix> activations;  // output of each layer after the nonlinearity

  const Matrix& layer_input(std::size_t i) const { return i == 0 ? input : activations[i - 1]; }
};

Matrix forward(const Mlp& net, const Matrix& x);
Matrix forward(const Mlp& net, const Matrix& x, ForwardTrace& trace);

struct Gradients {
  std::vector<Matrix> weight;
  std::vector<Vector> bias;
  Matrix input;

  /// Same layout as Mlp::parameters().
  Vector flat() const;
};

/// Gradients of sum(upstream .* forward(net, x)) with respect to every
/// parameter and to x.
/// With want_input false the input gradient is left empty.
Gradients backward(const Mlp& net, const ForwardTrace& trace, const Matrix& upstream,
                   bool want_input = true);
Gradients backward(const Mlp& net, const Matrix& x, const Matrix& upstream);

/// loss(output) -> (value, d value / d output)
using LossFn = std::function<std::pair<double, Matrix>(const Matrix&)>;

struct GradCheckReport {
  double max_relative_error = 0.0;
  Index worst_parameter = -1;  // index into parameters(); -1 when the input block is worst
  Index checked = 0;
  bool passed = false;
};

/// Compare backward() against central differences over every parameter and
/// every input entry. Relative error is |a - n| / max(|a|, |n|, floor).
GradCheckReport grad_check(const Mlp& net, const LossFn& loss, const Matrix& x, double tol,
                           double step = 1e-5, double floor = 1e-5);

/// Plain gradient descent with optional heavy-ball momentum.
class Sgd {
 public:
  explicit Sgd(double learning_rate, double momentum = 0.0)
      : learning_rate_(learning_rate), momentum_(momentum) {}
  void step(Vector& params, const Vector& grad);
  long steps() const { return steps_; }

 private:
  double learning_rate_;
  double momentum_;
  Vector velocity_;
  long steps_ = 0;
};

class Adam {
 public:
  explicit Adam(double learning_rate, double beta1 = 0.9, double beta2 = 0.999,
                double epsilon = 1e-8)
      : learning_rate_(learning_rate), beta1_(beta1), beta2_(beta2), epsilon_(epsilon) {}
  void step(Vector& params, const Vector& grad);
  long steps() const { return steps_; }
  double learning_rate() const { return learning_rate_; }

 private:
  double learning_rate_, beta1_, beta2_, epsilon_;
  Vector m_, v_;
  long steps_ = 0;
};

/// Clamp every weight and bias entry into [-c, c].
Mlp clip_weights(const Mlp& net, double c);

}  // namespace msda::nn
