#pragma once

#include <cstdint>
#include <vector>

#include "msda/data.hpp"
#include "msda/nn.hpp"

namespace msda {

/// Network widths for the feature map, regressor head and critic.
struct NetworkShape {
  Index hidden = 16;          // feature map hidden width (tanh)
  Index representation = 8;   // feature map output width
  Index critic_hidden = 16;   // critic hidden width (relu)
  /// Feature map is a single identity layer of width p; the composite
  /// predictor is then linear in x.
  bool linear = false;
};

struct AdvConfig {
  double lambda = 1.0;
  int epochs = 2000;
  /// Rows per generator step; 0 means the full source domain.
  Index batch_size = 0;
  int critic_steps = 5;
  double clip = 0.1;
  double lr_generator = 1e-3;
  double lr_critic = 5e-4;
  /// lambda ramps linearly from 0 over this fraction of the epochs.
  double warmup_fraction = 0.1;
  double divergence_limit = 1e6;
  NetworkShape shape;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Per-column affine map (x - shift) / scale.
struct AffineScaler {
  Vector shift;
  Vector scale;

  Matrix apply(const Matrix& x) const;
  static AffineScaler fit(const Matrix& x);
  static AffineScaler identity(Index p);
};

struct EpochRecord {
  double regression_loss = 0.0;  // L_R
  double critic_gap = 0.0;       // weighted source mean minus target mean of critic scores
};

/// G_f (input scaling followed by feature_map), G_y (regressor followed by
/// the outcome affine map) and the critic d.
struct AdaptedLearner {
  AffineScaler input;
  nn::Mlp feature_map;
  nn::Mlp regressor;
  double output_shift = 0.0;
  double output_scale = 1.0;
  nn::Mlp critic;
  /// Weighted regression loss at the final parameters, outcome units squared.
  double weighted_loss = 0.0;
  std::vector<EpochRecord> history;

  /// G_f(x).
  Matrix transform(const Matrix& x) const;
  /// G_y(z).
  Vector regress(const Matrix& z) const;
  /// G_y(G_f(x)).
  Vector predict(const Matrix& x) const;
};

/// (1/n) sum_i w_i (y_i - pred_i)^2.
double weighted_regression_loss(const Vector& prediction, const Vector& y, const Vector& weights);
/// (1/n_s) sum_i w_i d_s_i - (1/n_t) sum_j d_t_j.
double critic_gap(const Vector& source_scores, const Vector& target_scores, const Vector& weights);

double loss_regression(const AdaptedLearner& learner, const DomainData& source, const Vector& weights);
double loss_da(const nn::Mlp& critic, const AdaptedLearner& learner, const DomainData& source,
               const DomainData& target, const Vector& weights);

/// Raised when a loss becomes non-finite or exceeds the divergence limit.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, int epoch, std::vector<EpochRecord> history)
      : Error(what), epoch_(epoch), history_(std::move(history)) {}
  int epoch() const { return epoch_; }
  const std::vector<EpochRecord>& history() const { return history_; }

 private:
  int epoch_;
  std::vector<EpochRecord> history_;
};

/// Alternating optimisation of L_R + lambda L_DA. Per epoch: critic_steps
/// ascent steps on L_DA for the critic (clipped after each), then one descent
/// step for the feature map and regressor. The weights are held
/// fixed. With lambda == 0 the target is never read. When `warm_start` is
/// given its parameters are the starting point; otherwise networks are
/// initialised from cfg.seed.
AdaptedLearner train_adversarial(const DomainData& source, const DomainData& target,
                                 const Vector& weights, const AdvConfig& cfg,
                                 const AdaptedLearner* warm_start = nullptr);

/// Unweighted, non-adversarial fit of the same network family (lambda = 0,
/// unit weights).
AdaptedLearner train_plain_regression(const DomainData& source, AdvConfig cfg);

}  // namespace msda
