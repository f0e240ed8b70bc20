#include "msda/adversarial.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "msda/rng.hpp"

namespace msda {

void AdvConfig::validate() const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw DataError("lambda must be >= 0");
  if (epochs < 1) throw DataError("epochs must be >= 1");
  if (critic_steps < 1) throw DataError("critic steps must be >= 1");
  if (batch_size < 0) throw DataError("batch size must be >= 0");
  if (!(clip > 0.0)) throw DataError("clip constant must be > 0");
  if (!(lr_generator > 0.0) || !(lr_critic > 0.0)) throw DataError("learning rates must be > 0");
  if (!(warmup_fraction >= 0.0 && warmup_fraction <= 1.0)) {
    throw DataError("warm-up fraction must lie in [0, 1]");
  }
  if (!(divergence_limit > 0.0)) throw DataError("divergence limit must be > 0");
  if (shape.hidden < 1 || shape.representation < 1 || shape.critic_hidden < 1) {
    throw DataError("network widths must be >= 1");
  }
}

// ---------------------------------------------------------------- scaler

Matrix AffineScaler::apply(const Matrix& x) const {
  if (x.cols() != shift.size()) {
    throw DimensionError("expected " + std::to_string(shift.size()) + " features, got " +
                         std::to_string(x.cols()));
  }
  return (x.rowwise() - shift.transpose()).array().rowwise() / scale.transpose().array();
}

AffineScaler AffineScaler::fit(const Matrix& x) {
  AffineScaler s;
  const double n = static_cast<double>(x.rows());
  s.shift = x.colwise().mean().transpose();
  s.scale.resize(x.cols());
  for (Index j = 0; j < x.cols(); ++j) {
    const double var = (x.col(j).array() - s.shift(j)).square().sum() / std::max(1.0, n - 1.0);
    s.scale(j) = var > 0.0 ? std::sqrt(var) : 1.0;
  }
  return s;
}

AffineScaler AffineScaler::identity(Index p) {
  return AffineScaler{Vector::Zero(p), Vector::Ones(p)};
}

// ---------------------------------------------------------------- learner

Matrix AdaptedLearner::transform(const Matrix& x) const {
  return nn::forward(feature_map, input.apply(x));
}

Vector AdaptedLearner::regress(const Matrix& z) const {
  const Matrix out = nn::forward(regressor, z);
  return (out.col(0).array() * output_scale + output_shift).matrix();
}

Vector AdaptedLearner::predict(const Matrix& x) const { return regress(transform(x)); }

// ---------------------------------------------------------------- losses

double weighted_regression_loss(const Vector& prediction, const Vector& y, const Vector& weights) {
  if (prediction.size() != y.size() || weights.size() != y.size()) {
    throw DimensionError("predictions, outcomes and weights must have equal length");
  }
  if (y.size() == 0) return 0.0;
  return (weights.array() * (y - prediction).array().square()).sum() /
         static_cast<double>(y.size());
}

double critic_gap(const Vector& source_scores, const Vector& target_scores, const Vector& weights) {
  if (source_scores.size() != weights.size()) {
    throw DimensionError("source scores and weights must have equal length");
  }
  if (source_scores.size() == 0 || target_scores.size() == 0) {
    throw DataError("critic gap needs non-empty source and target");
  }
  return weights.dot(source_scores) / static_cast<double>(source_scores.size()) -
         target_scores.mean();
}

double loss_regression(const AdaptedLearner& learner, const DomainData& source,
                       const Vector& weights) {
  return weighted_regression_loss(learner.predict(source.features()), source.outcomes(), weights);
}

double loss_da(const nn::Mlp& critic, const AdaptedLearner& learner, const DomainData& source,
               const DomainData& target, const Vector& weights) {
  const Vector s = nn::forward(critic, learner.transform(source.features())).col(0);
  const Vector t = nn::forward(critic, learner.transform(target.features())).col(0);
  return critic_gap(s, t, weights);
}

// ---------------------------------------------------------------- training

namespace {

AdaptedLearner initial_learner(const DomainData& source, const AdvConfig& cfg) {
  const Index p = source.dim();
  Rng rng(derive_seed(cfg.seed, "adversarial/init"));
  AdaptedLearner l;
  l.input = AffineScaler::fit(source.features());
  const Vector& y = source.outcomes();
  l.output_shift = y.mean();
  const double var = y.size() > 1 ? (y.array() - l.output_shift).square().sum() / (y.size() - 1.0)
                                  : 0.0;
  l.output_scale = var > 0.0 ? std::sqrt(var) : 1.0;

  using nn::Activation;
  Index rep = 0;
  if (cfg.shape.linear) {
    rep = p;
    nn::Layer id{Matrix::Identity(p, p), Vector::Zero(p), Activation::identity};
    l.feature_map = nn::Mlp({id});
  } else {
    rep = cfg.shape.representation;
    const std::array<Index, 3> w{p, cfg.shape.hidden, rep};
    const std::array<Activation, 2> a{Activation::tanh, Activation::identity};
    l.feature_map = nn::Mlp::random(w, a, rng);
  }
  const std::array<Index, 2> wr{rep, 1};
  const std::array<Activation, 1> ar{Activation::identity};
  l.regressor = nn::Mlp::random(wr, ar, rng);
  const std::array<Index, 3> wc{rep, cfg.shape.critic_hidden, 1};
  const std::array<Activation, 2> ac{Activation::relu, Activation::identity};
  l.critic = nn::clip_weights(nn::Mlp::random(wc, ac, rng), cfg.clip);
  return l;
}

Matrix rows_of(const Matrix& m, const std::vector<Index>& idx) {
  Matrix out(static_cast<Index>(idx.size()), m.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Index>(i)) = m.row(idx[i]);
  return out;
}

Vector entries_of(const Vector& v, const std::vector<Index>& idx) {
  Vector out(static_cast<Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) out(static_cast<Index>(i)) = v(idx[i]);
  return out;
}

void check_finite(double value, double limit, const char* what, int epoch,
                  const std::vector<EpochRecord>& history) {
  if (!std::isfinite(value) || std::abs(value) > limit) {
    throw DivergenceError(std::string("training diverged: ") + what + " = " +
                              std::to_string(value) + " at epoch " + std::to_string(epoch),
                          epoch, history);
  }
}

}  // namespace

AdaptedLearner train_adversarial(const DomainData& source, const DomainData& target,
                                 const Vector& weights, const AdvConfig& cfg,
                                 const AdaptedLearner* warm_start) {
  cfg.validate();
  const Matrix& xs_raw = source.features();
  const Vector& y = source.outcomes();
  const Index ns = xs_raw.rows();
  if (ns == 0) throw DataError("source domain is empty");
  if (weights.size() != ns) {
    throw DimensionError("weights have length " + std::to_string(weights.size()) +
                         ", source has " + std::to_string(ns) + " rows");
  }
  if ((weights.array() < 0.0).any() || !weights.allFinite()) {
    throw DataError("weights must be finite and non-negative");
  }
  const bool adversarial = cfg.lambda > 0.0;
  if (adversarial && target.dim() != source.dim()) {
    throw DimensionError("source and target feature dimensions differ");
  }

  AdaptedLearner l = warm_start != nullptr ? *warm_start : initial_learner(source, cfg);
  if (l.feature_map.input_dim() != source.dim()) {
    throw DimensionError("warm start learner expects " +
                         std::to_string(l.feature_map.input_dim()) + " features");
  }
  l.history.clear();
  l.history.reserve(static_cast<std::size_t>(cfg.epochs));

  const Matrix xs = l.input.apply(xs_raw);
  const Vector ys = ((y.array() - l.output_shift) / l.output_scale).matrix();
  Matrix xt;
  if (adversarial) {
    xt = l.input.apply(target.features());
    if (xt.rows() == 0) throw DataError("target domain is empty");
  }
  const Index nt = xt.rows();
  const double out2 = l.output_scale * l.output_scale;

  const bool full = cfg.batch_size == 0 || cfg.batch_size >= ns;
  const Index batch = full ? ns : cfg.batch_size;
  const Index batches = (ns + batch - 1) / batch;
  Rng batch_rng(derive_seed(cfg.seed, "adversarial/batches"));

  nn::Adam opt_f(cfg.lr_generator), opt_y(cfg.lr_generator), opt_d(cfg.lr_critic);
  Vector theta_f = l.feature_map.parameters();
  Vector theta_y = l.regressor.parameters();
  Vector theta_d = l.critic.parameters();
  const int warm_epochs = static_cast<int>(std::ceil(cfg.warmup_fraction * cfg.epochs));

  nn::ForwardTrace tf, ty, td;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lam =
        !adversarial ? 0.0
        : warm_epochs > 0 ? cfg.lambda * std::min(1.0, static_cast<double>(epoch + 1) / warm_epochs)
                          : cfg.lambda;
    std::vector<std::size_t> perm_s, perm_t;
    if (!full) {
      perm_s = batch_rng.permutation(static_cast<std::size_t>(ns));
      if (adversarial) perm_t = batch_rng.permutation(static_cast<std::size_t>(nt));
    }
    EpochRecord rec;
    for (Index b = 0; b < batches; ++b) {
      Matrix bx, bxt;
      Vector by, bw;
      if (full) {
        bx = xs;
        by = ys;
        bw = weights;
        if (adversarial) bxt = xt;
      } else {
        const Index lo = b * batch, hi = std::min(ns, lo + batch);
        std::vector<Index> is, it;
        for (Index i = lo; i < hi; ++i) is.push_back(static_cast<Index>(perm_s[i]));
        bx = rows_of(xs, is);
        by = entries_of(ys, is);
        bw = entries_of(weights, is);
        if (adversarial) {
          for (Index i = lo; i < hi; ++i) it.push_back(static_cast<Index>(perm_t[i % nt]));
          bxt = rows_of(xt, it);
        }
      }
      const double nb = static_cast<double>(bx.rows());

      // Source rows first, then target rows, through one pass of each net.
      const Index nsb = bx.rows();
      const Index ntb = adversarial ? bxt.rows() : 0;
      Matrix stacked(nsb + ntb, bx.cols());
      stacked.topRows(nsb) = bx;
      if (adversarial) stacked.bottomRows(ntb) = bxt;
      const Matrix z = nn::forward(l.feature_map, stacked, tf);
      double gap = 0.0;
      Matrix up_d;
      if (adversarial) {
        up_d.resize(nsb + ntb, 1);
        up_d.topRows(nsb) = bw / nb;
        up_d.bottomRows(ntb).setConstant(-1.0 / static_cast<double>(ntb));
        for (int k = 0; k < cfg.critic_steps; ++k) {
          const Matrix d = nn::forward(l.critic, z, td);
          gap = critic_gap(d.topRows(nsb).col(0), d.bottomRows(ntb).col(0), bw);
          check_finite(gap, cfg.divergence_limit, "critic gap", epoch, l.history);
          // ascent on the gap
          opt_d.step(theta_d, -nn::backward(l.critic, td, up_d, false).flat());
          l.critic.set_parameters(theta_d);
          l.critic = nn::clip_weights(l.critic, cfg.clip);
          theta_d = l.critic.parameters();
        }
      }

      const Matrix pred = nn::forward(l.regressor, z.topRows(nsb), ty);
      const Vector resid = pred.col(0) - by;
      const double lr_std = (bw.array() * resid.array().square()).sum() / nb;
      check_finite(lr_std * out2, cfg.divergence_limit, "regression loss", epoch, l.history);
      const Matrix up_pred = (2.0 / nb) * bw.cwiseProduct(resid);
      const nn::Gradients gy = nn::backward(l.regressor, ty, up_pred);
      Matrix dz = Matrix::Zero(nsb + ntb, z.cols());
      dz.topRows(nsb) = gy.input;
      if (adversarial && lam > 0.0) {
        const Matrix d = nn::forward(l.critic, z, td);
        gap = critic_gap(d.topRows(nsb).col(0), d.bottomRows(ntb).col(0), bw);
        dz += nn::backward(l.critic, td, lam * up_d).input;
      }
      const Vector gf = nn::backward(l.feature_map, tf, dz, false).flat();
      if (!cfg.shape.linear) {
        opt_f.step(theta_f, gf);
        l.feature_map.set_parameters(theta_f);
      }
      opt_y.step(theta_y, gy.flat());
      l.regressor.set_parameters(theta_y);

      rec.regression_loss += lr_std * out2 * nb / static_cast<double>(ns);
      rec.critic_gap += gap * nb / static_cast<double>(ns);
    }
    l.history.push_back(rec);
  }

  l.weighted_loss = weighted_regression_loss(l.predict(xs_raw), y, weights);
  check_finite(l.weighted_loss, cfg.divergence_limit, "final regression loss", cfg.epochs,
               l.history);
  return l;
}

AdaptedLearner train_plain_regression(const DomainData& source, AdvConfig cfg) {
  cfg.lambda = 0.0;
  const DomainData none;
  return train_adversarial(source, none, Vector::Ones(source.size()), cfg);
}

}  // namespace msda
