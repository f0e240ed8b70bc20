#include "msda/single_da.hpp"

#include <cmath>

#include "msda/rng.hpp"

namespace msda {

void SingleDaConfig::validate() const {
  if (max_iterations < 1) throw DataError("max iterations must be >= 1");
  if (!(tolerance > 0.0)) throw DataError("tolerance must be > 0");
  adversarial.validate();
}

SingleDaResult run_single_da(const DomainData& source, const DomainData& target,
                             const SingleDaConfig& cfg) {
  cfg.validate();
  if (!source.labeled()) throw DataError("source domain '" + source.name() + "' has no outcomes");
  if (target.dim() != source.dim()) {
    throw DimensionError("source has " + std::to_string(source.dim()) + " features, target has " +
                         std::to_string(target.dim()));
  }
  const Vector& y = source.outcomes();

  SingleDaResult result;
  Matrix feat_s = source.features();
  Matrix feat_t;
  if (!cfg.force_unit_weights) feat_t = target.features();

  for (int t = 1; t <= cfg.max_iterations; ++t) {
    try {
      Vector w, cat;
      std::optional<ImportanceModel> model;
      Warnings notes;
      if (cfg.force_unit_weights) {
        w = Vector::Ones(y.size());
        cat = Vector::Ones(1);
      } else {
        BbseResult b = estimate_importance_weights(feat_s, y, feat_t, cfg.bbse,
                                                   derive_seed(cfg.seed, "single_da/bbse", t));
        w = std::move(b.weights);
        cat = b.model.category_weights;
        notes = std::move(b.warnings);
        model = std::move(b.model);
      }
      const AdaptedLearner* start = (t > 1 && cfg.warm_start) ? &result.learner : nullptr;
      AdaptedLearner learner = train_adversarial(source, target, w, cfg.adversarial, start);

      const Vector prev = result.category_weights.empty() ? Vector() : result.category_weights.back();
      result.learner = std::move(learner);
      result.importance = std::move(model);
      result.weights = std::move(w);
      result.category_weights.push_back(cat);
      result.iterations = t;
      for (auto& n : notes) result.warnings.push_back("iteration " + std::to_string(t) + ": " + n);

      if (cfg.force_unit_weights) {
        result.converged = true;
        break;
      }
      if (t > 1 && prev.size() == cat.size() &&
          (cat - prev).cwiseAbs().maxCoeff() < cfg.tolerance) {
        result.converged = true;
        break;
      }
      if (t < cfg.max_iterations) {
        feat_s = result.learner.transform(source.features());
        feat_t = result.learner.transform(target.features());
      }
    } catch (const Error& e) {
      if (t == 1) throw;
      result.degraded = true;
      result.degraded_reason = "iteration " + std::to_string(t) + ": " + e.what();
      result.warnings.push_back(result.degraded_reason);
      break;
    }
  }
  return result;
}

Vector predict(const SingleDaResult& result, const Matrix& x) { return result.learner.predict(x); }

}  // namespace msda
