#include "msda/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "msda/parallel.hpp"
#include "msda/qp.hpp"
#include "msda/rng.hpp"
#include "msda/stats.hpp"

namespace msda::sim {

std::string to_string(Scenario s) {
  switch (s) {
    case Scenario::ts_linear: return "ts-linear";
    case Scenario::ts_sine: return "ts-sine";
    case Scenario::ts_mixture: return "ts-mixture";
    case Scenario::msda_hier: return "msda-hier";
  }
  return "?";
}

Scenario scenario_from_string(const std::string& s) {
  for (Scenario c : {Scenario::ts_linear, Scenario::ts_sine, Scenario::ts_mixture,
                     Scenario::msda_hier}) {
    if (to_string(c) == s) return c;
  }
  throw DataError("unknown scenario '" + s +
                  "' (expected ts-linear, ts-sine, ts-mixture or msda-hier)");
}

std::string to_string(GaussianConvention c) {
  return c == GaussianConvention::sd ? "sd" : "variance";
}

GaussianConvention convention_from_string(const std::string& s) {
  if (s == "sd") return GaussianConvention::sd;
  if (s == "variance") return GaussianConvention::variance;
  throw DataError("unknown convention '" + s + "' (expected sd or variance)");
}

void ScenarioSpec::validate() const {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw DataError("sigma must be >= 0");
  if (n < 10) throw DataError("per-domain n must be >= 10");
  if (!single_source() && sources < 1) throw DataError("need at least one source domain");
}

// ---------------------------------------------------------------- sealed outcomes

SealedOutcomes::SealedOutcomes(Vector y) : y_(std::make_shared<const Vector>(std::move(y))) {}

const Vector& SealedOutcomes::read(Key) const {
  if (!y_) throw DataError("no sealed outcomes");
  reads_->fetch_add(1);
  return *y_;
}

double Evaluator::rmse(const Vector& prediction) const {
  return msda::rmse(prediction, sealed_.read({}));
}

// ---------------------------------------------------------------- generators

namespace {

double spread(const ScenarioSpec& s, double b) {
  return s.convention == GaussianConvention::sd ? b : std::sqrt(b);
}

double normal_pdf(double y, double mean, double sd) {
  const double z = (y - mean) / sd;
  return std::exp(-0.5 * z * z) / (sd * std::sqrt(2.0 * std::numbers::pi));
}

Vector draw_normal(Rng& rng, Index n, double mean, double sd) {
  Vector v(n);
  for (Index i = 0; i < n; ++i) v(i) = rng.normal(mean, sd);
  return v;
}

Matrix column(const Vector& v) { return Matrix(v); }

}  // namespace

SimData generate(const ScenarioSpec& spec) {
  spec.validate();
  SimData d;
  const Index n = spec.n;
  Rng rs(derive_seed(spec.seed, "sim/source"));
  Rng rt(derive_seed(spec.seed, "sim/target"));

  auto single = [&](double src_sd, auto outcome_target, auto covariate) {
    const Vector ys = draw_normal(rs, n, 0.0, src_sd);
    Vector xs(n);
    for (Index i = 0; i < n; ++i) xs(i) = covariate(ys(i), rs);
    Vector yt(n), xt(n);
    for (Index i = 0; i < n; ++i) yt(i) = outcome_target(rt);
    for (Index i = 0; i < n; ++i) xt(i) = covariate(yt(i), rt);
    d.sources.emplace_back(column(xs), ys, "source");
    d.target = DomainData(column(xt), std::nullopt, "target");
    d.sealed = SealedOutcomes(std::move(yt));
  };

  switch (spec.scenario) {
    case Scenario::ts_linear:
    case Scenario::ts_sine: {
      const bool sine = spec.scenario == Scenario::ts_sine;
      const double noise = spread(spec, 0.5);
      single(
          spread(spec, 1.0), [&](Rng& r) { return r.normal(0.5, spread(spec, 0.5)); },
          [&](double y, Rng& r) { return (sine ? std::sin(y) : y) + r.normal(0.0, noise); });
      break;
    }
    case Scenario::ts_mixture: {
      const double noise = spread(spec, 1.5);
      single(
          spread(spec, 2.0),
          [&](Rng& r) {
            return r.uniform() < 0.2 ? r.normal(0.2, spread(spec, 0.5))
                                     : r.normal(1.0, spread(spec, 1.0));
          },
          [&](double y, Rng& r) { return y + 3.0 * std::tanh(y) + r.normal(0.0, noise); });
      break;
    }
    case Scenario::msda_hier: {
      const int K = spec.sources;
      Rng rh(derive_seed(spec.seed, "sim/hyper"));
      for (int k = 0; k < K; ++k) d.parameters.mu.push_back(rh.normal(0.0, spec.sigma));
      for (int k = 0; k <= K; ++k) {
        d.parameters.beta1.push_back(rh.normal(1.0, spec.sigma));
        d.parameters.beta2.push_back(rh.normal(2.0, spec.sigma));
      }
      const double noise = spread(spec, 1.0);
      auto covariates = [&](const Vector& y, int k, Rng& r) {
        Vector x(y.size());
        for (Index i = 0; i < y.size(); ++i) {
          x(i) = d.parameters.beta1[k] * y(i) + d.parameters.beta2[k] * std::tanh(y(i)) +
                 r.normal(0.0, noise);
        }
        return x;
      };
      for (int k = 0; k < K; ++k) {
        Rng rk(derive_seed(spec.seed, "sim/source", static_cast<std::uint64_t>(k)));
        const Vector y = draw_normal(rk, n, d.parameters.mu[k], spread(spec, 1.0));
        d.sources.emplace_back(column(covariates(y, k, rk)), y, "source" + std::to_string(k + 1));
      }
      Vector yt = draw_normal(rt, n, 0.5, spread(spec, 0.5));
      d.target = DomainData(column(covariates(yt, K, rt)), std::nullopt, "target");
      d.sealed = SealedOutcomes(std::move(yt));
      break;
    }
  }
  return d;
}

Vector oracle_weights(const ScenarioSpec& spec, const Vector& y) {
  Vector w(y.size());
  switch (spec.scenario) {
    case Scenario::ts_linear:
    case Scenario::ts_sine:
      for (Index i = 0; i < y.size(); ++i) {
        w(i) = normal_pdf(y(i), 0.5, spread(spec, 0.5)) / normal_pdf(y(i), 0.0, spread(spec, 1.0));
      }
      return w;
    case Scenario::ts_mixture:
      for (Index i = 0; i < y.size(); ++i) {
        const double t = 0.2 * normal_pdf(y(i), 0.2, spread(spec, 0.5)) +
                         0.8 * normal_pdf(y(i), 1.0, spread(spec, 1.0));
        w(i) = t / normal_pdf(y(i), 0.0, spread(spec, 2.0));
      }
      return w;
    case Scenario::msda_hier:
      break;
  }
  throw DataError("oracle weights exist only for single-source scenarios");
}

// ---------------------------------------------------------------- baselines

double baseline_merged_ols(const std::vector<DomainData>& sources, const DomainData& target,
                           const Evaluator& evaluator, bool quadratic) {
  const DomainData merged = concatenate(sources);
  const LinearModel m = fit_ols(merged.features(), merged.outcomes(), quadratic);
  return evaluator.rmse(m.predict(target.features()));
}

double baseline_wls(const DomainData& source, const DomainData& target, const Vector& weights,
                    const Evaluator& evaluator, bool quadratic) {
  const LinearModel m = fit_wls(source.features(), source.outcomes(), weights, quadratic);
  return evaluator.rmse(m.predict(target.features()));
}

Vector stack_ols_weights(const std::vector<DomainData>& sources, bool quadratic) {
  const std::size_t K = sources.size();
  if (K == 0) throw DataError("need at least one source domain");
  if (K == 1) return Vector::Ones(1);
  std::vector<LinearModel> models;
  Index total = 0;
  for (const auto& s : sources) {
    models.push_back(fit_ols(s.features(), s.outcomes(), quadratic));
    total += s.size();
  }
  Matrix yhat(total, static_cast<Index>(K));
  Vector y(total);
  Index at = 0;
  for (const auto& s : sources) {
    y.segment(at, s.size()) = s.outcomes();
    for (std::size_t j = 0; j < K; ++j) {
      yhat.block(at, static_cast<Index>(j), s.size(), 1) = models[j].predict(s.features());
    }
    at += s.size();
  }
  return project_to_simplex_tolerance(qp::solve_simplex_ls(yhat, y).z);
}

double baseline_stack_ols(const std::vector<DomainData>& sources, const DomainData& target,
                          const Evaluator& evaluator, bool quadratic) {
  const Vector w = stack_ols_weights(sources, quadratic);
  const Matrix& xt = target.features();
  Vector pred = Vector::Zero(xt.rows());
  for (std::size_t j = 0; j < sources.size(); ++j) {
    pred += w(static_cast<Index>(j)) *
            fit_ols(sources[j].features(), sources[j].outcomes(), quadratic).predict(xt);
  }
  return evaluator.rmse(pred);
}

double baseline_merge_da(const std::vector<DomainData>& sources, const DomainData& target,
                         const SingleDaConfig& cfg, const Evaluator& evaluator) {
  const DomainData merged = sources.size() == 1 ? sources.front() : concatenate(sources);
  const SingleDaResult r = run_single_da(merged, target, cfg);
  return evaluator.rmse(r.learner.predict(target.features()));
}

// ---------------------------------------------------------------- experiments

std::string to_string(Method m) {
  switch (m) {
    case Method::merged_ols: return "merged_ols";
    case Method::wls_estimated: return "wls_estimated";
    case Method::wls_oracle: return "wls_oracle";
    case Method::stack_ols: return "stack_ols";
    case Method::merge_da: return "merge_da";
    case Method::stack_da: return "stack_da";
    case Method::sim_da: return "sim_da";
    case Method::stack_sim_da: return "stack_sim_da";
  }
  return "?";
}

Method method_from_string(const std::string& s) {
  for (Method m : {Method::merged_ols, Method::wls_estimated, Method::wls_oracle,
                   Method::stack_ols, Method::merge_da, Method::stack_da, Method::sim_da,
                   Method::stack_sim_da}) {
    if (to_string(m) == s) return m;
  }
  throw DataError("unknown method '" + s + "'");
}

std::vector<Method> all_methods(const ScenarioSpec& spec) {
  if (spec.single_source()) return {Method::merged_ols, Method::wls_estimated, Method::wls_oracle};
  return {Method::merged_ols, Method::stack_ols, Method::merge_da,
          Method::stack_da,   Method::sim_da,    Method::stack_sim_da};
}

ExperimentConfig default_experiment_config() {
  ExperimentConfig c;
  c.wls_bbse.categories = 4;
  c.wls_bbse.knots = 12;
  c.ensemble.single_da.bbse.categories = 4;
  c.ensemble.single_da.bbse.knots = 12;
  c.ensemble.merged_mean_column = true;
  return c;
}

std::vector<double> ExperimentResult::ratios(Method m) const {
  std::vector<double> out;
  for (const auto& r : rows) {
    if (r.method == m && std::isfinite(r.log_rmse_ratio)) out.push_back(r.log_rmse_ratio);
  }
  return out;
}

namespace {

struct ReplicateOutcome {
  std::vector<ResultRow> rows;
  std::size_t evaluator_reads = 0;
  std::size_t target_outcome_reads = 0;
  std::size_t hidden_reads = 0;
};

ReplicateOutcome run_replicate(const ScenarioSpec& base, const std::vector<Method>& methods,
                               int replicate, const ExperimentConfig& cfg) {
  ScenarioSpec spec = base;
  spec.seed = base.seed + static_cast<std::uint64_t>(replicate);
  const SimData data = generate(spec);
  const Evaluator evaluator(data.sealed);
  const bool quad = spec.quadratic_baselines();
  const double nan = std::numeric_limits<double>::quiet_NaN();

  std::optional<EnsembleComponents> components;
  std::string components_error;
  bool components_tried = false;
  const bool need_stacking =
      std::find(methods.begin(), methods.end(), Method::stack_da) != methods.end() ||
      std::find(methods.begin(), methods.end(), Method::stack_sim_da) != methods.end();

  ReplicateOutcome out;
  for (Method m : methods) {
    ResultRow row;
    row.replicate = replicate;
    row.method = m;
    try {
      switch (m) {
        case Method::merged_ols:
          row.rmse = baseline_merged_ols(data.sources, data.target, evaluator, quad);
          break;
        case Method::wls_estimated: {
          const DomainData& s = data.sources.front();
          const BbseResult b =
              estimate_importance_weights(s.features(), s.outcomes(), data.target.features(),
                                          cfg.wls_bbse, derive_seed(spec.seed, "sim/wls"));
          for (const auto& w : b.warnings) row.warning += (row.warning.empty() ? "" : "; ") + w;
          row.rmse = baseline_wls(s, data.target, b.weights, evaluator, quad);
          break;
        }
        case Method::wls_oracle: {
          const DomainData& s = data.sources.front();
          row.rmse =
              baseline_wls(s, data.target, oracle_weights(spec, s.outcomes()), evaluator, quad);
          break;
        }
        case Method::stack_ols:
          row.rmse = baseline_stack_ols(data.sources, data.target, evaluator, quad);
          break;
        case Method::merge_da: {
          SingleDaConfig c = cfg.ensemble.single_da;
          c.seed = derive_seed(spec.seed, "sim/merge_da");
          c.adversarial.seed = derive_seed(c.seed, "networks");
          row.rmse = baseline_merge_da(data.sources, data.target, c, evaluator);
          break;
        }
        case Method::stack_da:
        case Method::sim_da:
        case Method::stack_sim_da: {
          if (!components_tried) {
            components_tried = true;
            EnsembleConfig ec = cfg.ensemble;
            ec.seed = derive_seed(spec.seed, "sim/ensemble");
            ec.threads = 1;
            try {
              components = fit_ensemble_components(data.sources, data.target, ec, need_stacking);
            } catch (const Error& e) {
              components_error = e.what();
            }
          }
          if (!components) throw Error(components_error);
          const Scheme scheme = m == Method::stack_da ? Scheme::stack
                                : m == Method::sim_da ? Scheme::similarity
                                                      : Scheme::blend;
          const EnsembleModel model = combine(*components, scheme);
          for (const auto& w : model.warnings) row.warning += (row.warning.empty() ? "" : "; ") + w;
          row.rmse = evaluator.rmse(predict_ensemble(model, data.target.features()));
          break;
        }
      }
    } catch (const Error& e) {
      row.rmse = nan;
      row.warning = e.what();
    }
    out.rows.push_back(std::move(row));
  }

  const double base_rmse = out.rows.front().rmse;
  for (auto& r : out.rows) {
    r.log_rmse_ratio = (std::isfinite(r.rmse) && std::isfinite(base_rmse) && base_rmse > 0.0)
                           ? std::log(r.rmse / base_rmse)
                           : nan;
  }
  if (components && components->stacking) {
    for (const auto& b : components->stacking->grid) out.hidden_reads += b.hidden_outcome_reads;
  }
  out.evaluator_reads = evaluator.reads();
  out.target_outcome_reads = data.target.audit().outcome_reads();
  return out;
}

}  // namespace

ExperimentResult run_experiment(const ScenarioSpec& spec, const std::vector<Method>& methods,
                                int replicates, const ExperimentConfig& cfg) {
  spec.validate();
  if (methods.empty()) throw DataError("no methods requested");
  if (replicates < 1) throw DataError("replicates must be >= 1");
  ExperimentResult result;
  result.spec = spec;
  if (spec.single_source()) result.spec.sources = 1;
  result.methods.push_back(Method::merged_ols);
  for (Method m : methods) {
    if (std::find(result.methods.begin(), result.methods.end(), m) == result.methods.end()) {
      result.methods.push_back(m);
    }
  }
  for (Method m : result.methods) {
    if ((m == Method::wls_estimated || m == Method::wls_oracle) && !spec.single_source()) {
      throw DataError("method " + to_string(m) + " needs a single-source scenario");
    }
  }

  std::vector<ReplicateOutcome> outcomes(static_cast<std::size_t>(replicates));
  parallel_for(outcomes.size(), cfg.threads, [&](std::size_t r) {
    outcomes[r] = run_replicate(result.spec, result.methods, static_cast<int>(r), cfg);
  });
  for (auto& o : outcomes) {
    for (auto& row : o.rows) result.rows.push_back(std::move(row));
    result.audit.evaluator_reads += o.evaluator_reads;
    result.audit.target_outcome_reads += o.target_outcome_reads;
    result.audit.hidden_source_outcome_reads += o.hidden_reads;
  }
  result.audit.replicates = static_cast<std::size_t>(replicates);
  return result;
}

}  // namespace msda::sim
