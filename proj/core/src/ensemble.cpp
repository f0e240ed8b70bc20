#include "msda/ensemble.hpp"

#include <cmath>

#include "msda/parallel.hpp"
#include "msda/qp.hpp"
#include "msda/rng.hpp"

namespace msda {

std::string to_string(Scheme s) {
  switch (s) {
    case Scheme::stack: return "stack";
    case Scheme::similarity: return "similarity";
    case Scheme::blend: return "blend";
  }
  return "?";
}

Scheme scheme_from_string(const std::string& s) {
  if (s == "stack") return Scheme::stack;
  if (s == "similarity") return Scheme::similarity;
  if (s == "blend") return Scheme::blend;
  throw DataError("unknown scheme '" + s + "' (expected stack, similarity or blend)");
}

namespace {

SingleDaConfig run_config(const EnsembleConfig& cfg, std::string_view role, std::uint64_t index) {
  SingleDaConfig c = cfg.single_da;
  c.seed = derive_seed(cfg.seed, role, index);
  c.adversarial.seed = derive_seed(c.seed, "networks");
  return c;
}

AdvConfig plain_config(const EnsembleConfig& cfg, std::uint64_t domain) {
  AdvConfig a = cfg.single_da.adversarial;
  a.lambda = 0.0;
  a.seed = derive_seed(cfg.seed, "ensemble/diagonal", domain);
  return a;
}

DomainData subset(const DomainData& d, const std::vector<Index>& rows) {
  const Matrix& x = d.features();
  const Vector& y = d.outcomes();
  Matrix xs(static_cast<Index>(rows.size()), x.cols());
  Vector ys(static_cast<Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    xs.row(static_cast<Index>(i)) = x.row(rows[i]);
    ys(static_cast<Index>(i)) = y(rows[i]);
  }
  return DomainData(std::move(xs), std::move(ys), d.name());
}

Vector cross_fit_predictions(const DomainData& d, const AdvConfig& base, std::uint64_t seed) {
  const Index n = d.size();
  if (n < 4) throw DataError("domain '" + d.name() + "' too small to cross-fit");
  Rng rng(derive_seed(seed, "ensemble/diagonal-folds"));
  const auto perm = rng.permutation(static_cast<std::size_t>(n));
  std::vector<Index> fold[2];
  for (std::size_t i = 0; i < perm.size(); ++i) fold[i % 2].push_back(static_cast<Index>(perm[i]));
  Vector out(n);
  const Matrix& x = d.features();
  for (int f = 0; f < 2; ++f) {
    AdvConfig a = base;
    a.seed = derive_seed(base.seed, "fold", static_cast<std::uint64_t>(f));
    const AdaptedLearner l = train_plain_regression(subset(d, fold[f]), a);
    const std::vector<Index>& other = fold[1 - f];
    Matrix xo(static_cast<Index>(other.size()), x.cols());
    for (std::size_t i = 0; i < other.size(); ++i) xo.row(static_cast<Index>(i)) = x.row(other[i]);
    const Vector p = l.predict(xo);
    for (std::size_t i = 0; i < other.size(); ++i) out(other[i]) = p(static_cast<Index>(i));
  }
  return out;
}

}  // namespace

Vector project_to_simplex_tolerance(const Vector& w) {
  Vector v = w.cwiseMax(0.0);
  const double s = v.sum();
  if (!(s > 0.0)) throw Error("weight vector has no positive mass");
  return v / s;
}

StackingMatrix build_stacking_matrix(const std::vector<DomainData>& sources,
                                     const EnsembleConfig& cfg) {
  const int K = static_cast<int>(sources.size());
  if (K < 2) throw DataError("stacking needs at least 2 source domains");
  for (const auto& s : sources) {
    if (!s.labeled()) throw DataError("source domain '" + s.name() + "' has no outcomes");
    if (s.dim() != sources.front().dim()) {
      throw DimensionError("source domain '" + s.name() + "' has " + std::to_string(s.dim()) +
                           " features, expected " + std::to_string(sources.front().dim()));
    }
  }

  StackingMatrix sm;
  Index total = 0;
  for (const auto& s : sources) {
    sm.blocks.emplace_back(total, s.size());
    total += s.size();
  }
  const Index cols = K + (cfg.merged_mean_column ? 1 : 0);
  sm.predictions = Matrix::Zero(total, cols);
  sm.outcomes.resize(total);
  for (int i = 0; i < K; ++i) sm.outcomes.segment(sm.blocks[i].first, sm.blocks[i].second) = sources[i].outcomes();
  sm.grid.resize(static_cast<std::size_t>(K * K));

  parallel_for(static_cast<std::size_t>(K * K), cfg.threads, [&](std::size_t task) {
    const int i = static_cast<int>(task) / K;
    const int j = static_cast<int>(task) % K;
    BlockInfo info;
    info.row = i;
    info.column = j;
    Vector pred;
    const Matrix& xi = sources[i].features();
    if (i == j) {
      info.kind = BlockInfo::Kind::diagonal;
      const AdvConfig a = plain_config(cfg, static_cast<std::uint64_t>(i));
      if (cfg.cross_fit_diagonal) {
        pred = cross_fit_predictions(sources[i], a, cfg.seed);
        info.note = "cross-fitted";
      } else {
        pred = train_plain_regression(sources[i], a).predict(xi);
      }
      info.converged = true;
    } else {
      const DomainData hidden = sources[i].without_outcomes();
      try {
        const SingleDaResult r = run_single_da(
            sources[j], hidden, run_config(cfg, "ensemble/pair", static_cast<std::uint64_t>(task)));
        pred = r.learner.predict(xi);
        info.kind = BlockInfo::Kind::adapted;
        info.iterations = r.iterations;
        info.converged = r.converged;
        if (r.degraded) info.note = r.degraded_reason;
      } catch (const Error& e) {
        info.kind = BlockInfo::Kind::fallback;
        info.note = e.what();
        pred = train_plain_regression(sources[j], plain_config(cfg, static_cast<std::uint64_t>(j)))
                   .predict(xi);
      }
      info.hidden_outcome_reads = hidden.audit().outcome_reads();
    }
    sm.predictions.block(sm.blocks[i].first, j, sm.blocks[i].second, 1) = pred;
    sm.grid[task] = std::move(info);
  });

  if (cfg.merged_mean_column) {
    sm.merged_mean_column = true;
    sm.merged_mean = sm.outcomes.mean();
    sm.predictions.col(K).setConstant(sm.merged_mean);
  }
  return sm;
}

Vector stacking_weights(const StackingMatrix& sm) {
  if (sm.predictions.rows() != sm.outcomes.size()) {
    throw DimensionError("stacking matrix rows and outcomes differ");
  }
  return project_to_simplex_tolerance(qp::solve_simplex_ls(sm.predictions, sm.outcomes).z);
}

Vector similarity_weights(const Vector& losses) {
  if (losses.size() == 0) throw DataError("similarity weights need at least one loss");
  for (Index k = 0; k < losses.size(); ++k) {
    if (!(losses(k) > 0.0) || !std::isfinite(losses(k))) {
      throw DataError("similarity weights need finite positive losses; source " +
                      std::to_string(k) + " has " + std::to_string(losses(k)));
    }
  }
  const Vector inv = losses.cwiseInverse();
  return inv / inv.sum();
}

Vector blended_weights(const StackingMatrix& sm, const Vector& w_sim, double gamma) {
  const Index cols = sm.predictions.cols();
  const Index K = cols - (sm.merged_mean_column ? 1 : 0);
  if (w_sim.size() != K) {
    throw DimensionError("similarity weights have length " + std::to_string(w_sim.size()) +
                         ", expected " + std::to_string(K));
  }
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw DataError("gamma must lie in [0, 1]");
  if (gamma == 0.0) return stacking_weights(sm);
  Vector prior = Vector::Zero(cols);
  prior.head(K) = w_sim;
  const Index n = sm.predictions.rows();
  Matrix a(n + cols, cols);
  Vector b(n + cols);
  a.topRows(n) = std::sqrt(1.0 - gamma) * sm.predictions;
  a.bottomRows(cols) = std::sqrt(gamma) * Matrix::Identity(cols, cols);
  b.head(n) = std::sqrt(1.0 - gamma) * sm.outcomes;
  b.tail(cols) = std::sqrt(gamma) * prior;
  return project_to_simplex_tolerance(qp::solve_simplex_ls(a, b).z);
}

BlendResult blended_weights(const StackingMatrix& sm, const Vector& w_sim) {
  if (w_sim.size() == 0) throw DataError("similarity weights are empty");
  BlendResult r;
  r.gamma = w_sim.maxCoeff() - w_sim.minCoeff();
  r.weights = blended_weights(sm, w_sim, r.gamma);
  return r;
}

EnsembleComponents fit_ensemble_components(const std::vector<DomainData>& sources,
                                           const DomainData& target, const EnsembleConfig& cfg,
                                           bool with_stacking) {
  const int K = static_cast<int>(sources.size());
  if (K < 1) throw DataError("need at least one source domain");
  EnsembleComponents c;
  c.runs.resize(static_cast<std::size_t>(K));
  for (const auto& s : sources) c.names.push_back(s.name());
  parallel_for(static_cast<std::size_t>(K), cfg.threads, [&](std::size_t k) {
    try {
      c.runs[k] = run_single_da(sources[k], target,
                                run_config(cfg, "ensemble/target", static_cast<std::uint64_t>(k)));
    } catch (const Error& e) {
      throw Error("source '" + sources[k].name() + "' -> target: " + e.what());
    }
  });
  if (with_stacking && K > 1) c.stacking = build_stacking_matrix(sources, cfg);
  return c;
}

EnsembleModel combine(const EnsembleComponents& components, Scheme scheme) {
  const int K = static_cast<int>(components.runs.size());
  if (K < 1) throw DataError("need at least one adapted run");
  EnsembleModel model;
  model.scheme = scheme;
  Vector losses(K);
  for (int k = 0; k < K; ++k) {
    const SingleDaResult& r = components.runs[static_cast<std::size_t>(k)];
    losses(k) = r.learner.weighted_loss;
    model.sources.push_back(SourceDiagnostics{components.names[static_cast<std::size_t>(k)],
                                              r.learner.weighted_loss, r.iterations, r.converged,
                                              r.degraded, r.warnings});
    model.learners.push_back(r.learner);
  }
  if (K == 1) {
    model.weights = Vector::Ones(1);
    return model;
  }
  if (scheme == Scheme::similarity) {
    model.weights = similarity_weights(losses);
    return model;
  }
  if (!components.stacking) throw Error("scheme '" + to_string(scheme) + "' needs the stacking matrix");
  const StackingMatrix& sm = *components.stacking;
  for (const auto& b : sm.grid) {
    if (b.kind == BlockInfo::Kind::fallback) {
      model.warnings.push_back("block (" + std::to_string(b.row) + ", " +
                               std::to_string(b.column) +
                               ") fell back to the non-adapted learner: " + b.note);
    }
  }
  if (scheme == Scheme::stack) {
    model.weights = stacking_weights(sm);
  } else {
    const BlendResult br = blended_weights(sm, similarity_weights(losses));
    model.weights = br.weights;
    model.gamma = br.gamma;
  }
  if (sm.merged_mean_column) model.merged_mean = sm.merged_mean;
  return model;
}

EnsembleModel fit_target_ensemble(const std::vector<DomainData>& sources, const DomainData& target,
                                  Scheme scheme, const EnsembleConfig& cfg) {
  return combine(fit_ensemble_components(sources, target, cfg, scheme != Scheme::similarity),
                 scheme);
}

Vector predict_ensemble(const EnsembleModel& model, const Matrix& x) {
  const Index K = static_cast<Index>(model.learners.size());
  const Index expected = K + (model.merged_mean ? 1 : 0);
  if (model.weights.size() != expected) {
    throw DimensionError("ensemble has " + std::to_string(model.weights.size()) +
                         " weights for " + std::to_string(expected) + " components");
  }
  Vector out = Vector::Zero(x.rows());
  for (Index k = 0; k < K; ++k) {
    out += model.weights(k) * model.learners[k].predict(x);
  }
  if (model.merged_mean) out.array() += model.weights(K) * *model.merged_mean;
  return out;
}

}  // namespace msda
