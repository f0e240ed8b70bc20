#include "msda/serialize.hpp"

namespace msda {

namespace {

Json vec(const Vector& v) {
  Json a = Json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

Vector vec_from(const Json& j, const char* what) {
  if (!j.is_array()) throw DataError(std::string(what) + ": expected an array");
  Vector v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Index>(i)) = j[i].get<double>();
  return v;
}

Json mat(const Matrix& m) {
  Json rows = Json::array();
  for (Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix mat_from(const Json& j, const char* what) {
  if (!j.is_array()) throw DataError(std::string(what) + ": expected an array of rows");
  const Index rows = static_cast<Index>(j.size());
  const Index cols = rows > 0 ? static_cast<Index>(j[0].size()) : 0;
  Matrix m(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    const Json& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Index>(row.size()) != cols) {
      throw DataError(std::string(what) + ": ragged matrix");
    }
    for (Index c = 0; c < cols; ++c) m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
  }
  return m;
}

template <typename F>
auto guarded(const char* what, F&& f) {
  try {
    return f();
  } catch (const Json::exception& e) {
    throw DataError(std::string(what) + ": " + e.what());
  }
}

}  // namespace

Json to_json(const nn::Mlp& net) {
  Json layers = Json::array();
  for (const auto& l : net.layers()) {
    layers.push_back({{"weight", mat(l.weight)},
                      {"bias", vec(l.bias)},
                      {"activation", nn::to_string(l.activation)}});
  }
  return {{"layers", std::move(layers)}};
}

nn::Mlp mlp_from_json(const Json& j) {
  return guarded("network", [&] {
    std::vector<nn::Layer> layers;
    for (const auto& l : j.at("layers")) {
      nn::Layer layer;
      layer.weight = mat_from(l.at("weight"), "layer weight");
      layer.bias = vec_from(l.at("bias"), "layer bias");
      layer.activation = nn::activation_from_string(l.at("activation").get<std::string>());
      layers.push_back(std::move(layer));
    }
    return nn::Mlp(std::move(layers));
  });
}

Json to_json(const AdaptedLearner& l, bool with_history) {
  Json j = {{"input_shift", vec(l.input.shift)},
            {"input_scale", vec(l.input.scale)},
            {"feature_map", to_json(l.feature_map)},
            {"regressor", to_json(l.regressor)},
            {"output_shift", l.output_shift},
            {"output_scale", l.output_scale},
            {"critic", to_json(l.critic)},
            {"weighted_loss", l.weighted_loss}};
  if (with_history) {
    Json lr = Json::array(), gap = Json::array();
    for (const auto& r : l.history) {
      lr.push_back(r.regression_loss);
      gap.push_back(r.critic_gap);
    }
    j["history"] = {{"regression_loss", std::move(lr)}, {"critic_gap", std::move(gap)}};
  }
  return j;
}

AdaptedLearner learner_from_json(const Json& j) {
  return guarded("learner", [&] {
    AdaptedLearner l;
    l.input.shift = vec_from(j.at("input_shift"), "input_shift");
    l.input.scale = vec_from(j.at("input_scale"), "input_scale");
    l.feature_map = mlp_from_json(j.at("feature_map"));
    l.regressor = mlp_from_json(j.at("regressor"));
    l.output_shift = j.at("output_shift").get<double>();
    l.output_scale = j.at("output_scale").get<double>();
    l.critic = mlp_from_json(j.at("critic"));
    l.weighted_loss = j.at("weighted_loss").get<double>();
    if (j.contains("history")) {
      const Json& h = j.at("history");
      const auto& lr = h.at("regression_loss");
      const auto& gap = h.at("critic_gap");
      if (lr.size() != gap.size()) throw DataError("learner history: length mismatch");
      for (std::size_t i = 0; i < lr.size(); ++i) {
        l.history.push_back(EpochRecord{lr[i].get<double>(), gap[i].get<double>()});
      }
    }
    if (l.input.shift.size() != l.feature_map.input_dim() ||
        l.input.scale.size() != l.feature_map.input_dim() ||
        l.regressor.input_dim() != l.feature_map.output_dim() || l.regressor.output_dim() != 1) {
      throw DataError("learner: network dimensions do not chain");
    }
    return l;
  });
}

Json to_json(const ImportanceModel& m) {
  return {{"knots", m.spline.knots()},
          {"alpha", vec(m.alpha)},
          {"cut_points", m.discretization.cuts()},
          {"cut_origin", m.discretization.origin() ==
                                     Discretization::Origin::source_quantile
                                 ? "source_quantile"
                                 : "user"},
          {"category_weights", vec(m.category_weights)},
          {"source_proportions", vec(m.source_proportions)},
          {"epsilon", m.epsilon}};
}

ImportanceModel importance_from_json(const Json& j) {
  return guarded("importance model", [&] {
    ImportanceModel m;
    m.spline = SplineSpec(j.at("knots").get<std::vector<double>>());
    m.alpha = vec_from(j.at("alpha"), "alpha");
    const auto prov = j.at("cut_origin").get<std::string>() == "user"
                          ? Discretization::Origin::user
                          : Discretization::Origin::source_quantile;
    m.discretization = Discretization(j.at("cut_points").get<std::vector<double>>(), prov);
    m.category_weights = vec_from(j.at("category_weights"), "category_weights");
    m.source_proportions = vec_from(j.at("source_proportions"), "source_proportions");
    m.epsilon = j.at("epsilon").get<double>();
    if (m.alpha.size() != m.spline.basis_size()) {
      throw DataError("importance model: alpha length does not match the spline basis");
    }
    return m;
  });
}

Json to_json(const SingleDaResult& r) {
  Json snaps = Json::array();
  for (const auto& c : r.category_weights) snaps.push_back(vec(c));
  Json j = {{"format", "msda-single-da"},
            {"version", kFormatVersion},
            {"learner", to_json(r.learner)},
            {"category_weights", std::move(snaps)},
            {"converged", r.converged},
            {"iterations", r.iterations},
            {"degraded", r.degraded},
            {"warnings", r.warnings}};
  if (r.degraded) j["degraded_reason"] = r.degraded_reason;
  if (r.importance) j["importance"] = to_json(*r.importance);
  return j;
}

Json to_json(const EnsembleModel& m) {
  Json learners = Json::array();
  for (const auto& l : m.learners) learners.push_back(to_json(l));
  Json sources = Json::array();
  for (const auto& s : m.sources) {
    sources.push_back({{"name", s.name},
                       {"loss", s.loss},
                       {"iterations", s.iterations},
                       {"converged", s.converged},
                       {"degraded", s.degraded},
                       {"warnings", s.warnings}});
  }
  Json j = {{"format", "msda-ensemble"},
            {"version", kFormatVersion},
            {"scheme", to_string(m.scheme)},
            {"gamma", m.gamma},
            {"weights", vec(m.weights)},
            {"learners", std::move(learners)},
            {"sources", std::move(sources)},
            {"warnings", m.warnings}};
  j["merged_mean"] = m.merged_mean ? Json(*m.merged_mean) : Json(nullptr);
  return j;
}

EnsembleModel ensemble_from_json(const Json& j) {
  return guarded("ensemble model", [&] {
    if (j.value("format", std::string()) != "msda-ensemble") {
      throw DataError("not an ensemble model document");
    }
    const int version = j.at("version").get<int>();
    if (version != kFormatVersion) {
      throw DataError("unsupported model version " + std::to_string(version));
    }
    EnsembleModel m;
    m.scheme = scheme_from_string(j.at("scheme").get<std::string>());
    m.gamma = j.at("gamma").get<double>();
    m.weights = vec_from(j.at("weights"), "weights");
    for (const auto& l : j.at("learners")) m.learners.push_back(learner_from_json(l));
    if (!j.at("merged_mean").is_null()) m.merged_mean = j.at("merged_mean").get<double>();
    for (const auto& s : j.at("sources")) {
      m.sources.push_back(SourceDiagnostics{
          s.at("name").get<std::string>(), s.at("loss").get<double>(),
          s.at("iterations").get<int>(), s.at("converged").get<bool>(),
          s.at("degraded").get<bool>(), s.at("warnings").get<Warnings>()});
    }
    m.warnings = j.at("warnings").get<Warnings>();
    const Index expected = static_cast<Index>(m.learners.size()) + (m.merged_mean ? 1 : 0);
    if (m.weights.size() != expected) {
      throw DataError("ensemble model: " + std::to_string(m.weights.size()) + " weights for " +
                      std::to_string(expected) + " components");
    }
    return m;
  });
}

}  // namespace msda
