#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "msda/ensemble.hpp"

namespace msda {

using Json = nlohmann::json;

/// Version written into every top-level document.
inline constexpr int kFormatVersion = 1;

// Weight matrices are stored row-major as nested arrays (in_dim rows).
Json to_json(const nn::Mlp& net);
nn::Mlp mlp_from_json(const Json& j);

Json to_json(const AdaptedLearner& learner, bool with_history = true);
AdaptedLearner learner_from_json(const Json& j);

Json to_json(const ImportanceModel& model);
ImportanceModel importance_from_json(const Json& j);

Json to_json(const SingleDaResult& result);

/// Top-level document {"format": "msda-ensemble", "version": 1, ...}.
Json to_json(const EnsembleModel& model);
EnsembleModel ensemble_from_json(const Json& j);

}  // namespace msda
