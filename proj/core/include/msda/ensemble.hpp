#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "msda/single_da.hpp"

namespace msda {

enum class Scheme { stack, similarity, blend };

std::string to_string(Scheme s);
Scheme scheme_from_string(const std::string& s);

struct EnsembleConfig {
  /// Template for every pairwise and target run. Seeds are replaced by
  /// values derived from `seed` and the run's position in the grid.
  SingleDaConfig single_da;
  /// Append a column holding the grand mean of all source outcomes.
  bool merged_mean_column = false;
  /// Predict the diagonal blocks out of fold (two folds) instead of in-sample.
  bool cross_fit_diagonal = false;
  unsigned threads = 1;
  std::uint64_t seed = 0;
};

struct BlockInfo {
  enum class Kind { diagonal, adapted, fallback };
  int row = 0;     // domain whose outcomes are predicted
  int column = 0;  // domain the learner was trained on
  Kind kind = Kind::adapted;
  int iterations = 0;
  bool converged = false;
  std::string note;
  /// Reads of the row domain's outcomes by the run that produced the block.
  std::size_t hidden_outcome_reads = 0;
};

struct StackingMatrix {
  Matrix predictions;  // n_total x K (or K + 1 with the merged-mean column)
  Vector outcomes;     // concatenated source outcomes
  std::vector<std::pair<Index, Index>> blocks;  // per domain: first row, row count
  std::vector<BlockInfo> grid;                  // K * K entries, row-major
  bool merged_mean_column = false;
  double merged_mean = 0.0;

  int domains() const { return static_cast<int>(blocks.size()); }
  const BlockInfo& block(int row, int column) const {
    return grid[static_cast<std::size_t>(row * domains() + column)];
  }
};

/// Row block i holds every learner's predictions for source i. Column j,
/// i != j, comes from adapting S_j to S_i with S_i's outcomes hidden; the
/// diagonal comes from the non-adapted learner of S_i (unit weights,
/// lambda = 0). A failing pairwise run falls back to S_j's non-adapted
/// learner and is marked in the grid.
StackingMatrix build_stacking_matrix(const std::vector<DomainData>& sources,
                                     const EnsembleConfig& cfg);

/// Simplex least squares of the outcomes on the prediction columns.
Vector stacking_weights(const StackingMatrix& sm);

/// w_k = (1 / J_k) / sum_l (1 / J_l). Throws DataError on a non-positive J.
Vector similarity_weights(const Vector& losses);

struct BlendResult {
  Vector weights;
  double gamma = 0.0;
};

/// gamma = max(w_sim) - min(w_sim); minimise
/// (1 - gamma) ||Y - Yhat w||^2 + gamma ||w - w_sim||^2 over the simplex.
/// With the merged-mean column w_sim is padded with a zero for it, and gamma
/// is taken over the K source entries.
BlendResult blended_weights(const StackingMatrix& sm, const Vector& w_sim);
/// Same with gamma supplied.
Vector blended_weights(const StackingMatrix& sm, const Vector& w_sim, double gamma);

struct SourceDiagnostics {
  std::string name;
  double loss = 0.0;  // J
  int iterations = 0;
  bool converged = false;
  bool degraded = false;
  Warnings warnings;
};

struct EnsembleModel {
  std::vector<AdaptedLearner> learners;
  /// One entry per learner, plus a trailing entry for the merged-mean
  /// constant when present.
  Vector weights;
  std::optional<double> merged_mean;
  Scheme scheme = Scheme::stack;
  double gamma = 0.0;
  std::vector<SourceDiagnostics> sources;
  Warnings warnings;
};

/// The adapted runs S_k -> T and, when requested, the stacking matrix. All
/// three schemes can be formed from one set of components.
struct EnsembleComponents {
  std::vector<std::string> names;
  std::vector<SingleDaResult> runs;
  std::optional<StackingMatrix> stacking;
};

EnsembleComponents fit_ensemble_components(const std::vector<DomainData>& sources,
                                           const DomainData& target, const EnsembleConfig& cfg,
                                           bool with_stacking);

/// Form the model for one scheme. Stack and blend need the stacking matrix
/// when there is more than one source.
EnsembleModel combine(const EnsembleComponents& components, Scheme scheme);

/// Adapt every source to the target and combine the learners per scheme.
EnsembleModel fit_target_ensemble(const std::vector<DomainData>& sources, const DomainData& target,
                                  Scheme scheme, const EnsembleConfig& cfg);

Vector predict_ensemble(const EnsembleModel& model, const Matrix& x);

/// Clamp tiny negative entries produced by the solver and renormalise.
Vector project_to_simplex_tolerance(const Vector& w);

}  // namespace msda
