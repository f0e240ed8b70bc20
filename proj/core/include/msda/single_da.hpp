#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "msda/adversarial.hpp"
#include "msda/label_shift.hpp"

namespace msda {

struct SingleDaConfig {
  int max_iterations = 5;    // T
  double tolerance = 1e-2;   // tau, on the sup-norm change of category weights
  AdvConfig adversarial;     // its seed initialises the networks
  BbseOptions bbse;
  std::uint64_t seed = 0;    // drives the BBSE splits
  /// Skip weight estimation and train with unit weights.
  bool force_unit_weights = false;
  /// Start each outer iteration from the previous iteration's networks.
  bool warm_start = true;

  void validate() const;
};

struct SingleDaResult {
  AdaptedLearner learner;
  /// Absent when unit weights were forced.
  std::optional<ImportanceModel> importance;
  Vector weights;                      // pointwise, at the source outcomes
  std::vector<Vector> category_weights;  // one snapshot per completed iteration
  bool converged = false;
  int iterations = 0;
  /// An inner step failed after the first iteration; the result is the last
  /// completed iterate.
  bool degraded = false;
  std::string degraded_reason;
  Warnings warnings;
};

/// Alternate importance-weight estimation (first on raw features, then on
/// the current transformed features) with adversarial training at the
/// current weights until the category weights stop moving or T iterations.
SingleDaResult run_single_da(const DomainData& source, const DomainData& target,
                             const SingleDaConfig& cfg);

Vector predict(const SingleDaResult& result, const Matrix& x);

}  // namespace msda
