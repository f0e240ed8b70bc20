#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "msda/ensemble.hpp"
#include "msda/linear.hpp"

namespace msda::sim {

enum class Scenario { ts_linear, ts_sine, ts_mixture, msda_hier };

std::string to_string(Scenario s);
Scenario scenario_from_string(const std::string& s);

/// How the second argument of N(a, b) in a scenario recipe is read.
enum class GaussianConvention { sd, variance };

std::string to_string(GaussianConvention c);
GaussianConvention convention_from_string(const std::string& s);

struct ScenarioSpec {
  Scenario scenario = Scenario::ts_linear;
  double sigma = 0.5;  // heterogeneity, msda-hier only (always a standard deviation)
  int sources = 1;     // K; forced to 1 for the single-source scenarios
  Index n = 600;       // per domain
  std::uint64_t seed = 0;
  GaussianConvention convention = GaussianConvention::sd;

  void validate() const;
  bool single_source() const { return scenario != Scenario::msda_hier; }
  /// Linear baselines add squared covariates.
  bool quadratic_baselines() const {
    return scenario == Scenario::ts_sine || scenario == Scenario::ts_mixture;
  }
};

class Evaluator;

/// Target outcomes, readable only through an Evaluator.
class SealedOutcomes {
 public:
  class Key {
    friend class Evaluator;
    Key() = default;
  };

  SealedOutcomes() = default;
  explicit SealedOutcomes(Vector y);

  Index size() const { return y_ ? y_->size() : 0; }
  const Vector& read(Key) const;
  std::size_t reads() const { return reads_->load(); }

 private:
  std::shared_ptr<const Vector> y_;
  std::shared_ptr<std::atomic<std::size_t>> reads_ = std::make_shared<std::atomic<std::size_t>>(0);
};

/// Scores predictions against the sealed target outcomes.
class Evaluator {
 public:
  explicit Evaluator(SealedOutcomes sealed) : sealed_(std::move(sealed)) {}
  double rmse(const Vector& prediction) const;
  std::size_t reads() const { return sealed_.reads(); }

 private:
  SealedOutcomes sealed_;
};

/// Draw-level parameters, kept for oracles and inspection.
struct DrawParameters {
  std::vector<double> mu;     // msda-hier source outcome means
  std::vector<double> beta1;  // msda-hier, K + 1 entries (target last)
  std::vector<double> beta2;
};

struct SimData {
  std::vector<DomainData> sources;
  DomainData target;  // features only
  SealedOutcomes sealed;
  DrawParameters parameters;
};

SimData generate(const ScenarioSpec& spec);

/// Analytic target / source outcome density ratio for the single-source
/// scenarios under the scenario's Gaussian convention.
Vector oracle_weights(const ScenarioSpec& spec, const Vector& y);

// Baselines; each returns the target RMSE.
double baseline_merged_ols(const std::vector<DomainData>& sources, const DomainData& target,
                           const Evaluator& evaluator, bool quadratic);
double baseline_wls(const DomainData& source, const DomainData& target, const Vector& weights,
                    const Evaluator& evaluator, bool quadratic);
double baseline_stack_ols(const std::vector<DomainData>& sources, const DomainData& target,
                          const Evaluator& evaluator, bool quadratic);
double baseline_merge_da(const std::vector<DomainData>& sources, const DomainData& target,
                         const SingleDaConfig& cfg, const Evaluator& evaluator);

/// Weights of the per-source OLS stacking baseline.
Vector stack_ols_weights(const std::vector<DomainData>& sources, bool quadratic);

enum class Method {
  merged_ols,
  wls_estimated,
  wls_oracle,
  stack_ols,
  merge_da,
  stack_da,
  sim_da,
  stack_sim_da,
};

std::string to_string(Method m);
Method method_from_string(const std::string& s);
std::vector<Method> all_methods(const ScenarioSpec& spec);

struct ExperimentConfig {
  /// BBSE settings of the WLS methods.
  BbseOptions wls_bbse;
  /// Multi-source methods; merge_da uses ensemble.single_da.
  EnsembleConfig ensemble;
  /// Replicates run concurrently on this many threads (0 = all cores).
  unsigned threads = 1;
};

/// Defaults used by the simulate command: 4 outcome categories, 12 knots,
/// merged-mean column on.
ExperimentConfig default_experiment_config();

struct ResultRow {
  int replicate = 0;
  Method method = Method::merged_ols;
  double rmse = 0.0;            // NaN when the method failed
  double log_rmse_ratio = 0.0;  // log(rmse / rmse of merged_ols)
  std::string warning;
};

struct AuditSummary {
  std::size_t replicates = 0;
  std::size_t evaluator_reads = 0;
  /// Attempts by any method to read target outcomes through the domain.
  std::size_t target_outcome_reads = 0;
  /// Reads of a hidden source's outcomes by the pairwise runs that adapt to it.
  std::size_t hidden_source_outcome_reads = 0;

  bool clean() const { return target_outcome_reads == 0 && hidden_source_outcome_reads == 0; }
};

struct ExperimentResult {
  ScenarioSpec spec;
  std::vector<Method> methods;  // merged_ols first
  std::vector<ResultRow> rows;  // replicate-major, methods in order
  AuditSummary audit;

  std::vector<double> ratios(Method m) const;
};

/// Replicate r draws data with seed spec.seed + r and runs every method on
/// the same draw. Method failures are recorded in the row, not thrown.
ExperimentResult run_experiment(const ScenarioSpec& spec, const std::vector<Method>& methods,
                                int replicates, const ExperimentConfig& cfg);

}  // namespace msda::sim
