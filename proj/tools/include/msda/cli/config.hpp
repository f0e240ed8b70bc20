#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "msda/ensemble.hpp"
#include "msda/sim.hpp"

namespace msda::cli {

/// Bad flags, unknown keys or out-of-range values. Maps to exit code 1.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Every tunable of the toolkit. Read from a `key = value` file, then
/// overridden by command-line flags, then validated as a whole.
struct RunConfig {
  // outcome coarsening and importance weights
  int categories = 4;               // L; 0 picks from the source size
  std::vector<double> cut_points;   // explicit cuts, overrides categories
  int knots = 12;                   // spline knots J
  double epsilon = 0.05;
  double ridge = 1e-8;
  // adversarial training
  double lambda = 1.0;
  double clip = 0.1;
  int epochs = 2000;
  long batch_size = 0;
  int critic_steps = 5;
  double lr_generator = 1e-3;
  double lr_critic = 5e-4;
  double warmup_fraction = 0.1;
  long hidden = 16;
  long representation = 8;
  long critic_hidden = 16;
  // outer loop
  int max_iterations = 5;           // T
  double tolerance = 1e-2;          // tau
  // ensemble
  Scheme scheme = Scheme::stack;
  bool merged_mean = true;
  bool cross_fit_diagonal = false;
  // simulation
  sim::Scenario scenario = sim::Scenario::ts_linear;
  double sigma = 0.5;
  int sources = 3;
  long n = 600;
  std::vector<sim::Method> methods;  // empty = every method of the scenario
  int replicates = 100;
  sim::GaussianConvention convention = sim::GaussianConvention::sd;
  // execution
  std::uint64_t seed = 0;
  unsigned threads = 1;

  /// Set one key from its text form. Throws ConfigError on an unknown key or
  /// an unparsable value.
  void set(const std::string& key, const std::string& value);
  /// Range checks across all fields.
  void validate() const;

  /// Canonical `key = value` lines for every key, in a fixed order.
  std::vector<std::pair<std::string, std::string>> entries() const;

  BbseOptions bbse() const;
  AdvConfig adversarial() const;
  SingleDaConfig single_da() const;
  EnsembleConfig ensemble() const;
  sim::ScenarioSpec scenario_spec() const;
  sim::ExperimentConfig experiment() const;
};

/// Parse a config document. Blank lines and lines starting with '#' are
/// ignored; every other line must be `key = value`. Duplicate keys are an
/// error.
void parse_config(std::istream& in, const std::string& source_name, RunConfig& cfg);
void load_config_file(const std::string& path, RunConfig& cfg);

/// The resolved config as `# key = value` comment lines.
std::string config_comment_block(const RunConfig& cfg);

}  // namespace msda::cli
