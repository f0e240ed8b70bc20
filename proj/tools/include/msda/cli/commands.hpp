#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "msda/cli/config.hpp"

namespace msda::cli {

/// Results table: header plus one row per (replicate, method), preceded by
/// the resolved config as comment lines.
std::string results_csv(const sim::ExperimentResult& result, const RunConfig& cfg);

/// Per-method median and quartiles of the log RMSE ratios.
std::string summary_table(const sim::ExperimentResult& result);

/// Method order and log ratios read back from a results file.
std::vector<std::pair<std::string, std::vector<double>>> read_ratios(const std::string& path);

/// Box-and-whisker chart, one box per method in the given order. Each box
/// group carries its five-number summary as data- attributes.
std::string render_boxplot(const std::vector<std::pair<std::string, std::vector<double>>>& groups,
                           const std::string& title);

using ComponentsFn = std::function<EnsembleComponents(
    const std::vector<DomainData>&, const DomainData&, const EnsembleConfig&, bool)>;

void cmd_simulate(const RunConfig& cfg, const std::string& out_path, const std::string& data_dir,
                  std::ostream& out);
/// `components` replaces the adaptation step when set (used by tests).
void cmd_fit(const RunConfig& cfg, const std::vector<std::string>& source_paths,
             const std::string& target_path, const std::string& out_path, std::ostream& out,
             const ComponentsFn& components = {});
void cmd_predict(const std::string& model_path, const std::string& target_path,
                 const std::string& out_path, std::ostream& out);
void cmd_plot(const std::string& results_path, const std::string& out_path, std::ostream& out);

/// Full command line. Returns the process exit code: 0 success, 1 usage or
/// config error, 2 runtime failure.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace msda::cli
