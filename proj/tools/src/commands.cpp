#include "msda/cli/commands.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "msda/cli/dataset.hpp"
#include "msda/serialize.hpp"
#include "msda/stats.hpp"

namespace msda::cli {

namespace {

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  (void)ec;
  return std::string(buf, p);
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string sanitize(std::string s) {
  for (char& c : s) {
    if (c == ',' || c == '\n' || c == '\r' || c == '"') c = ';';
  }
  return s;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write '" + path + "'");
  f << content;
  if (!f) throw Error("failed writing '" + path + "'");
}

Json config_json(const RunConfig& cfg) {
  Json j = Json::object();
  for (const auto& [k, v] : cfg.entries()) j[k] = v;
  return j;
}

}  // namespace

// ---------------------------------------------------------------- simulate

std::string results_csv(const sim::ExperimentResult& result, const RunConfig& cfg) {
  std::string s = config_comment_block(cfg);
  s += "scenario,sigma,replicate,method,rmse,log_rmse_ratio,warnings\n";
  const std::string scenario = sim::to_string(result.spec.scenario);
  const std::string sigma = num(result.spec.sigma);
  for (const auto& r : result.rows) {
    s += scenario + "," + sigma + "," + std::to_string(r.replicate) + "," + sim::to_string(r.method) +
         "," + num(r.rmse) + "," + num(r.log_rmse_ratio) + "," + sanitize(r.warning) + "\n";
  }
  return s;
}

std::string summary_table(const sim::ExperimentResult& result) {
  std::ostringstream o;
  char line[160];
  std::snprintf(line, sizeof line, "%-14s %10s %10s %10s %10s %7s\n", "method", "median", "q1", "q3",
                "iqr", "failed");
  o << line;
  for (sim::Method m : result.methods) {
    const std::vector<double> v = result.ratios(m);
    std::size_t failed = 0;
    for (const auto& r : result.rows) {
      if (r.method == m && !std::isfinite(r.log_rmse_ratio)) ++failed;
    }
    if (v.empty()) {
      std::snprintf(line, sizeof line, "%-14s %10s %10s %10s %10s %7zu\n",
                    sim::to_string(m).c_str(), "-", "-", "-", "-", failed);
    } else {
      const BoxSummary b = box_summary(v);
      std::snprintf(line, sizeof line, "%-14s %10.4f %10.4f %10.4f %10.4f %7zu\n",
                    sim::to_string(m).c_str(), b.median, b.q1, b.q3, b.iqr(), failed);
    }
    o << line;
  }
  const auto& a = result.audit;
  o << "audit: " << a.replicates << " replicates, evaluator reads " << a.evaluator_reads
    << ", target outcome reads by methods " << a.target_outcome_reads
    << ", hidden source outcome reads " << a.hidden_source_outcome_reads << "\n";
  return o.str();
}

void cmd_simulate(const RunConfig& cfg, const std::string& out_path, const std::string& data_dir,
                  std::ostream& out) {
  cfg.validate();
  const sim::ScenarioSpec spec = cfg.scenario_spec();
  const std::vector<sim::Method> methods =
      cfg.methods.empty() ? sim::all_methods(spec) : cfg.methods;
  const sim::ExperimentResult result =
      sim::run_experiment(spec, methods, cfg.replicates, cfg.experiment());
  write_file(out_path, results_csv(result, cfg));
  if (!data_dir.empty()) {
    std::filesystem::create_directories(data_dir);
    const sim::SimData d = sim::generate(spec);
    for (const auto& s : d.sources) {
      write_domain(data_dir + "/" + s.name() + ".csv", s.features(), &s.outcomes());
    }
    write_domain(data_dir + "/target.csv", d.target.features(), nullptr);
  }
  out << summary_table(result);
  if (!result.audit.clean()) out << "warning: outcome audit is not clean\n";
  out << "wrote " << out_path << "\n";
}

// ---------------------------------------------------------------- fit / predict

void cmd_fit(const RunConfig& cfg, const std::vector<std::string>& source_paths,
             const std::string& target_path, const std::string& out_path, std::ostream& out,
             const ComponentsFn& components) {
  cfg.validate();
  if (source_paths.empty()) throw ConfigError("fit needs at least one --source");
  std::vector<DomainData> sources;
  for (const auto& p : source_paths) sources.push_back(read_labeled(p));
  Warnings io_warnings;
  const DomainData target = read_unlabeled(target_path, &io_warnings);
  for (const auto& s : sources) {
    if (s.dim() != target.dim()) {
      throw DataError(s.name() + ": " + std::to_string(s.dim()) + " feature columns, target has " +
                      std::to_string(target.dim()));
    }
  }
  const bool stacking = cfg.scheme != Scheme::similarity;
  const EnsembleConfig ec = cfg.ensemble();
  const EnsembleComponents parts = components ? components(sources, target, ec, stacking)
                                              : fit_ensemble_components(sources, target, ec, stacking);
  EnsembleModel model = combine(parts, cfg.scheme);
  for (auto& w : io_warnings) model.warnings.insert(model.warnings.begin(), w);

  Json j = to_json(model);
  j["config"] = config_json(cfg);
  if (parts.stacking) {
    Json grid = Json::array();
    for (const auto& b : parts.stacking->grid) {
      const char* kind = b.kind == BlockInfo::Kind::diagonal  ? "diagonal"
                         : b.kind == BlockInfo::Kind::adapted ? "adapted"
                                                              : "fallback";
      grid.push_back({{"row", b.row},
                      {"column", b.column},
                      {"kind", kind},
                      {"iterations", b.iterations},
                      {"converged", b.converged},
                      {"note", b.note}});
    }
    j["stacking_blocks"] = std::move(grid);
  }
  write_file(out_path, j.dump(2) + "\n");
  out << "scheme " << to_string(model.scheme) << ", gamma " << num(model.gamma) << "\nweights:";
  for (Index k = 0; k < model.weights.size(); ++k) out << " " << fixed(model.weights(k), 6);
  out << "\n";
  for (const auto& w : model.warnings) out << "warning: " << w << "\n";
  out << "wrote " << out_path << "\n";
}

void cmd_predict(const std::string& model_path, const std::string& target_path,
                 const std::string& out_path, std::ostream& out) {
  std::ifstream in(model_path);
  if (!in) throw DataError("cannot open '" + model_path + "'");
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::exception& e) {
    throw DataError(model_path + ": " + e.what());
  }
  const EnsembleModel model = ensemble_from_json(j);
  Warnings warnings;
  const DomainData target = read_unlabeled(target_path, &warnings);
  const Index expected = model.learners.empty() ? 0 : model.learners.front().input.shift.size();
  if (target.dim() != expected) {
    throw DimensionError(target_path + ": " + std::to_string(target.dim()) +
                         " feature columns, model expects " + std::to_string(expected));
  }
  const Vector pred = predict_ensemble(model, target.features());
  std::string s = "# model = " + model_path + "\n";
  if (j.contains("config")) {
    for (const auto& [k, v] : j.at("config").items()) s += "# " + k + " = " + v.get<std::string>() + "\n";
  }
  s += "prediction\n";
  for (Index i = 0; i < pred.size(); ++i) s += num(pred(i)) + "\n";
  write_file(out_path, s);
  for (const auto& w : warnings) out << "warning: " << w << "\n";
  out << "wrote " << pred.size() << " predictions to " << out_path << "\n";
}

// ---------------------------------------------------------------- plot

std::vector<std::pair<std::string, std::vector<double>>> read_ratios(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::vector<std::pair<std::string, std::vector<double>>> groups;
  std::map<std::string, std::size_t> index;
  std::string line;
  int method_col = -1, ratio_col = -1;
  bool header = false;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cells.push_back(c);
    if (!header) {
      for (std::size_t i = 0; i < cells.size(); ++i) {
        if (cells[i] == "method") method_col = static_cast<int>(i);
        if (cells[i] == "log_rmse_ratio") ratio_col = static_cast<int>(i);
      }
      if (method_col < 0 || ratio_col < 0) {
        throw DataError(path + ": header lacks 'method' or 'log_rmse_ratio'");
      }
      header = true;
      continue;
    }
    if (static_cast<int>(cells.size()) <= std::max(method_col, ratio_col)) {
      throw DataError(path + ":" + std::to_string(lineno) + ": too few fields");
    }
    const std::string& m = cells[static_cast<std::size_t>(method_col)];
    auto it = index.find(m);
    if (it == index.end()) {
      it = index.emplace(m, groups.size()).first;
      groups.emplace_back(m, std::vector<double>{});
    }
    const std::string& r = cells[static_cast<std::size_t>(ratio_col)];
    if (r == "nan") continue;
    double v = 0.0;
    const auto [p, ec] = std::from_chars(r.data(), r.data() + r.size(), v);
    if (ec != std::errc() || p != r.data() + r.size()) {
      throw DataError(path + ":" + std::to_string(lineno) + ": bad log_rmse_ratio '" + r + "'");
    }
    groups[it->second].second.push_back(v);
  }
  if (!header) throw DataError(path + ": no header row");
  std::vector<std::pair<std::string, std::vector<double>>> nonempty;
  for (auto& g : groups) {
    if (!g.second.empty()) nonempty.push_back(std::move(g));
  }
  if (nonempty.empty()) throw DataError(path + ": no finite log RMSE ratios to plot");
  return nonempty;
}

std::string render_boxplot(const std::vector<std::pair<std::string, std::vector<double>>>& groups,
                           const std::string& title) {
  if (groups.empty()) throw DataError("nothing to plot");
  std::vector<BoxSummary> boxes;
  double lo = 0.0, hi = 0.0;
  for (const auto& g : groups) {
    if (g.second.empty()) throw DataError("method '" + g.first + "' has no values");
    boxes.push_back(box_summary(g.second));
    lo = std::min(lo, boxes.back().min);
    hi = std::max(hi, boxes.back().max);
  }
  const double pad = std::max(0.05, 0.08 * (hi - lo));
  lo -= pad;
  hi += pad;
  const double left = 70, top = 40, plot_h = 300, slot = 110;
  const double width = left + slot * static_cast<double>(groups.size()) + 30;
  const double height = top + plot_h + 60;
  auto Y = [&](double v) { return top + (hi - v) / (hi - lo) * plot_h; };

  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fixed(width, 0) << "\" height=\""
    << fixed(height, 0) << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s << "<title>" << title << "</title>\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<text x=\"" << fixed(width / 2, 1) << "\" y=\"22\" text-anchor=\"middle\">" << title
    << "</text>\n";
  s << "<line x1=\"" << fixed(left, 1) << "\" y1=\"" << fixed(top, 1) << "\" x2=\"" << fixed(left, 1)
    << "\" y2=\"" << fixed(top + plot_h, 1) << "\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double v = lo + (hi - lo) * t / 4.0;
    s << "<text x=\"" << fixed(left - 6, 1) << "\" y=\"" << fixed(Y(v) + 4, 1)
      << "\" text-anchor=\"end\">" << fixed(v, 3) << "</text>\n";
  }
  s << "<line class=\"zero\" x1=\"" << fixed(left, 1) << "\" y1=\"" << fixed(Y(0), 2) << "\" x2=\""
    << fixed(width - 30, 1) << "\" y2=\"" << fixed(Y(0), 2)
    << "\" stroke=\"gray\" stroke-dasharray=\"4 3\"/>\n";
  for (std::size_t i = 0; i < groups.size(); ++i) {
    const BoxSummary& b = boxes[i];
    const double cx = left + slot * (static_cast<double>(i) + 0.5);
    const double w = 40;
    s << "<g class=\"box\" data-method=\"" << groups[i].first << "\" data-n=\""
      << groups[i].second.size() << "\" data-min=\"" << num(b.min) << "\" data-q1=\"" << num(b.q1)
      << "\" data-median=\"" << num(b.median) << "\" data-q3=\"" << num(b.q3) << "\" data-max=\""
      << num(b.max) << "\">\n";
    s << "  <line x1=\"" << fixed(cx, 2) << "\" y1=\"" << fixed(Y(b.max), 2) << "\" x2=\""
      << fixed(cx, 2) << "\" y2=\"" << fixed(Y(b.min), 2) << "\" stroke=\"black\"/>\n";
    s << "  <rect x=\"" << fixed(cx - w / 2, 2) << "\" y=\"" << fixed(Y(b.q3), 2)
      << "\" width=\"" << fixed(w, 2) << "\" height=\"" << fixed(Y(b.q1) - Y(b.q3), 2)
      << "\" fill=\"#9ecae1\" stroke=\"black\"/>\n";
    s << "  <line x1=\"" << fixed(cx - w / 2, 2) << "\" y1=\"" << fixed(Y(b.median), 2)
      << "\" x2=\"" << fixed(cx + w / 2, 2) << "\" y2=\"" << fixed(Y(b.median), 2)
      << "\" stroke=\"black\" stroke-width=\"2\"/>\n";
    s << "  <text x=\"" << fixed(cx, 2) << "\" y=\"" << fixed(top + plot_h + 20, 1)
      << "\" text-anchor=\"middle\">" << groups[i].first << "</text>\n";
    s << "</g>\n";
  }
  s << "</svg>\n";
  return s.str();
}

void cmd_plot(const std::string& results_path, const std::string& out_path, std::ostream& out) {
  const auto groups = read_ratios(results_path);
  write_file(out_path, render_boxplot(groups, "Log RMSE ratio"));
  out << "wrote " << out_path << " (" << groups.size() << " methods)\n";
}

// ---------------------------------------------------------------- entry point

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multi-source domain adaptation for regression"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> sets;
  std::uint64_t seed = 0;
  unsigned threads = 0;
  app.add_option("--config", config_path, "key = value config file");
  app.add_option("--set", sets, "override one config key (key=value)");
  auto* seed_opt = app.add_option("--seed", seed, "master seed");
  auto* threads_opt = app.add_option("--threads", threads, "worker threads (0 = all cores)");

  auto* sim_cmd = app.add_subcommand("simulate", "run a simulation study");
  std::string scenario, methods, convention, sim_out = "results.csv", data_dir;
  double sigma = 0;
  int replicates = 0, sources = 0;
  long n = 0;
  auto* scenario_opt = sim_cmd->add_option("--scenario", scenario, "ts-linear, ts-sine, ts-mixture or msda-hier");
  auto* sigma_opt = sim_cmd->add_option("--sigma", sigma, "heterogeneity (msda-hier)");
  auto* sources_opt = sim_cmd->add_option("--sources", sources, "number of source domains (msda-hier)");
  auto* n_opt = sim_cmd->add_option("--n", n, "rows per domain");
  auto* reps_opt = sim_cmd->add_option("--replicates", replicates, "replicate count");
  auto* methods_opt = sim_cmd->add_option("--methods", methods, "comma-separated methods, or all");
  auto* conv_opt = sim_cmd->add_option("--convention", convention, "sd or variance");
  sim_cmd->add_option("--out", sim_out, "results CSV");
  sim_cmd->add_option("--data-dir", data_dir, "also write the replicate-0 datasets here");

  auto* fit_cmd = app.add_subcommand("fit", "fit a target ensemble");
  std::vector<std::string> source_paths;
  std::string target_path, scheme, fit_out = "model.json";
  fit_cmd->add_option("--source", source_paths, "labeled source CSV (repeatable)")->required();
  fit_cmd->add_option("--target", target_path, "target CSV (features)")->required();
  auto* scheme_opt = fit_cmd->add_option("--scheme", scheme, "stack, similarity or blend");
  fit_cmd->add_option("--out", fit_out, "model JSON");

  auto* pred_cmd = app.add_subcommand("predict", "predict with a fitted model");
  std::string model_path, pred_target, pred_out = "predictions.csv";
  pred_cmd->add_option("--model", model_path, "model JSON")->required();
  pred_cmd->add_option("--target", pred_target, "target CSV (features)")->required();
  pred_cmd->add_option("--out", pred_out, "predictions CSV");

  auto* plot_cmd = app.add_subcommand("plot", "box plot of log RMSE ratios");
  std::string results_path, plot_out = "plot.svg";
  plot_cmd->add_option("--results", results_path, "results CSV from simulate")->required();
  plot_cmd->add_option("--out", plot_out, "SVG file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 1;
  }

  try {
    RunConfig cfg;
    if (!config_path.empty()) load_config_file(config_path, cfg);
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + s + "'");
      cfg.set(s.substr(0, eq), s.substr(eq + 1));
    }
    if (*seed_opt) cfg.seed = seed;
    if (*threads_opt) cfg.threads = threads;
    if (*scenario_opt) cfg.set("scenario", scenario);
    if (*sigma_opt) cfg.sigma = sigma;
    if (*sources_opt) cfg.sources = sources;
    if (*n_opt) cfg.n = n;
    if (*reps_opt) cfg.replicates = replicates;
    if (*methods_opt) cfg.set("methods", methods);
    if (*conv_opt) cfg.set("convention", convention);
    if (*scheme_opt) cfg.set("scheme", scheme);
    cfg.validate();

    if (*sim_cmd) {
      cmd_simulate(cfg, sim_out, data_dir, out);
    } else if (*fit_cmd) {
      cmd_fit(cfg, source_paths, target_path, fit_out, out);
    } else if (*pred_cmd) {
      cmd_predict(model_path, pred_target, pred_out, out);
    } else if (*plot_cmd) {
      cmd_plot(results_path, plot_out, out);
    }
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

}  // namespace msda::cli
