#include "msda/cli/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace msda::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size() || !std::isfinite(out)) {
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  }
  return out;
}

template <typename T>
T to_integer(const std::string& key, const std::string& v) {
  T out{};
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw ConfigError(key + ": expected an integer, got '" + v + "'");
  }
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

std::string fmt(double v) {
  char buf[32];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  (void)ec;
  return std::string(buf, p);
}

template <typename F>
auto wrap(const std::string& key, F&& f) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(key + ": " + e.what());
  }
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  if (key == "categories") categories = to_integer<int>(key, v);
  else if (key == "cut_points") {
    cut_points.clear();
    for (const auto& c : split_list(v)) cut_points.push_back(to_double(key, c));
  }
  else if (key == "knots") knots = to_integer<int>(key, v);
  else if (key == "epsilon") epsilon = to_double(key, v);
  else if (key == "ridge") ridge = to_double(key, v);
  else if (key == "lambda") lambda = to_double(key, v);
  else if (key == "clip") clip = to_double(key, v);
  else if (key == "epochs") epochs = to_integer<int>(key, v);
  else if (key == "batch_size") batch_size = to_integer<long>(key, v);
  else if (key == "critic_steps") critic_steps = to_integer<int>(key, v);
  else if (key == "lr_generator") lr_generator = to_double(key, v);
  else if (key == "lr_critic") lr_critic = to_double(key, v);
  else if (key == "warmup_fraction") warmup_fraction = to_double(key, v);
  else if (key == "hidden") hidden = to_integer<long>(key, v);
  else if (key == "representation") representation = to_integer<long>(key, v);
  else if (key == "critic_hidden") critic_hidden = to_integer<long>(key, v);
  else if (key == "max_iterations") max_iterations = to_integer<int>(key, v);
  else if (key == "tolerance") tolerance = to_double(key, v);
  else if (key == "scheme") scheme = wrap(key, [&] { return scheme_from_string(v); });
  else if (key == "merged_mean") merged_mean = to_bool(key, v);
  else if (key == "cross_fit_diagonal") cross_fit_diagonal = to_bool(key, v);
  else if (key == "scenario") scenario = wrap(key, [&] { return sim::scenario_from_string(v); });
  else if (key == "sigma") sigma = to_double(key, v);
  else if (key == "sources") sources = to_integer<int>(key, v);
  else if (key == "n") n = to_integer<long>(key, v);
  else if (key == "methods") {
    methods.clear();
    if (v != "all") {
      for (const auto& m : split_list(v)) {
        methods.push_back(wrap(key, [&] { return sim::method_from_string(m); }));
      }
    }
  }
  else if (key == "replicates") replicates = to_integer<int>(key, v);
  else if (key == "convention") convention = wrap(key, [&] { return sim::convention_from_string(v); });
  else if (key == "seed") seed = to_integer<std::uint64_t>(key, v);
  else if (key == "threads") threads = to_integer<unsigned>(key, v);
  else throw ConfigError("unknown config key '" + key + "'");
}

void RunConfig::validate() const {
  auto require = [](bool ok, const std::string& msg) {
    if (!ok) throw ConfigError(msg);
  };
  require(!cut_points.empty() || categories == 0 || (categories >= 2 && categories <= 50),
          "categories must be 0 (automatic) or lie in [2, 50]");
  for (std::size_t i = 1; i < cut_points.size(); ++i) {
    require(cut_points[i] > cut_points[i - 1], "cut_points must be strictly increasing");
  }
  require(knots >= 3 && knots <= 40, "knots must lie in [3, 40]");
  require(epsilon > 0.0 && epsilon < 1.0, "epsilon must lie in (0, 1)");
  require(ridge >= 0.0, "ridge must be >= 0");
  require(lambda >= 0.0, "lambda must be >= 0");
  require(clip > 0.0, "clip must be > 0");
  require(epochs >= 1, "epochs must be >= 1");
  require(batch_size >= 0, "batch_size must be >= 0");
  require(critic_steps >= 1, "critic_steps must be >= 1");
  require(lr_generator > 0.0 && lr_critic > 0.0, "learning rates must be > 0");
  require(warmup_fraction >= 0.0 && warmup_fraction <= 1.0, "warmup_fraction must lie in [0, 1]");
  require(hidden >= 1 && representation >= 1 && critic_hidden >= 1, "network widths must be >= 1");
  require(max_iterations >= 1, "max_iterations must be >= 1");
  require(tolerance > 0.0, "tolerance must be > 0");
  require(sigma >= 0.0, "sigma must be >= 0");
  require(sources >= 1, "sources must be >= 1");
  require(n >= 10, "n must be >= 10");
  require(replicates >= 1, "replicates must be >= 1");
  const bool single = scenario != sim::Scenario::msda_hier;
  for (sim::Method m : methods) {
    const bool wls = m == sim::Method::wls_estimated || m == sim::Method::wls_oracle;
    require(!(wls && !single), "method " + sim::to_string(m) + " needs a single-source scenario");
  }
}

std::vector<std::pair<std::string, std::string>> RunConfig::entries() const {
  std::string cuts, meth;
  for (double c : cut_points) cuts += (cuts.empty() ? "" : ",") + fmt(c);
  for (sim::Method m : methods) meth += (meth.empty() ? "" : ",") + sim::to_string(m);
  return {
      {"categories", std::to_string(categories)},
      {"cut_points", cuts},
      {"knots", std::to_string(knots)},
      {"epsilon", fmt(epsilon)},
      {"ridge", fmt(ridge)},
      {"lambda", fmt(lambda)},
      {"clip", fmt(clip)},
      {"epochs", std::to_string(epochs)},
      {"batch_size", std::to_string(batch_size)},
      {"critic_steps", std::to_string(critic_steps)},
      {"lr_generator", fmt(lr_generator)},
      {"lr_critic", fmt(lr_critic)},
      {"warmup_fraction", fmt(warmup_fraction)},
      {"hidden", std::to_string(hidden)},
      {"representation", std::to_string(representation)},
      {"critic_hidden", std::to_string(critic_hidden)},
      {"max_iterations", std::to_string(max_iterations)},
      {"tolerance", fmt(tolerance)},
      {"scheme", to_string(scheme)},
      {"merged_mean", merged_mean ? "true" : "false"},
      {"cross_fit_diagonal", cross_fit_diagonal ? "true" : "false"},
      {"scenario", sim::to_string(scenario)},
      {"sigma", fmt(sigma)},
      {"sources", std::to_string(sources)},
      {"n", std::to_string(n)},
      {"methods", meth.empty() ? "all" : meth},
      {"replicates", std::to_string(replicates)},
      {"convention", sim::to_string(convention)},
      {"seed", std::to_string(seed)},
      {"threads", std::to_string(threads)},
  };
}

BbseOptions RunConfig::bbse() const {
  BbseOptions o;
  o.categories = categories;
  o.cut_points = cut_points;
  o.knots = knots;
  o.epsilon = epsilon;
  o.ridge = ridge;
  return o;
}

AdvConfig RunConfig::adversarial() const {
  AdvConfig a;
  a.lambda = lambda;
  a.epochs = epochs;
  a.batch_size = batch_size;
  a.critic_steps = critic_steps;
  a.clip = clip;
  a.lr_generator = lr_generator;
  a.lr_critic = lr_critic;
  a.warmup_fraction = warmup_fraction;
  a.shape.hidden = hidden;
  a.shape.representation = representation;
  a.shape.critic_hidden = critic_hidden;
  a.seed = derive_seed(seed, "networks");
  return a;
}

SingleDaConfig RunConfig::single_da() const {
  SingleDaConfig c;
  c.max_iterations = max_iterations;
  c.tolerance = tolerance;
  c.adversarial = adversarial();
  c.bbse = bbse();
  c.seed = seed;
  return c;
}

EnsembleConfig RunConfig::ensemble() const {
  EnsembleConfig e;
  e.single_da = single_da();
  e.merged_mean_column = merged_mean;
  e.cross_fit_diagonal = cross_fit_diagonal;
  e.threads = threads;
  e.seed = seed;
  return e;
}

sim::ScenarioSpec RunConfig::scenario_spec() const {
  sim::ScenarioSpec s;
  s.scenario = scenario;
  s.sigma = sigma;
  s.sources = scenario == sim::Scenario::msda_hier ? sources : 1;
  s.n = n;
  s.seed = seed;
  s.convention = convention;
  return s;
}

sim::ExperimentConfig RunConfig::experiment() const {
  sim::ExperimentConfig c;
  c.wls_bbse = bbse();
  c.ensemble = ensemble();
  c.threads = threads;
  return c;
}

void parse_config(std::istream& in, const std::string& source_name, RunConfig& cfg) {
  std::string line;
  int lineno = 0;
  std::set<std::string> seen;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    const std::string where = source_name + ":" + std::to_string(lineno);
    if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value'");
    const std::string key = trim(t.substr(0, eq));
    if (!seen.insert(key).second) throw ConfigError(where + ": duplicate key '" + key + "'");
    try {
      cfg.set(key, t.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError(where + ": " + e.what());
    }
  }
}

void load_config_file(const std::string& path, RunConfig& cfg) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  parse_config(in, path, cfg);
}

std::string config_comment_block(const RunConfig& cfg) {
  std::string out;
  for (const auto& [k, v] : cfg.entries()) out += "# " + k + " = " + v + "\n";
  return out;
}

}  // namespace msda::cli
