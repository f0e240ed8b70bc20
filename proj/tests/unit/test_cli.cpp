#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>

#include "msda/cli/commands.hpp"
#include "msda/cli/dataset.hpp"
#include "msda/serialize.hpp"
#include "msda/stats.hpp"
#include "oracles.hpp"

using namespace msda;
using namespace msda::cli;
namespace fs = std::filesystem;

namespace {

class TempDir {
 public:
  TempDir() {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    path_ = fs::temp_directory_path() / (std::string("msda_cli_") + info->name());
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  std::string operator/(const std::string& name) const { return (path_ / name).string(); }

 private:
  fs::path path_;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const std::string& path, const std::string& text) { std::ofstream(path) << text; }

struct Outcome {
  int code;
  std::string out, err;
};

Outcome invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "msda");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

/// Learner computing x0 * slope.
AdaptedLearner slope_learner(double slope, double loss, Index p) {
  AdaptedLearner l;
  l.input = AffineScaler::identity(p);
  l.feature_map = nn::Mlp({nn::Layer{Matrix::Identity(p, p), Vector::Zero(p), nn::Activation::identity}});
  Matrix w = Matrix::Zero(p, 1);
  w(0, 0) = slope;
  l.regressor = nn::Mlp({nn::Layer{w, Vector::Zero(1), nn::Activation::identity}});
  l.critic = nn::Mlp({nn::Layer{Matrix::Zero(p, 1), Vector::Zero(1), nn::Activation::identity}});
  l.weighted_loss = loss;
  return l;
}

}  // namespace

TEST(Config, ParsesCommentsAndValues) {
  RunConfig c;
  std::istringstream in("# a comment\n\nlambda = 0.5\n  epochs=30  \nscheme = blend\nmethods = stack_da,sim_da\n");
  parse_config(in, "cfg", c);
  EXPECT_EQ(c.lambda, 0.5);
  EXPECT_EQ(c.epochs, 30);
  EXPECT_EQ(c.scheme, Scheme::blend);
  ASSERT_EQ(c.methods.size(), 2u);
  EXPECT_EQ(c.methods[1], sim::Method::sim_da);
}

TEST(Config, ErrorsNameTheLine) {
  RunConfig c;
  std::istringstream dup("lambda = 1\n\nlambda = 2\n");
  try {
    parse_config(dup, "run.cfg", c);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("run.cfg:3"), std::string::npos) << e.what();
  }
  std::istringstream unknown("lamda = 1\n");
  EXPECT_THROW(parse_config(unknown, "x", c), ConfigError);
  std::istringstream bad("epochs = many\n");
  EXPECT_THROW(parse_config(bad, "x", c), ConfigError);
  std::istringstream noeq("epochs 3\n");
  EXPECT_THROW(parse_config(noeq, "x", c), ConfigError);
  RunConfig v;
  v.epochs = 0;
  EXPECT_THROW(v.validate(), Error);
}

TEST(Config, CommentBlockRoundTrips) {
  RunConfig c;
  c.lambda = 0.25;
  c.cut_points = {-1.0, 0.5};
  c.scenario = sim::Scenario::msda_hier;
  c.methods = {sim::Method::stack_ols};
  c.seed = 123456789012345ULL;
  std::string block = config_comment_block(c);
  std::string plain;
  std::istringstream lines(block);
  for (std::string line; std::getline(lines, line);) plain += line.substr(2) + "\n";
  RunConfig back;
  std::istringstream in(plain);
  parse_config(in, "echo", back);
  EXPECT_EQ(back.entries(), c.entries());
}

TEST(Config, ConvertsToModuleConfigs) {
  RunConfig c;
  c.epochs = 77;
  c.categories = 3;
  c.seed = 9;
  c.merged_mean = false;
  EXPECT_EQ(c.adversarial().epochs, 77);
  EXPECT_EQ(c.adversarial().seed, derive_seed(9, "networks"));
  EXPECT_EQ(c.bbse().categories, 3);
  EXPECT_EQ(c.ensemble().single_da.adversarial.epochs, 77);
  EXPECT_FALSE(c.ensemble().merged_mean_column);
  EXPECT_EQ(c.scenario_spec().seed, 9u);
}

TEST(Csv, ReadsAndReportsErrors) {
  TempDir dir;
  spit(dir / "a.csv", "# note\ny,x1,x2\n1,2,3\n4,5,6\n");
  const DomainData d = read_labeled(dir / "a.csv");
  EXPECT_EQ(d.size(), 2);
  EXPECT_EQ(d.dim(), 2);
  EXPECT_EQ(d.outcomes()(1), 4.0);
  EXPECT_EQ(d.features()(1, 1), 6.0);

  Warnings w;
  const DomainData u = read_unlabeled(dir / "a.csv", &w);
  EXPECT_FALSE(u.labeled());
  EXPECT_EQ(u.dim(), 2);
  EXPECT_EQ(w.size(), 1u);

  spit(dir / "ragged.csv", "y,x1\n1,2\n3\n");
  try {
    read_labeled(dir / "ragged.csv");
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find(":3"), std::string::npos) << e.what();
  }
  spit(dir / "text.csv", "y,x1\n1,abc\n");
  EXPECT_THROW(read_labeled(dir / "text.csv"), DataError);
  spit(dir / "late_y.csv", "x1,y\n1,2\n");
  EXPECT_THROW(read_unlabeled(dir / "late_y.csv", nullptr), DataError);
  spit(dir / "no_y.csv", "x1,x2\n1,2\n");
  EXPECT_THROW(read_labeled(dir / "no_y.csv"), DataError);
  EXPECT_THROW(read_labeled(dir / "missing.csv"), DataError);
}

TEST(Csv, WriteReadRoundTripIsExact) {
  TempDir dir;
  Rng rng(1);
  const Matrix x = msda::testing::random_matrix(20, 3, rng);
  const Vector y = msda::testing::random_vector(20, rng);
  write_domain(dir / "d.csv", x, &y);
  const DomainData d = read_labeled(dir / "d.csv");
  EXPECT_EQ(d.features(), x);
  EXPECT_EQ(d.outcomes(), y);
  write_domain(dir / "t.csv", x, nullptr);
  EXPECT_EQ(read_unlabeled(dir / "t.csv", nullptr).features(), x);
}

TEST(Cli, SimulateIsByteIdenticalAcrossRunsAndThreads) {
  TempDir dir;
  const std::vector<std::string> base = {"--seed", "5", "simulate", "--scenario", "ts-linear",
                                         "--replicates", "4", "--n", "200"};
  auto with = [&](std::vector<std::string> extra, const std::string& out) {
    std::vector<std::string> a = extra;
    a.insert(a.end(), base.begin(), base.end());
    a.push_back("--out");
    a.push_back(out);
    return invoke(a);
  };
  ASSERT_EQ(with({}, dir / "a.csv").code, 0);
  ASSERT_EQ(with({}, dir / "b.csv").code, 0);
  ASSERT_EQ(with({"--threads", "3"}, dir / "c.csv").code, 0);
  const std::string a = slurp(dir / "a.csv");
  EXPECT_EQ(a, slurp(dir / "b.csv"));
  // The echo records the thread count; the table itself must match.
  const std::string c = slurp(dir / "c.csv");
  EXPECT_EQ(a.substr(a.find("scenario,")), c.substr(c.find("scenario,")));
  EXPECT_NE(a.find("# seed = 5\n"), std::string::npos);
  EXPECT_NE(a.find("scenario,sigma,replicate,method,rmse,log_rmse_ratio,warnings\n"), std::string::npos);
}

TEST(Cli, ExitCodes) {
  TempDir dir;
  const Outcome bad_scenario = invoke({"simulate", "--scenario", "bogus", "--out", dir / "x.csv"});
  EXPECT_EQ(bad_scenario.code, 1);
  EXPECT_NE(bad_scenario.err.find("unknown scenario"), std::string::npos);
  EXPECT_FALSE(fs::exists(dir / "x.csv"));
  EXPECT_EQ(invoke({"simulate", "--no-such-flag"}).code, 1);
  EXPECT_EQ(invoke({}).code, 1);
  EXPECT_EQ(invoke({"--set", "lambda", "simulate"}).code, 1);
  EXPECT_EQ(invoke({"--set", "epochs=-3", "simulate", "--out", dir / "y.csv"}).code, 1);
  EXPECT_FALSE(fs::exists(dir / "y.csv"));
  EXPECT_EQ(invoke({"--config", dir / "none.cfg", "simulate"}).code, 1);
  EXPECT_EQ(invoke({"fit", "--source", dir / "none.csv", "--target", dir / "none.csv"}).code, 2);
  EXPECT_EQ(invoke({"plot", "--results", dir / "none.csv"}).code, 2);
  EXPECT_EQ(invoke({"--help"}).code, 0);
}

TEST(Cli, ConfigFileAndFlagPrecedence) {
  TempDir dir;
  spit(dir / "run.cfg", "replicates = 2\nn = 120\nseed = 3\n");
  const Outcome r = invoke({"--config", dir / "run.cfg", "--set", "seed=4", "simulate", "--scenario",
                     "ts-sine", "--out", dir / "r.csv"});
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string text = slurp(dir / "r.csv");
  EXPECT_NE(text.find("# seed = 4\n"), std::string::npos);
  EXPECT_NE(text.find("# n = 120\n"), std::string::npos);
  EXPECT_NE(text.find("# scenario = ts-sine\n"), std::string::npos);
  std::size_t rows = 0;
  for (char ch : text.substr(text.find("scenario,"))) rows += ch == '\n';
  EXPECT_EQ(rows, 1u + 2u * 3u);
}

TEST(Cli, DataDirWritesFeaturesOnlyTarget) {
  TempDir dir;
  const Outcome r = invoke({"simulate", "--scenario", "ts-linear", "--replicates", "1", "--n", "50", "--out",
                     dir / "r.csv", "--data-dir", dir / "data"});
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string target = slurp(dir / "data/target.csv");
  EXPECT_EQ(target.substr(0, 3), "x1\n");
  EXPECT_EQ(read_labeled(dir / "data/source.csv").size(), 50);
}

TEST(Cli, FitWithStubbedComponentsUsesSimilarityFormula) {
  TempDir dir;
  Rng rng(2);
  const Matrix x = msda::testing::random_matrix(10, 2, rng);
  const Vector y = msda::testing::random_vector(10, rng);
  for (const char* name : {"s1.csv", "s2.csv", "s3.csv"}) write_domain(dir / name, x, &y);
  write_domain(dir / "t.csv", x, nullptr);

  int calls = 0;
  bool asked_for_stacking = true;
  const ComponentsFn stub = [&](const std::vector<DomainData>& sources, const DomainData& target,
                                const EnsembleConfig&, bool with_stacking) {
    ++calls;
    asked_for_stacking = with_stacking;
    EXPECT_FALSE(target.labeled());
    EnsembleComponents c;
    const double losses[] = {1.0, 1.0, 2.0};
    for (std::size_t k = 0; k < sources.size(); ++k) {
      c.names.push_back(sources[k].name());
      SingleDaResult r;
      r.learner = slope_learner(static_cast<double>(k + 1), losses[k], 2);
      c.runs.push_back(r);
    }
    return c;
  };
  RunConfig cfg;
  cfg.scheme = Scheme::similarity;
  std::ostringstream log;
  cmd_fit(cfg, {dir / "s1.csv", dir / "s2.csv", dir / "s3.csv"}, dir / "t.csv", dir / "m.json", log, stub);
  EXPECT_EQ(calls, 1);
  EXPECT_FALSE(asked_for_stacking);

  const Json j = Json::parse(slurp(dir / "m.json"));
  const EnsembleModel m = ensemble_from_json(j);
  ASSERT_EQ(m.weights.size(), 3);
  EXPECT_NEAR(m.weights(0), 0.4, 1e-15);
  EXPECT_NEAR(m.weights(1), 0.4, 1e-15);
  EXPECT_NEAR(m.weights(2), 0.2, 1e-15);
  EXPECT_EQ(j["config"]["scheme"], "similarity");

  // Prediction is 0.4 x0 + 0.8 x0 + 0.6 x0.
  std::ostringstream plog;
  cmd_predict(dir / "m.json", dir / "t.csv", dir / "p.csv", plog);
  std::ifstream in(dir / "p.csv");
  std::string line;
  std::vector<double> preds;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      EXPECT_EQ(line, "prediction");
      header = true;
      continue;
    }
    preds.push_back(std::stod(line));
  }
  ASSERT_EQ(preds.size(), 10u);
  for (Index i = 0; i < 10; ++i) EXPECT_NEAR(preds[static_cast<std::size_t>(i)], 1.8 * x(i, 0), 1e-12);
}

TEST(Cli, FitAndPredictEndToEnd) {
  TempDir dir;
  ASSERT_EQ(invoke({"--set", "epochs=10", "--set", "max_iterations=1", "--set", "categories=2",
                 "--set", "knots=4", "simulate", "--scenario", "msda-hier", "--sources", "2",
                 "--replicates", "1", "--n", "60", "--out", dir / "r.csv", "--data-dir", dir / "d"})
                .code,
            0);
  const Outcome fit = invoke({"--set", "epochs=10", "--set", "max_iterations=1", "--set", "categories=2",
                       "--set", "knots=4", "fit", "--source", dir / "d/source1.csv", "--source",
                       dir / "d/source2.csv", "--target", dir / "d/target.csv", "--scheme", "blend",
                       "--out", dir / "m.json"});
  ASSERT_EQ(fit.code, 0) << fit.err;
  const Outcome pred = invoke({"predict", "--model", dir / "m.json", "--target", dir / "d/target.csv", "--out",
                        dir / "p.csv"});
  ASSERT_EQ(pred.code, 0) << pred.err;
  const EnsembleModel m = ensemble_from_json(Json::parse(slurp(dir / "m.json")));
  const Vector expect = predict_ensemble(m, read_unlabeled(dir / "d/target.csv", nullptr).features());
  const std::string p = slurp(dir / "p.csv");
  EXPECT_NE(p.find("# scheme = blend\n"), std::string::npos);
  EXPECT_EQ(std::count(p.begin(), p.end(), '\n'), std::count(p.begin(), p.end(), '#') + 1 + expect.size());

  // A target with the wrong feature count fails at runtime.
  spit(dir / "wide.csv", "x1,x2\n1,2\n");
  EXPECT_EQ(invoke({"predict", "--model", dir / "m.json", "--target", dir / "wide.csv", "--out",
                 dir / "q.csv"})
                .code,
            2);
}

TEST(Plot, BoxesCarryFiveNumberSummaries) {
  TempDir dir;
  spit(dir / "r.csv",
       "# seed = 0\nscenario,sigma,replicate,method,rmse,log_rmse_ratio,warnings\n"
       "s,0.5,0,merged_ols,1,0,\ns,0.5,0,stack_da,0.9,-0.2,\ns,0.5,1,merged_ols,1,0,\n"
       "s,0.5,1,stack_da,0.9,-0.1,\ns,0.5,2,stack_da,nan,nan,failed; badly\ns,0.5,3,stack_da,1,0.3,\n");
  const auto groups = read_ratios(dir / "r.csv");
  ASSERT_EQ(groups.size(), 2u);
  EXPECT_EQ(groups[1].first, "stack_da");
  EXPECT_EQ(groups[1].second.size(), 3u);
  ASSERT_EQ(invoke({"plot", "--results", dir / "r.csv", "--out", dir / "p.svg"}).code, 0);
  const std::string svg = slurp(dir / "p.svg");
  const BoxSummary b = box_summary(groups[1].second);
  std::smatch m;
  ASSERT_TRUE(std::regex_search(svg, m, std::regex("data-method=\"stack_da\"[^>]*data-median=\"([^\"]+)\"")));
  EXPECT_DOUBLE_EQ(std::stod(m[1]), b.median);
  ASSERT_TRUE(std::regex_search(svg, m, std::regex("data-method=\"stack_da\"[^>]*data-q1=\"([^\"]+)\"")));
  EXPECT_DOUBLE_EQ(std::stod(m[1]), b.q1);
  EXPECT_NE(svg.find("class=\"zero\""), std::string::npos);

  spit(dir / "bad.csv", "method,value\nx,1\n");
  EXPECT_THROW(read_ratios(dir / "bad.csv"), DataError);
}

TEST(Results, WarningsAreSanitised) {
  sim::ExperimentResult r;
  r.spec.scenario = sim::Scenario::msda_hier;
  r.methods = {sim::Method::merged_ols};
  sim::ResultRow row;
  row.rmse = std::nan("");
  row.log_rmse_ratio = std::nan("");
  row.warning = "a, b\nc";
  r.rows.push_back(row);
  const std::string csv = results_csv(r, RunConfig{});
  EXPECT_NE(csv.find("msda-hier,0.5,0,merged_ols,nan,nan,a; b;c\n"), std::string::npos) << csv;
}
