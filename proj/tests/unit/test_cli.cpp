#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "commands.hpp"
#include "config.hpp"
#include "csv.hpp"
#include "rwlab/error.hpp"

using namespace rwlab::app;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result call(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

std::filesystem::path write_temp(const std::string& name, const std::string& body) {
  const auto path = std::filesystem::temp_directory_path() / name;
  std::ofstream(path) << body;
  return path;
}

}  // namespace

TEST(Cli, QdPrintsWatsonConstant) {
  const auto r = call({"qd"});
  ASSERT_EQ(r.code, kOk) << r.err;
  EXPECT_NE(r.out.find("0.65946267"), std::string::npos);
}

TEST(Cli, ConfigErrorsExitTwoAndNameTheField) {
  auto r = call({"qd", "--eps", "3"});
  EXPECT_EQ(r.code, kConfig);
  EXPECT_NE(r.err.find("eps"), std::string::npos);
  r = call({"annealed", "--mu", "pareto:-1,1"});
  EXPECT_EQ(r.code, kConfig);
  EXPECT_NE(r.err.find("mu"), std::string::npos);
  EXPECT_EQ(call({}).code, kConfig);
  EXPECT_EQ(call({"nosuch"}).code, kConfig);
  EXPECT_EQ(call({"qd", "--bogus", "1"}).code, kConfig);
}

TEST(Cli, ConfigFileUnknownKeyRejected) {
  const auto path = write_temp("rwlab_cli_bad.json", R"({"lambda": [0.1], "lamda": 0.2})");
  const auto r = call({"qd", "--config", path.string()});
  EXPECT_EQ(r.code, kConfig);
  EXPECT_NE(r.err.find("lamda"), std::string::npos);
  std::filesystem::remove(path);
}

TEST(Cli, FlagsOverrideConfigFile) {
  const auto path = write_temp("rwlab_cli_ok.json", R"({"mu": "exp:1", "lambda": [0.5, 0.25]})");
  const auto r = call({"predict", "--config", path.string(), "--lambda", "0.125"});
  ASSERT_EQ(r.code, kOk) << r.err;
  EXPECT_NE(r.out.find("0.125"), std::string::npos);
  EXPECT_EQ(r.out.find("0.25,"), std::string::npos);
  std::filesystem::remove(path);
}

TEST(Cli, SubLatticeCertifyIsConfigError) {
  const auto r = call({"certify", "--lambda", "0.1"});
  EXPECT_EQ(r.code, kConfig);
  EXPECT_NE(r.err.find("delta1"), std::string::npos);
}

TEST(Cli, PercWithOpenProbability) {
  auto r = call({"perc", "--p-open", "1", "--N", "6", "--jmax", "3"});
  ASSERT_EQ(r.code, kOk) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j.at("path"), nlohmann::json({0, 1, 0, 1, 0, 1, 0}));
  r = call({"perc", "--p-open", "1", "--N", "4", "--jmax", "2", "--ascii"});
  ASSERT_EQ(r.code, kOk);
  EXPECT_NE(r.out.find('*'), std::string::npos);
}

TEST(Cli, WorkersDoNotChangeOutput) {
  const std::vector<std::string> base{"annealed", "--mu", "exp:1", "--lambda", "0.2",
                                      "--n", "2,4,6", "--replicas", "300", "--seed", "4"};
  auto one = base, three = base;
  one.insert(one.end(), {"--workers", "1"});
  three.insert(three.end(), {"--workers", "3"});
  const auto a = call(one), b = call(three);
  ASSERT_EQ(a.code, kOk) << a.err;
  EXPECT_EQ(a.out, b.out);
}

TEST(Config, WrongTypeNamesKey) {
  ExperimentConfig cfg;
  try {
    apply_json(cfg, nlohmann::json::parse(R"({"replicas": "many"})"));
    FAIL() << "expected ConfigError";
  } catch (const rwlab::ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("replicas"), std::string::npos);
  }
  EXPECT_THROW(apply_json(cfg, nlohmann::json::array()), rwlab::ConfigError);
}

TEST(Config, EffectiveConfigRoundTrips) {
  ExperimentConfig cfg;
  cfg.lambdas = {0.3, 0.03};
  cfg.delta1 = 0.001;
  cfg.j_max = 7;
  cfg.fit = rwlab::FitMethod::kLargestN;
  const auto j = to_json(cfg);
  ExperimentConfig back;
  apply_json(back, nlohmann::json::parse(j.dump()));
  EXPECT_EQ(to_json(back).dump(), j.dump());
  EXPECT_NO_THROW(validate(back));
}

TEST(Config, ValidateRanges) {
  ExperimentConfig cfg;
  cfg.delta = 0.5;  // above eps0 / 2
  EXPECT_THROW(validate(cfg), rwlab::ConfigError);
  cfg = {};
  cfg.lambdas = {0.1, -1.0};
  EXPECT_THROW(validate(cfg), rwlab::ConfigError);
  cfg = {};
  cfg.events = {"A_hL_M", "Bogus"};
  EXPECT_THROW(validate(cfg), rwlab::ConfigError);
  EXPECT_NO_THROW(validate(ExperimentConfig{}));
}

TEST(Csv, QuotingAndNumbers) {
  EXPECT_EQ(csv_quote("plain"), "plain");
  EXPECT_EQ(csv_quote("a,b"), "\"a,b\"");
  EXPECT_EQ(csv_quote("say \"hi\""), "\"say \"\"hi\"\"\"");
  std::ostringstream os;
  {
    CsvWriter w(os, {"name", "x", "k"});
    w << "pareto:0.7,1" << 0.1 << 3;
    w.end_row();
  }
  EXPECT_EQ(os.str(), "name,x,k\n\"pareto:0.7,1\",0.1,3\n");
}
