#include "kftune/config.hpp"

#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "kftune/error.hpp"

#ifndef KFTUNE_CONFIG_DIR
#error "KFTUNE_CONFIG_DIR must point at the configs directory"
#endif

namespace kftune {
namespace {

std::string error_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

std::string replace(std::string s, const std::string& from, const std::string& to) {
  const auto pos = s.find(from);
  EXPECT_NE(pos, std::string::npos) << from;
  if (pos != std::string::npos) s.replace(pos, from.size(), to);
  return s;
}

TEST(Config, BundledCase1) {
  const ScenarioConfig c = bundled_config("case1");
  EXPECT_EQ(c.name, "case1");
  ASSERT_EQ(c.design.dim(), 1);
  EXPECT_EQ(c.design.parameters[0].role, ParamRole::ProcessNoiseIntensity);
  EXPECT_EQ(c.design.parameters[0].lower, 0.0);
  EXPECT_EQ(c.design.parameters[0].upper, 10.0);
  EXPECT_EQ(c.tuner.n_runs, 10);
  EXPECT_EQ(c.tuner.horizon, 200);
  EXPECT_EQ(c.tuner.n_seed, 5);
  EXPECT_EQ(c.tuner.max_iterations, 35);
  EXPECT_EQ(c.scenario.truth.dt, 0.1);
  EXPECT_EQ(c.effective_grid_points(), 101);
  EXPECT_NEAR(truth_point(c)(0), 1.0, 1e-15);
}

TEST(Config, BundledCase2) {
  const ScenarioConfig c = bundled_config("case2");
  ASSERT_EQ(c.design.dim(), 2);
  EXPECT_EQ(c.design.parameters[1].role, ParamRole::MeasurementNoiseVariance);
  EXPECT_EQ(c.tuner.n_seed, 10);
  EXPECT_EQ(c.tuner.max_iterations, 100);
  EXPECT_EQ(c.effective_grid_points(), 41);
  EXPECT_NEAR(truth_point(c)(1), 1.0, 1e-12);
  EXPECT_THROW(bundled_config("case3"), ConfigError);
}

TEST(Config, EmptyDocumentListsRequiredFields) {
  for (const std::string text : {"", "  \n", "{}"}) {
    const std::string msg = error_of(text);
    EXPECT_NE(msg.find("missing required fields"), std::string::npos) << msg;
    EXPECT_NE(msg.find("model"), std::string::npos);
    EXPECT_NE(msg.find("design"), std::string::npos);
  }
}

TEST(Config, NonPositiveStepNamesField) {
  const std::string msg = error_of(replace(bundled_config_text("case1"), "\"dt\": 0.1", "\"dt\": -0.1"));
  EXPECT_NE(msg.find("model.dt"), std::string::npos) << msg;
}

TEST(Config, UnknownKeyRejected) {
  const std::string msg =
      error_of(replace(bundled_config_text("case1"), "\"n_runs\": 10", "\"n_runz\": 10"));
  EXPECT_NE(msg.find("n_runz"), std::string::npos) << msg;
}

TEST(Config, SyntaxErrorHasPosition) {
  const std::string msg = error_of("{\n  \"model\": {\n    \"A\": [[0, 1],, [0, 0]]\n  }\n}\n");
  EXPECT_NE(msg.find("line 3"), std::string::npos) << msg;
  EXPECT_NE(msg.find("column"), std::string::npos) << msg;
}

TEST(Config, DimensionMismatchNamesField) {
  const std::string msg = error_of(replace(bundled_config_text("case1"), "\"H\": [[1, 0]]", "\"H\": [[1, 0, 0]]"));
  EXPECT_NE(msg.find("model.H"), std::string::npos) << msg;
  const std::string idx = error_of(replace(bundled_config_text("case1"), "\"upper\": 10.0}", "\"upper\": 10.0, \"index\": 1}"));
  EXPECT_NE(idx.find("index"), std::string::npos) << idx;
}

TEST(Config, InvalidValues) {
  EXPECT_FALSE(error_of(replace(bundled_config_text("case1"), "\"cost\": \"nees\"", "\"cost\": \"mse\"")).empty());
  EXPECT_FALSE(error_of(replace(bundled_config_text("case1"), "\"n_seed\": 5", "\"n_seed\": 1")).empty());
  EXPECT_FALSE(error_of(replace(bundled_config_text("case1"), "\"lower\": 0.0", "\"lower\": 20.0")).empty());
  EXPECT_FALSE(error_of(replace(bundled_config_text("case1"), "\"W\": [[0.1]]", "\"W\": [[-0.1]]")).empty());
  EXPECT_FALSE(error_of(replace(bundled_config_text("case1"), "\"n_runs\": 10", "\"n_runs\": \"ten\"")).empty());
  EXPECT_THROW(load_config("/nonexistent/kftune.json"), ConfigError);
}

TEST(Config, RoundTrip) {
  for (const char* name : {"case1", "case2"}) {
    const ScenarioConfig a = bundled_config(name);
    const std::string text = config_to_json(a);
    const ScenarioConfig b = parse_config(text);
    EXPECT_EQ(config_to_json(b), text);
    EXPECT_EQ(b.scenario.truth.A, a.scenario.truth.A);
    EXPECT_EQ(b.tuner.master_seed, a.tuner.master_seed);
    EXPECT_EQ(b.design.names(), a.design.names());
  }
}

TEST(Config, ShippedFilesMatchBundled) {
  for (const char* name : {"case1", "case2"}) {
    const ScenarioConfig file = load_config(std::string(KFTUNE_CONFIG_DIR) + "/" + name + ".json");
    EXPECT_EQ(config_to_json(file), config_to_json(bundled_config(name))) << name;
  }
}

}  // namespace
}  // namespace kftune
