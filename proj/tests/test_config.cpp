#include <gtest/gtest.h>

#include "ergo/config.hpp"

using namespace ergo;

TEST(Config, Defaults) {
  const RunConfig c = parse_config("{}");
  EXPECT_EQ(c.model.name, "g_ou");
  EXPECT_EQ(c.model.params, std::vector<double>{0.5});
  EXPECT_EQ(c.grid.nx, 1601);
  EXPECT_NO_THROW(validate(c));
}

TEST(Config, FullDocument) {
  const RunConfig c = parse_config(R"({
    "model": {"name": "custom", "b": "-x", "h": "0", "sigma": "1", "sigma_lo_sq": 0.5, "sigma_hi_sq": 2, "p": 1},
    "grid": {"x_min": -4, "x_max": 4, "nx": 201},
    "run": {"f": "x^2", "t_end": 2, "seed": 7, "n_paths": 100, "policy": "lo"},
    "output": {"dir": "out"}
  })");
  EXPECT_EQ(c.model.sigma_hi_sq, 2.0);
  EXPECT_EQ(c.grid.nx, 201);
  EXPECT_EQ(c.run.seed, 7u);
  EXPECT_EQ(c.output.dir, "out");
  const auto m = build_model(c.model);
  EXPECT_EQ(m.b(2.0), -2.0);
  EXPECT_NO_THROW(validate(c));
}

TEST(Config, UnknownKeysRejected) {
  EXPECT_THROW(parse_config(R"({"modle": {}})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"grid": {"nx": 11, "ny": 3}})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"run": {"F": "x"}})"), ConfigError);
}

TEST(Config, TypeAndSyntaxErrors) {
  EXPECT_THROW(parse_config("{"), ConfigError);
  EXPECT_THROW(parse_config(R"({"grid": {"nx": "many"}})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"grid": 3})"), ConfigError);
}

TEST(Config, ValidationFailures) {
  RunConfig c;
  c.run.f = "x +";
  EXPECT_THROW(validate(c), ConfigError);
  c = RunConfig{};
  c.model.name = "custom";
  EXPECT_THROW(validate(c), ConfigError);
  c = RunConfig{};
  c.grid.dt = 1.0;  // far above the monotonicity bound
  EXPECT_THROW(validate(c), ConfigError);
  c = RunConfig{};
  c.model.sigma_lo_sq = 2.0;
  EXPECT_THROW(validate(c), ConfigError);
  c = RunConfig{};
  c.run.policy = "random";
  EXPECT_THROW(validate(c), ConfigError);
}

TEST(Config, ModelSpec) {
  ModelConfig m;
  apply_model_spec(m, "gou_bracket:2");
  EXPECT_EQ(m.name, "gou_bracket");
  EXPECT_EQ(m.params, std::vector<double>{2.0});
  apply_model_spec(m, "dirac");
  EXPECT_TRUE(m.params.empty());
  EXPECT_THROW(apply_model_spec(m, "g_ou:abc"), ConfigError);
}
