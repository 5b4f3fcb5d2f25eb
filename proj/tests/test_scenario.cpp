#include <gtest/gtest.h>

#include <sstream>

#include "trgeom/scenario.hpp"

using namespace trgeom;

namespace {

Config parse(const std::string& text) {
  std::istringstream is(text);
  return Config::parse(is, "test.cfg");
}

std::string config_error(const std::string& text) {
  try {
    build_scenario(parse(text));
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ConfigError) << e.what();
    return e.what();
  }
  ADD_FAILURE() << "no ConfigError";
  return {};
}

const char* kMaslov = R"(
[scenario]
name = t
task = maslov
[chart]
type = fubini_study
n = 2
[immersion]
family = clifford
resolution = 16
)";

}  // namespace

TEST(Scenario, BuildsChartAndImmersion) {
  auto s = build_scenario(parse(kMaslov));
  EXPECT_EQ(s.task, Task::Maslov);
  ASSERT_TRUE(s.immersion);
  EXPECT_EQ(s.immersion->size(), 256);
  EXPECT_EQ(s.chart->n(), 2);
  EXPECT_FALSE(s.family);
}

TEST(Scenario, OverridesTakePrecedence) {
  Overrides ov;
  ov.resolution = 8;
  ov.seed = 9;
  auto s = build_scenario(parse(kMaslov), ov);
  EXPECT_EQ(s.immersion->size(), 64);
  EXPECT_EQ(s.seed, 9u);
}

TEST(Scenario, MalformedValueNamesKey) {
  std::string text = kMaslov;
  text.replace(text.find("resolution = 16"), 15, "resolution = sixteen");
  EXPECT_NE(config_error(text).find("immersion.resolution"), std::string::npos);
}

TEST(Scenario, UnknownKeyIsRejected) {
  std::string msg = config_error(std::string(kMaslov) + "radus = 2\n");
  EXPECT_NE(msg.find("immersion.radus"), std::string::npos) << msg;
}

TEST(Scenario, MissingKeyAndBadChoice) {
  std::string text = kMaslov;
  text.erase(text.find("family = clifford"), 17);
  EXPECT_NE(config_error(text).find("immersion.family"), std::string::npos);
  std::string other = kMaslov;
  other.replace(other.find("fubini_study"), 12, "sphere");
  EXPECT_NE(config_error(other).find("chart.type"), std::string::npos);
}

TEST(Scenario, SyntaxErrorReportsLine) {
  std::istringstream is("[scenario\nname = x\n");
  try {
    Config::parse(is, "bad.cfg");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ConfigError);
    EXPECT_NE(std::string(e.what()).find("line 1"), std::string::npos) << e.what();
  }
}

TEST(Scenario, PerturbationFamily) {
  std::string text = std::string(kMaslov) +
                     "[perturbation]\nmode = kahler-form\nbump.amp = 0.1\nbump.width = 1.2\nbump.center = 0.4,0.2 -0.3,0.1\n";
  text.replace(text.find("task = maslov"), 13, "task = moser");
  auto s = build_scenario(parse(text));
  ASSERT_TRUE(s.family);
  EXPECT_EQ(s.family->mode(), FormMode::KahlerForm);
  EXPECT_FALSE(s.family->trivial());
  std::string wrong = text;
  wrong.replace(wrong.find("bump.center = 0.4,0.2 -0.3,0.1"), 30, "bump.center = 0.4,0.2");
  EXPECT_NE(config_error(wrong).find("perturbation.bump.center"), std::string::npos);
}

TEST(Scenario, MoserNeedsPerturbation) {
  std::string text = kMaslov;
  text.replace(text.find("task = maslov"), 13, "task = moser");
  EXPECT_NE(config_error(text).find("perturbation.mode"), std::string::npos);
}

TEST(Scenario, CoreGeodesicAndLinearTorus) {
  auto s = build_scenario(parse(R"(
[scenario]
name = core
task = linearize
[chart]
type = hyperbolic_cylinder
c = 2
ell = 2
[immersion]
family = core-geodesic
resolution = 33
)"));
  EXPECT_EQ(s.immersion->size(), 33);
  EXPECT_TRUE(s.immersion->valid());
  auto lin = build_scenario(parse(R"(
[scenario]
name = lin
task = maslov
[chart]
type = flat
n = 2
[immersion]
family = linear-torus
resolution = 8
matrix = 1 0.3 ; 0 1
)"));
  EXPECT_TRUE(lin.immersion->valid());
}

TEST(Scenario, ConventionHashIsStable) {
  EXPECT_EQ(convention_hash().size(), 16u);
  EXPECT_EQ(convention_hash(), convention_hash());
  EXPECT_EQ(fnv1a(""), 0xcbf29ce484222325ull);
  EXPECT_EQ(fnv1a("a"), 0xaf63dc4c8601ec8cull);
}
