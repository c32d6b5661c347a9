#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "temp_dir.hpp"
#include "wbcrescue/core.hpp"

using namespace wbcr;

TEST(LabelSet, BuildsInGivenOrder) {
  const auto ls = build_label_set({"SNE", "LY", "PLY", "PC"});
  EXPECT_EQ(ls.size(), 4u);
  EXPECT_EQ(ls.index_of("SNE"), 0u);
  EXPECT_EQ(ls.index_of("PC"), 3u);
  EXPECT_EQ(ls.name_at(2), "PLY");
}

TEST(LabelSet, RejectsDuplicateName) {
  try {
    build_label_set({"LY", "LY"});
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("duplicate class name"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("LY"), std::string::npos);
  }
}

TEST(LabelSet, RejectsEmptyNameAndTinySets) {
  EXPECT_THROW(build_label_set({"SNE", ""}), ValidationError);
  EXPECT_THROW(build_label_set({"SNE"}), ValidationError);
  EXPECT_THROW(build_label_set({}), ValidationError);
}

TEST(LabelSet, DefaultCatalogFileHasThirteenClasses) {
  const auto ls = load_label_set(WBCR_SOURCE_DIR "/data/labels_default.txt");
  EXPECT_EQ(ls.size(), 13u);
  EXPECT_EQ(ls, default_label_set());
  for (const char* name : {"SNE", "LY", "VLY", "PLY", "PC"}) EXPECT_TRUE(ls.contains(name));
}

TEST(LabelSet, IndexNameRoundTrip) {
  const auto ls = default_label_set();
  for (const auto& name : ls.names()) EXPECT_EQ(ls.name_at(ls.index_of(name)), name);
  for (ClassId i = 0; i < ls.size(); ++i) EXPECT_EQ(ls.index_of(ls.name_at(i)), i);
}

TEST(LabelSet, LabelFileIgnoresCommentsAndBlankLines) {
  testutil::TempDir dir;
  const auto path = dir.write("labels.txt", "# catalog\r\nSNE\r\n\r\nLY  # lymphocyte\r\nPLY\r\n");
  const auto ls = load_label_set(path);
  EXPECT_EQ(ls.names(), (std::vector<std::string>{"SNE", "LY", "PLY"}));
}

TEST(Probabilities, RenormalizesSmallDrift) {
  const std::vector<double> raw{0.70005, 0.29995 + 0.0004};
  const auto p = normalize_probabilities(raw);
  const double sum = raw[0] + raw[1];
  EXPECT_NEAR(p[0], raw[0] / sum, 1e-12);
  EXPECT_NEAR(p[1], raw[1] / sum, 1e-12);
  EXPECT_NEAR(p[0] + p[1], 1.0, 1e-15);
}

TEST(Probabilities, RejectsLargeDriftAndBadEntries) {
  EXPECT_THROW(normalize_probabilities(std::vector<double>{0.5, 0.4}), ValidationError);
  EXPECT_THROW(normalize_probabilities(std::vector<double>{-0.1, 1.1}), ValidationError);
  EXPECT_THROW(normalize_probabilities(std::vector<double>{1.01, 0.0}), ValidationError);
  EXPECT_THROW(normalize_probabilities(std::vector<double>{std::nan(""), 1.0}), ValidationError);
}

TEST(Config, ParsesAllKeys) {
  const auto cfg = parse_rescue_config_text(
      {"# rescue settings", "rare_classes = PLY, PC", "tau = 0.4", "tau_s=0.2  # spiky",
       "tau_m = 2.5", "boost_cap = 8", "boost.PLY = 6.5", ""},
      "cfg");
  EXPECT_EQ(cfg.rare_classes, (std::vector<std::string>{"PLY", "PC"}));
  EXPECT_DOUBLE_EQ(cfg.tau, 0.4);
  EXPECT_DOUBLE_EQ(cfg.tau_s, 0.2);
  EXPECT_DOUBLE_EQ(cfg.tau_m, 2.5);
  EXPECT_DOUBLE_EQ(cfg.boost_cap, 8.0);
  EXPECT_DOUBLE_EQ(cfg.boost_factors.at("PLY"), 6.5);
  EXPECT_NO_THROW(validate_config(cfg, default_label_set()));
}

TEST(Config, ErrorsNameTheLine) {
  try {
    parse_rescue_config_text({"tau = 0.5", "colour = blue"}, "rescue.cfg");
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("rescue.cfg:2"), std::string::npos) << e.what();
  }
  EXPECT_THROW(parse_rescue_config_text({"tau = lots"}, "x"), ValidationError);
  EXPECT_THROW(parse_rescue_config_text({"just words"}, "x"), ValidationError);
}

TEST(Config, ValidationRules) {
  const auto labels = default_label_set();
  auto check = [&](auto mutate) {
    RescueConfig c;
    mutate(c);
    validate_config(c, labels);
  };
  EXPECT_NO_THROW(check([](RescueConfig&) {}));
  EXPECT_THROW(check([](RescueConfig& c) { c.tau = 1.5; }), ValidationError);
  EXPECT_THROW(check([](RescueConfig& c) { c.tau_s = -0.1; }), ValidationError);
  EXPECT_THROW(check([](RescueConfig& c) { c.tau_m = -1.0; }), ValidationError);
  EXPECT_THROW(check([](RescueConfig& c) { c.tau_m = std::numeric_limits<double>::infinity(); }),
               ValidationError);
  EXPECT_THROW(check([](RescueConfig& c) { c.boost_cap = 0.5; }), ValidationError);
  EXPECT_THROW(check([](RescueConfig& c) { c.rare_classes = {"XYZ"}; }), ValidationError);
  EXPECT_THROW(check([](RescueConfig& c) { c.rare_classes = {"VLY"}; }), ValidationError);
  EXPECT_THROW(check([](RescueConfig& c) { c.rare_classes = {"PC", "PC"}; }), ValidationError);
  EXPECT_THROW(check([](RescueConfig& c) { c.boost_factors["LY"] = 2.0; }), ValidationError);
  EXPECT_THROW(check([](RescueConfig& c) { c.boost_factors["PLY"] = 0.5; }), ValidationError);
  EXPECT_THROW(check([](RescueConfig& c) { c.boost_factors["PLY"] = 11.0; }), ValidationError);
}

TEST(Config, AcceptsPhaseThreeDisableSentinels) {
  const auto cfg = parse_rescue_config_text({"tau_s = inf", "tau_m = -inf"}, "cfg");
  EXPECT_TRUE(std::isinf(cfg.tau_s) && cfg.tau_s > 0);
  EXPECT_TRUE(std::isinf(cfg.tau_m) && cfg.tau_m < 0);
  EXPECT_NO_THROW(validate_config(cfg, default_label_set()));
}

TEST(Counts, Validation) {
  const auto labels = build_label_set({"SNE", "PLY"});
  EXPECT_NO_THROW(validate_counts({{10, 0}}, labels));
  EXPECT_THROW(validate_counts({{0, 0}}, labels), ValidationError);
  EXPECT_THROW(validate_counts({{-1, 3}}, labels), ValidationError);
  EXPECT_THROW(validate_counts({{1, 2, 3}}, labels), ValidationError);
}
