#include <gtest/gtest.h>

#include <ebgevrey/beam_model.hpp>

using namespace ebgevrey;

namespace {

std::string default_text() {
  return "ell = 1\nell0 = 0.4\nell1 = 0.7\nxi1 = 0.2\nxi2 = 0.55\nrho1 = 1\nrho2 = 1\n"
         "alpha1 = 1\nalpha2 = 1\nalpha0 = 0.1\ngamma1 = 0.5\ngamma2 = 0.5\ngamma3 = 0.5\n";
}

std::vector<ErrorCode> codes_of(const std::string& text, DampingPolicy p = DampingPolicy::strict) {
  try {
    validate_config(parse_config_text(text), p);
  } catch (const ConfigError& e) {
    std::vector<ErrorCode> out;
    for (const auto& i : e.issues()) out.push_back(i.code);
    return out;
  }
  return {};
}

std::string replace(std::string text, const std::string& from, const std::string& to) {
  text.replace(text.find(from), from.size(), to);
  return text;
}

}  // namespace

TEST(BeamModel, DefaultTextMatchesDefaultConfig) {
  const BeamConfig c = validate_config(parse_config_text(default_text()));
  EXPECT_EQ(to_raw(c), to_raw(default_config()));
}

TEST(BeamModel, CommentsBlankLinesAndScientificNotation) {
  std::string text = "# header\n\n" + replace(default_text(), "alpha0 = 0.1", "alpha0 = 1e-1   # trailing");
  text = replace(text, "ell = 1\n", "ell = 1.0E0\n");
  const BeamConfig c = validate_config(parse_config_text(text));
  EXPECT_DOUBLE_EQ(c.alpha0, 0.1);
  EXPECT_DOUBLE_EQ(c.ell, 1.0);
}

TEST(BeamModel, MissingKeyIsNamed) {
  try {
    validate_config(parse_config_text(replace(default_text(), "gamma3 = 0.5\n", "")));
    FAIL();
  } catch (const ConfigError& e) {
    ASSERT_EQ(e.issues().size(), 1u);
    EXPECT_EQ(e.issues()[0].code, ErrorCode::missing_key);
    EXPECT_NE(std::string(e.what()).find("gamma3"), std::string::npos);
  }
}

TEST(BeamModel, UnknownKeyMalformedAndDuplicate) {
  EXPECT_EQ(codes_of(default_text() + "beta = 2\n"), std::vector{ErrorCode::unknown_key});
  EXPECT_THROW(parse_config_text(default_text() + "gamma1 0.5\n"), ConfigError);
  EXPECT_THROW(parse_config_text(default_text() + "gamma1 = 0.5\n"), ConfigError);
  EXPECT_THROW(parse_config_text("ell = 1x\n"), ConfigError);
}

TEST(BeamModel, OrderingViolation) {
  const auto codes = codes_of(replace(default_text(), "xi2 = 0.55", "xi2 = 0.75"));
  EXPECT_NE(std::find(codes.begin(), codes.end(), ErrorCode::ordering_violation), codes.end());
}

TEST(BeamModel, PointOnInterface) {
  const auto codes = codes_of(replace(default_text(), "xi2 = 0.55", "xi2 = 0.7"));
  EXPECT_NE(std::find(codes.begin(), codes.end(), ErrorCode::point_on_interface), codes.end());
}

TEST(BeamModel, AllIssuesReported) {
  std::string text = replace(default_text(), "rho1 = 1", "rho1 = -1");
  text = replace(text, "alpha2 = 1", "alpha2 = 0");
  EXPECT_EQ(codes_of(text).size(), 2u);
}

TEST(BeamModel, DampingPolicy) {
  std::string text = replace(default_text(), "gamma2 = 0.5", "gamma2 = 0");
  EXPECT_EQ(codes_of(text), std::vector{ErrorCode::non_positive_coefficient});
  EXPECT_TRUE(codes_of(text, DampingPolicy::allow_zero_damping).empty());
  text = replace(text, "gamma1 = 0.5", "gamma1 = -0.5");
  EXPECT_FALSE(codes_of(text, DampingPolicy::allow_zero_damping).empty());
}

TEST(BeamModel, UndampedAndUniform) {
  EXPECT_FALSE(default_config().undamped());
  EXPECT_TRUE(undamped_config().undamped());
  EXPECT_TRUE(default_config().uniform());
  BeamConfig c;
  c.rho2 = 2.0;
  EXPECT_FALSE(c.uniform());
}

TEST(BeamModel, SegmentsPartitionTheBeam) {
  BeamConfig c;
  c.rho2 = 3.0;
  c.alpha2 = 2.0;
  const auto segs = segments(c);
  EXPECT_DOUBLE_EQ(segs.front().a, 0.0);
  EXPECT_DOUBLE_EQ(segs.back().b, c.ell);
  double total = 0.0;
  for (int s = 0; s < 5; ++s) {
    total += segs[s].length();
    if (s > 0) EXPECT_DOUBLE_EQ(segs[s].a, segs[s - 1].b);
    const bool inner = s == 2 || s == 3;
    EXPECT_EQ(segs[s].viscous(), inner);
    EXPECT_DOUBLE_EQ(segs[s].rho, inner ? 3.0 : 1.0);
    EXPECT_DOUBLE_EQ(segs[s].alpha, inner ? 2.0 : 1.0);
    EXPECT_DOUBLE_EQ(segs[s].kappa, inner ? c.alpha0 : 0.0);
  }
  EXPECT_NEAR(total, c.ell, 1e-15);
}

TEST(BeamModel, GlobalViscousExtent) {
  BeamConfig c;
  c.extent = ViscousExtent::global;
  for (const auto& s : segments(c)) EXPECT_DOUBLE_EQ(s.kappa, c.alpha0);
}

TEST(BeamModel, CoefficientLookup) {
  const BeamConfig c;
  EXPECT_DOUBLE_EQ(coeff_at(c, 0.5).kappa, c.alpha0);
  EXPECT_DOUBLE_EQ(coeff_at(c, 0.1).kappa, 0.0);
  EXPECT_THROW(coeff_at(c, c.ell0), Error);
  EXPECT_THROW(coeff_at(c, 1.5), Error);
}
