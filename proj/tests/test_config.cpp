#include <gtest/gtest.h>

#include "fusionrec/config.hpp"
#include "support/oracles.hpp"

using namespace fusionrec;

namespace {

std::string error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Usage);
    return e.what();
  }
  ADD_FAILURE() << "no error";
  return {};
}

bool contains(const std::string& s, const std::string& part) { return s.find(part) != std::string::npos; }

}  // namespace

TEST(Config, ParsesCommentsAndBlankLines) {
  const auto kv = parse_config_text("# header\n\nlearning_rate = 0.01  # trailing\n  seeds=4,5\n", "c");
  ASSERT_EQ(kv.size(), 2u);
  EXPECT_EQ(kv[0], (std::pair<std::string, std::string>{"learning_rate", "0.01"}));
  EXPECT_EQ(kv[1], (std::pair<std::string, std::string>{"seeds", "4,5"}));
}

TEST(Config, AppliesValues) {
  oracle::TempDir dir("cfg");
  RunConfig c;
  apply_config_file(c, dir.file("a.conf", "learning_rate = 0.01\nseeds = 4, 5\nratios = 0.7,0.2,0.1\n"
                                          "variant = no-graph\nsynthetic = true\nk = 20\nreg_biases = false\n"));
  EXPECT_EQ(c.train.learning_rate, 0.01);
  EXPECT_EQ(c.seeds, (std::vector<std::uint64_t>{4, 5}));
  EXPECT_EQ(c.ratios.val, 0.2);
  EXPECT_EQ(c.variant, Variant::NoGraph);
  EXPECT_TRUE(c.synthetic);
  EXPECT_EQ(c.k, 20u);
}

TEST(Config, DuplicateKeyNamesBothLines) {
  const auto msg = error_of([] { parse_config_text("k = 1\n\nk = 2\n", "dup.conf"); });
  EXPECT_TRUE(contains(msg, "dup.conf:3")) << msg;
  EXPECT_TRUE(contains(msg, "line 1")) << msg;
}

TEST(Config, Rejections) {
  oracle::TempDir dir("cfg_bad");
  RunConfig c;
  EXPECT_TRUE(contains(error_of([&] { apply_config_file(c, dir.file("a.conf", "warp = 9\n")); }), "warp"));
  EXPECT_TRUE(contains(error_of([&] { set_config_value(c, "learning_rate", "fast"); }), "learning_rate"));
  EXPECT_TRUE(contains(error_of([&] { set_config_value(c, "k", "-3"); }), "k"));
  EXPECT_TRUE(contains(error_of([&] { set_config_value(c, "variant", "nope"); }), "nope"));
  EXPECT_TRUE(contains(error_of([&] { set_config_value(c, "ratios", "0.5,0.5"); }), "ratios"));
  error_of([&] { parse_config_text("just words\n", "x"); });
  error_of([&] { apply_config_file(c, dir.path() / "missing.conf"); });
}

TEST(Config, ValidateCatchesBadCombinations) {
  RunConfig c;
  c.ratios = {0.5, 0.3, 0.3};
  error_of([&] { c.validate(); });
  c = RunConfig{};
  c.seeds.clear();
  error_of([&] { c.validate(); });
  c = RunConfig{};
  c.k = 0;
  error_of([&] { c.validate(); });
  RunConfig{}.validate();
}

TEST(Config, EchoRoundTripsAndHashTracksChanges) {
  RunConfig a;
  set_config_value(a, "learning_rate", "0.0123");
  set_config_value(a, "synthetic_text_noise", "0.1");
  set_config_value(a, "seeds", "9,8");
  RunConfig b;
  for (const auto& [k, v] : parse_config_text(config_echo(a), "echo")) set_config_value(b, k, v);
  EXPECT_EQ(config_echo(a), config_echo(b));
  EXPECT_EQ(config_hash(a), config_hash(b));
  EXPECT_EQ(config_hash(a).size(), 16u);
  set_config_value(b, "learning_rate", "0.0124");
  EXPECT_NE(config_hash(a), config_hash(b));
  EXPECT_EQ(config_map(a).at("seeds"), "9,8");
  EXPECT_EQ(config_map(a).size(), parse_config_text(config_echo(a), "echo").size() + 1);
  set_config_value(b, "learning_rate", "0.0123");
  set_config_value(b, "out_dir", "elsewhere");
  EXPECT_EQ(config_hash(a), config_hash(b));
}

TEST(Config, DeskConfigParses) {
  RunConfig c;
  apply_config_file(c, std::string(FUSIONREC_SOURCE_DIR) + "/configs/synthetic_desk.conf");
  c.validate();
  EXPECT_TRUE(c.synthetic);
  EXPECT_EQ(c.seeds.size(), 3u);
}
