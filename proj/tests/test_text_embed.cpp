#include <gtest/gtest.h>

#include <cmath>

#include "fusionrec/text_embed.hpp"
#include "support/oracles.hpp"

using namespace fusionrec;

TEST(Encode, EmptyTextIsZero) {
  const auto v = encode_text("", 8);
  for (double x : v) EXPECT_EQ(x, 0.0);
  for (double x : encode_text("!!! ,,", 8)) EXPECT_EQ(x, 0.0);
}

TEST(Encode, Deterministic) {
  EXPECT_EQ(encode_text("income fund", 16, 3), encode_text("income fund", 16, 3));
  EXPECT_NE(encode_text("income fund", 16, 3), encode_text("income fund", 16, 4));
}

TEST(Encode, BondFundMatchesHandHashing) {
  std::vector<double> want(4, 0.0);
  for (const char* feature : {"bond", "fund", "bond fund"}) {
    const std::uint64_t h = oracle::fnv1a(std::string("0:") + feature);
    want[h % 4] += ((h / 4) % 2 == 0) ? 1.0 : -1.0;
  }
  double norm = 0.0;
  for (double x : want) norm += x * x;
  ASSERT_GT(norm, 0.0);
  for (double& x : want) x /= std::sqrt(norm);
  const auto got = encode_text("bond fund", 4, 0);
  for (std::size_t k = 0; k < 4; ++k) EXPECT_DOUBLE_EQ(got[k], want[k]);
}

TEST(Encode, NormIsZeroOrOne) {
  Rng rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    std::string text;
    const auto words = rng.below(6);
    for (std::uint64_t w = 0; w < words; ++w) text += "w" + std::to_string(rng.below(20)) + " ";
    const auto v = encode_text(text, 1 + rng.below(16));
    double n = 0.0;
    for (double x : v) n += x * x;
    EXPECT_TRUE(n == 0.0 || std::abs(n - 1.0) < 1e-12) << text;
  }
}

TEST(Encode, SameFeatureMultisetSameVector) {
  // Both texts have unigrams {a, b, a, b} and bigrams {a b, b a, a b}.
  EXPECT_EQ(encode_text("a b a b", 8), encode_text("A, b. a; B", 8));
}

TEST(Tokenize, SplitsOnPunctuationAndKeepsUtf8) {
  EXPECT_EQ(tokenize("Hello, World-2"), (std::vector<std::string>{"hello", "world", "2"}));
  EXPECT_EQ(tokenize("caf\xC3\xA9 ok"), (std::vector<std::string>{"caf\xC3\xA9", "ok"}));
}

TEST(Precomputed, ParsesRows) {
  oracle::TempDir dir("vec");
  const auto m = load_precomputed(dir.file("v.csv", "7,0.1,0.2\n8,1,-1\n"), 2);
  ASSERT_EQ(m.size(), 2u);
  EXPECT_DOUBLE_EQ(m.at("7")[0], 0.1);
  EXPECT_DOUBLE_EQ(m.at("7")[1], 0.2);
}

TEST(Precomputed, DimensionMismatchAndNanFail) {
  oracle::TempDir dir("vec_bad");
  EXPECT_THROW(load_precomputed(dir.file("a.csv", "7,0.1,0.2,0.3\n"), 2), Error);
  EXPECT_THROW(load_precomputed(dir.file("b.csv", "7,nan,0.2\n"), 2), Error);
  EXPECT_THROW(load_precomputed(dir.file("c.csv", "7,1,2\n7,1,2\n"), 2), Error);
  EXPECT_THROW(load_precomputed((dir.path() / "missing.csv").string(), 2), Error);
}

TEST(Precomputed, OverridesEncoderInNodeTable) {
  Dataset ds;
  ds.nodes = oracle::make_nodes(1, 1);
  ds.external_ids = {"5", "6"};
  std::map<std::string, EmbeddingVector> pre{{"6", {3.0, 4.0}}};
  const auto e = embed_nodes(ds, 2, 0, &pre);
  EXPECT_EQ(e(1, 0), 3.0);
  EXPECT_EQ(e(1, 1), 4.0);
  const auto enc = encode_text(ds.nodes[0].text, 2, 0);
  EXPECT_EQ(e(0, 0), enc[0]);
}

TEST(ColdStart, IdenticalAndOrthogonal) {
  EmbeddingIndex idx(2);
  idx.add(4, std::vector<double>{1, 0});
  idx.add(9, std::vector<double>{0, 3});
  const auto r = cold_start_topk(std::vector<double>{2, 0}, idx, 2);
  ASSERT_EQ(r.size(), 2u);
  EXPECT_EQ(r[0].id, 4u);
  EXPECT_NEAR(r[0].similarity, 1.0, 1e-15);
  EXPECT_NEAR(r[1].similarity, 0.0, 1e-15);
}

TEST(ColdStart, KnownAnglesRankByCosine) {
  EmbeddingIndex idx(2);
  const double angles[] = {1.2, 0.3, 0.7};
  for (NodeId k = 0; k < 3; ++k) idx.add(k, std::vector<double>{std::cos(angles[k]), std::sin(angles[k])});
  const auto r = cold_start_topk(std::vector<double>{1, 0}, idx, 3);
  ASSERT_EQ(r.size(), 3u);
  EXPECT_EQ(r[0].id, 1u);
  EXPECT_EQ(r[1].id, 2u);
  EXPECT_EQ(r[2].id, 0u);
  EXPECT_NEAR(r[0].similarity, std::cos(0.3), 1e-15);
  EXPECT_NEAR(r[1].similarity, std::cos(0.7), 1e-15);
  EXPECT_NEAR(r[2].similarity, std::cos(1.2), 1e-15);
}

TEST(ColdStart, TiesGoToSmallerIdAndZeroQueryFails) {
  EmbeddingIndex idx(2);
  idx.add(8, std::vector<double>{1, 1});
  idx.add(3, std::vector<double>{1, 1});
  const auto r = cold_start_topk(std::vector<double>{1, 1}, idx, 1);
  EXPECT_EQ(r[0].id, 3u);
  EXPECT_THROW(cold_start_topk(std::vector<double>{0, 0}, idx, 1), Error);
  EXPECT_THROW(cold_start_topk(std::vector<double>{1, 0, 0}, idx, 1), Error);
}
