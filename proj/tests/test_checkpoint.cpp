#include <gtest/gtest.h>

#include <filesystem>

#include "fusionrec/checkpoint.hpp"
#include "fusionrec/fusion_head.hpp"
#include "support/oracles.hpp"

using namespace fusionrec;

namespace {

HybridParams params_for(std::size_t d, std::uint64_t seed, Variant v = Variant::Full) {
  HybridModel model({12, d, d, 2, 0.2}, v);
  Rng rng(seed);
  auto p = model.init(rng);
  oracle::jitter(p, rng);
  return p;
}

}  // namespace

TEST(Checkpoint, RoundTripIsBitExact) {
  oracle::TempDir dir("ckpt");
  const auto path = dir.path() / "a.ckpt";
  const auto p = params_for(6, 1);
  save_checkpoint(p, "embed_dim = 6\n", path);
  const auto ck = load_checkpoint(path);
  EXPECT_EQ(ck.config_echo, "embed_dim = 6\n");
  auto q = params_for(6, 2);
  apply_checkpoint(ck, q);
  const auto a = p.tensors();
  const auto b = q.tensors();
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t k = 0; k < a.size(); ++k) EXPECT_EQ(*a[k].tensor, *b[k].tensor) << a[k].name;
  EXPECT_FALSE(std::filesystem::exists(dir.path() / "a.ckpt.tmp"));
}

TEST(Checkpoint, TruncationByOneByteFails) {
  oracle::TempDir dir("ckpt_trunc");
  const auto path = dir.path() / "a.ckpt";
  save_checkpoint(params_for(4, 1), "", path);
  std::filesystem::resize_file(path, std::filesystem::file_size(path) - 1);
  try {
    load_checkpoint(path);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Data);
  }
}

TEST(Checkpoint, CorruptByteFailsIntegrityCheck) {
  oracle::TempDir dir("ckpt_corrupt");
  const auto path = dir.path() / "a.ckpt";
  save_checkpoint(params_for(4, 1), "", path);
  auto bytes = read_file(path);
  bytes[bytes.size() / 2] ^= 0x40;
  EXPECT_THROW(decode_checkpoint(bytes, "x"), Error);
}

TEST(Checkpoint, VersionMismatchFails) {
  const auto p = params_for(4, 1);
  auto bytes = encode_checkpoint(p.tensors(), "");
  bytes[8] = 9;
  try {
    decode_checkpoint(bytes, "x");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("version"), std::string::npos);
  }
}

TEST(Checkpoint, ShapeMismatchNamesTheTensor) {
  oracle::TempDir dir("ckpt_shape");
  const auto path = dir.path() / "a.ckpt";
  save_checkpoint(params_for(32, 1), "", path);
  auto q = params_for(64, 1);
  try {
    apply_checkpoint(load_checkpoint(path), q);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("id_embeddings"), std::string::npos) << e.what();
    EXPECT_NE(std::string(e.what()).find("12x32"), std::string::npos) << e.what();
  }
}

TEST(Checkpoint, VariantMismatchFails) {
  oracle::TempDir dir("ckpt_variant");
  const auto path = dir.path() / "a.ckpt";
  save_checkpoint(params_for(4, 1, Variant::NoPseudo), "", path);
  auto q = params_for(4, 1, Variant::Full);
  EXPECT_THROW(apply_checkpoint(load_checkpoint(path), q), Error);
}

TEST(Checkpoint, NotACheckpoint) {
  oracle::TempDir dir("ckpt_bad");
  EXPECT_THROW(load_checkpoint(dir.file("x.ckpt", "hello")), Error);
  EXPECT_THROW(load_checkpoint(dir.path() / "missing.ckpt"), Error);
}
