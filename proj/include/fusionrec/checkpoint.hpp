#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <string>
#include <vector>

#include "fusionrec/common.hpp"
#include "fusionrec/tensor.hpp"

namespace fusionrec {

// Checkpoint layout, all integers little-endian:
//
//   magic      8 bytes  "FRECCKPT"
//   version    u32      kCheckpointVersion
//   echo_len   u64      followed by echo_len bytes of `key = value` lines (config echo)
//   count      u32      number of tensors
//   per tensor:
//     name_len u32, name bytes, rows u64, cols u64, rows*cols IEEE-754 doubles
//   checksum   u64      FNV-1a 64 of every preceding byte
//
// Doubles are copied bit-for-bit, so save/load is exact.

inline constexpr std::uint32_t kCheckpointVersion = 1;
inline constexpr char kCheckpointMagic[8] = {'F', 'R', 'E', 'C', 'C', 'K', 'P', 'T'};

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

struct Checkpoint {
  std::string config_echo;
  std::vector<std::pair<std::string, Matrix>> tensors;
};

namespace detail {

template <typename T>
void put(std::string& buf, T v) {
  char raw[sizeof(T)];
  std::memcpy(raw, &v, sizeof(T));
  buf.append(raw, sizeof(T));
}

class ByteReader {
 public:
  ByteReader(const std::string& buf, std::size_t limit, std::string path) : buf_(buf), limit_(limit), path_(std::move(path)) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, buf_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string bytes(std::size_t n) {
    need(n);
    std::string s = buf_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::size_t pos() const { return pos_; }

 private:
  void need(std::size_t n) {
    if (n > limit_ - pos_) fail_data("checkpoint '" + path_ + "' is truncated or corrupt");
  }
  const std::string& buf_;
  std::size_t limit_;
  std::string path_;
  std::size_t pos_ = 0;
};

}  // namespace detail

/// Writes `content` to `path` through a temporary file and rename, so readers never observe
/// a partially written file.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail_data("cannot write '" + tmp.string() + "'");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) fail_data("write failed for '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail_data("cannot open '" + path.string() + "'");
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline std::string encode_checkpoint(std::span<const ConstTensorRef> tensors, const std::string& config_echo) {
  std::string buf(kCheckpointMagic, sizeof kCheckpointMagic);
  detail::put<std::uint32_t>(buf, kCheckpointVersion);
  detail::put<std::uint64_t>(buf, config_echo.size());
  buf += config_echo;
  detail::put<std::uint32_t>(buf, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& t : tensors) {
    detail::put<std::uint32_t>(buf, static_cast<std::uint32_t>(t.name.size()));
    buf += t.name;
    detail::put<std::uint64_t>(buf, t.tensor->rows());
    detail::put<std::uint64_t>(buf, t.tensor->cols());
    buf.append(reinterpret_cast<const char*>(t.tensor->data().data()), t.tensor->size() * sizeof(double));
  }
  detail::put<std::uint64_t>(buf, fnv1a64(buf));
  return buf;
}

template <typename Params>
void save_checkpoint(const Params& params, const std::string& config_echo, const std::filesystem::path& path) {
  const auto refs = params.tensors();
  write_file_atomic(path, encode_checkpoint(refs, config_echo));
}

inline Checkpoint decode_checkpoint(const std::string& buf, const std::string& path) {
  if (buf.size() < sizeof kCheckpointMagic + sizeof(std::uint64_t) ||
      std::memcmp(buf.data(), kCheckpointMagic, sizeof kCheckpointMagic) != 0)
    fail_data("'" + path + "' is not a checkpoint file (or is truncated)");
  const std::size_t body = buf.size() - sizeof(std::uint64_t);
  std::uint64_t stored;
  std::memcpy(&stored, buf.data() + body, sizeof stored);
  detail::ByteReader r(buf, body, path);
  r.bytes(sizeof kCheckpointMagic);
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion)
    fail_data("checkpoint '" + path + "' has format version " + std::to_string(version) + ", expected " +
              std::to_string(kCheckpointVersion));
  if (fnv1a64(std::string_view(buf.data(), body)) != stored)
    fail_data("checkpoint '" + path + "' failed its integrity check (truncated or corrupt)");
  Checkpoint ck;
  ck.config_echo = r.bytes(r.get<std::uint64_t>());
  const auto count = r.get<std::uint32_t>();
  for (std::uint32_t k = 0; k < count; ++k) {
    std::string name = r.bytes(r.get<std::uint32_t>());
    const auto rows = r.get<std::uint64_t>();
    const auto cols = r.get<std::uint64_t>();
    Matrix m(rows, cols);
    const std::string raw = r.bytes(rows * cols * sizeof(double));
    std::memcpy(m.data().data(), raw.data(), raw.size());
    ck.tensors.emplace_back(std::move(name), std::move(m));
  }
  if (r.pos() != body) fail_data("checkpoint '" + path + "' has trailing bytes");
  return ck;
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(read_file(path), path.string());
}

/// Copies checkpoint tensors into `params`, which must already have the shapes the current
/// configuration implies. Names and shapes must match exactly.
template <typename Params>
void apply_checkpoint(const Checkpoint& ck, Params& params) {
  auto refs = params.tensors();
  std::map<std::string, const Matrix*> by_name;
  for (const auto& [name, m] : ck.tensors) by_name.emplace(name, &m);
  for (auto& t : refs) {
    auto it = by_name.find(t.name);
    if (it == by_name.end()) fail_data("checkpoint is missing tensor '" + t.name + "'");
    if (!it->second->same_shape(*t.tensor))
      fail_data("shape mismatch for tensor '" + t.name + "': checkpoint has " + shape_str(*it->second) +
                ", configuration expects " + shape_str(*t.tensor));
    *t.tensor = *it->second;
  }
  if (by_name.size() != refs.size()) fail_data("checkpoint holds tensors the configured model does not have");
}

}  // namespace fusionrec
