// Copyright 2026 The NACF Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "checkpoint.hpp"

#include <openssl/evp.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <vector>

#include "error.hpp"

namespace nacf {

namespace {

constexpr char kMagic[8] = {'N', 'A', 'C', 'F', 'C', 'K', 'P', 'T'};

template <typename T>
void Put(std::vector<uint8_t>& out, T v) {
  using U = std::make_unsigned_t<T>;
  const auto u = static_cast<U>(v);
  for (size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<uint8_t>(u >> (8 * i)));
}

class Reader {
 public:
  Reader(const std::vector<uint8_t>& buf, std::string path) : buf_(buf), path_(std::move(path)) {}

  template <typename T>
  T Get() {
    Need(sizeof(T));
    std::make_unsigned_t<T> v = 0;
    for (size_t i = 0; i < sizeof(T); ++i) v |= static_cast<std::make_unsigned_t<T>>(buf_[pos_ + i]) << (8 * i);
    pos_ += sizeof(T);
    return static_cast<T>(v);
  }
  std::string Bytes(size_t n) {
    Need(n);
    std::string s(reinterpret_cast<const char*>(buf_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  size_t pos() const { return pos_; }
  void Need(size_t n) const {
    if (pos_ + n > buf_.size()) Fail(ErrorCode::kFormat, path_ + ": truncated checkpoint");
  }

 private:
  const std::vector<uint8_t>& buf_;
  std::string path_;
  size_t pos_ = 0;
};

}  // namespace

void SaveCheckpoint(const std::filesystem::path& path, const Model& model, nlohmann::json meta) {
  meta["model"] = ModelConfigToJson(model.config);
  if (!meta.contains("stage")) meta["stage"] = "main";
  const std::string meta_str = meta.dump();

  std::vector<uint8_t> out(kMagic, kMagic + 8);
  Put<uint32_t>(out, kCheckpointVersion);
  Put<uint32_t>(out, static_cast<uint32_t>(meta_str.size()));
  out.insert(out.end(), meta_str.begin(), meta_str.end());
  Put<uint32_t>(out, static_cast<uint32_t>(model.params.size()));
  uint64_t offset = 0;
  for (size_t i = 0; i < model.params.size(); ++i) {
    const auto& name = model.params.name(i);
    const auto& v = model.params.value(i);
    Put<uint16_t>(out, static_cast<uint16_t>(name.size()));
    out.insert(out.end(), name.begin(), name.end());
    Put<uint32_t>(out, static_cast<uint32_t>(v.rows()));
    Put<uint32_t>(out, static_cast<uint32_t>(v.cols()));
    Put<uint64_t>(out, offset);
    offset += static_cast<uint64_t>(v.size()) * 4u;
  }
  for (size_t i = 0; i < model.params.size(); ++i) {
    const auto& v = model.params.value(i);
    for (Eigen::Index r = 0; r < v.rows(); ++r)
      for (Eigen::Index c = 0; c < v.cols(); ++c) Put<uint32_t>(out, std::bit_cast<uint32_t>(static_cast<float>(v(r, c))));
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) Fail(ErrorCode::kIo, "cannot open for writing: " + path.string());
  f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
  if (!f) Fail(ErrorCode::kIo, "write failed: " + path.string());
}

Checkpoint LoadCheckpoint(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) Fail(ErrorCode::kIo, "cannot open checkpoint: " + path.string());
  const std::vector<uint8_t> buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  Reader in(buf, path.string());
  if (in.Bytes(8) != std::string(kMagic, 8)) Fail(ErrorCode::kFormat, path.string() + ": not a checkpoint");
  const auto version = in.Get<uint32_t>();
  if (version != kCheckpointVersion)
    Fail(ErrorCode::kFormat, path.string() + ": unsupported checkpoint version " + std::to_string(version));
  Checkpoint ck;
  try {
    ck.meta = nlohmann::json::parse(in.Bytes(in.Get<uint32_t>()));
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorCode::kFormat, path.string() + ": bad checkpoint metadata: " + e.what());
  }
  ck.model.config = ModelConfigFromJson(ck.meta.at("model"));

  struct Entry {
    std::string name;
    uint32_t rows, cols;
    uint64_t offset;
  };
  std::vector<Entry> table(in.Get<uint32_t>());
  for (auto& e : table) {
    e.name = in.Bytes(in.Get<uint16_t>());
    e.rows = in.Get<uint32_t>();
    e.cols = in.Get<uint32_t>();
    e.offset = in.Get<uint64_t>();
  }
  const size_t payload = in.pos();
  for (const auto& e : table) {
    const uint64_t bytes = static_cast<uint64_t>(e.rows) * e.cols * 4u;
    if (payload + e.offset + bytes > buf.size()) Fail(ErrorCode::kFormat, path.string() + ": block " + e.name + " out of bounds");
    Eigen::MatrixXd v(e.rows, e.cols);
    const uint8_t* p = buf.data() + payload + e.offset;
    for (uint32_t r = 0; r < e.rows; ++r)
      for (uint32_t c = 0; c < e.cols; ++c, p += 4) {
        const uint32_t bits = static_cast<uint32_t>(p[0]) | static_cast<uint32_t>(p[1]) << 8 |
                              static_cast<uint32_t>(p[2]) << 16 | static_cast<uint32_t>(p[3]) << 24;
        v(r, c) = std::bit_cast<float>(bits);
      }
    ck.model.params.Add(e.name, std::move(v));
  }
  ck.model.ResolveIds();
  return ck;
}

void RoundToCheckpointPrecision(Model& model) {
  for (size_t i = 0; i < model.params.size(); ++i)
    model.params.value(i) = model.params.value(i).cast<float>().cast<double>();
}

std::string BlockSha256(const Eigen::MatrixXd& block) {
  std::vector<uint8_t> bytes;
  Put<uint64_t>(bytes, static_cast<uint64_t>(block.rows()));
  Put<uint64_t>(bytes, static_cast<uint64_t>(block.cols()));
  for (Eigen::Index i = 0; i < block.size(); ++i) Put<uint64_t>(bytes, std::bit_cast<uint64_t>(block.data()[i]));
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) {
    hex.push_back(kHex[digest[i] >> 4]);
    hex.push_back(kHex[digest[i] & 15]);
  }
  return hex;
}

}  // namespace nacf
