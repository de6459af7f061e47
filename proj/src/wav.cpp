// Copyright 2026 The NACF Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "wav.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "error.hpp"

namespace nacf {
namespace {

void PutU32(std::vector<uint8_t>& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}
void PutU16(std::vector<uint8_t>& out, uint16_t v) {
  out.push_back(static_cast<uint8_t>(v));
  out.push_back(static_cast<uint8_t>(v >> 8));
}
void PutTag(std::vector<uint8_t>& out, const char* tag) { out.insert(out.end(), tag, tag + 4); }

uint32_t GetU32(const uint8_t* p) {
  return static_cast<uint32_t>(p[0]) | static_cast<uint32_t>(p[1]) << 8 |
         static_cast<uint32_t>(p[2]) << 16 | static_cast<uint32_t>(p[3]) << 24;
}
uint16_t GetU16(const uint8_t* p) { return static_cast<uint16_t>(p[0] | p[1] << 8); }

}  // namespace

void WriteWav(const std::filesystem::path& path, const Rir& rir) {
  rir.Validate();
  const uint32_t frames = static_cast<uint32_t>(rir.length());
  const uint32_t data_bytes = frames * 2u * 4u;
  std::vector<uint8_t> buf;
  buf.reserve(44 + data_bytes);
  PutTag(buf, "RIFF");
  PutU32(buf, 36 + data_bytes);
  PutTag(buf, "WAVE");
  PutTag(buf, "fmt ");
  PutU32(buf, 16);
  PutU16(buf, 3);  // IEEE float
  PutU16(buf, 2);
  PutU32(buf, static_cast<uint32_t>(rir.sample_rate));
  PutU32(buf, static_cast<uint32_t>(rir.sample_rate) * 8u);
  PutU16(buf, 8);
  PutU16(buf, 32);
  PutTag(buf, "data");
  PutU32(buf, data_bytes);
  for (uint32_t t = 0; t < frames; ++t) {
    for (int c = 0; c < 2; ++c) PutU32(buf, std::bit_cast<uint32_t>(static_cast<float>(rir.samples(t, c))));
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) Fail(ErrorCode::kIo, "cannot open for writing: " + path.string());
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!out) Fail(ErrorCode::kIo, "write failed: " + path.string());
}

Rir ReadWav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorCode::kIo, "cannot open for reading: " + path.string());
  std::vector<uint8_t> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  auto bad = [&](const std::string& why) { Fail(ErrorCode::kFormat, path.string() + ": " + why); };
  if (buf.size() < 12 || std::memcmp(buf.data(), "RIFF", 4) != 0 || std::memcmp(buf.data() + 8, "WAVE", 4) != 0)
    bad("not a RIFF/WAVE file");

  uint16_t format = 0, channels = 0, bits = 0;
  uint32_t rate = 0;
  const uint8_t* data = nullptr;
  uint32_t data_bytes = 0;
  size_t pos = 12;
  while (pos + 8 <= buf.size()) {
    const uint32_t size = GetU32(buf.data() + pos + 4);
    const uint8_t* body = buf.data() + pos + 8;
    if (pos + 8 + size > buf.size()) bad("truncated chunk");
    if (std::memcmp(buf.data() + pos, "fmt ", 4) == 0) {
      if (size < 16) bad("short fmt chunk");
      format = GetU16(body);
      channels = GetU16(body + 2);
      rate = GetU32(body + 4);
      bits = GetU16(body + 14);
    } else if (std::memcmp(buf.data() + pos, "data", 4) == 0) {
      data = body;
      data_bytes = size;
    }
    pos += 8 + size + (size & 1u);
  }
  if (format != 3 || channels != 2 || bits != 32) bad("expected 2-channel 32-bit float audio");
  if (data == nullptr) bad("missing data chunk");
  const uint32_t frames = data_bytes / 8u;
  Rir rir;
  rir.sample_rate = static_cast<int>(rate);
  rir.samples.resize(frames, 2);
  for (uint32_t t = 0; t < frames; ++t)
    for (int c = 0; c < 2; ++c)
      rir.samples(t, c) = std::bit_cast<float>(GetU32(data + 8u * t + 4u * static_cast<uint32_t>(c)));
  return rir;
}

}  // namespace nacf
