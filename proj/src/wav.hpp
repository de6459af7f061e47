// Copyright 2026 The NACF Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <filesystem>

#include "dsp.hpp"

namespace nacf {

// Two-channel IEEE float (format tag 3) RIFF/WAVE, 44-byte header,
// interleaved little-endian samples.
void WriteWav(const std::filesystem::path& path, const Rir& rir);
Rir ReadWav(const std::filesystem::path& path);

}  // namespace nacf
