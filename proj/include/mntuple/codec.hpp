// Copyright 2026 The mntuple Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "mntuple/errors.hpp"

namespace mntuple {

/// Wire-stable codec ids. Unknown ids on read are an error.
enum class CodecId : uint8_t {
  kNone = 0,
  kZstd = 1,
  kLz4 = 2,
  kDeflate = 3,
};

inline constexpr uint8_t kMaxCodecId = 3;

inline bool codec_known(uint8_t id) { return id <= kMaxCodecId; }

const char* codec_name(CodecId id);
std::optional<CodecId> codec_from_name(std::string_view name);

/// Level 0 selects each backend's default. LZ4's block API has no level and
/// ignores it.
inline constexpr int kDefaultCodecLevel = 0;

/// Compresses a non-empty payload into a self-contained frame. The caller is
/// responsible for comparing sizes and keeping the stored form when the
/// frame is not smaller.
std::vector<uint8_t> compress(CodecId codec, int level,
                              std::span<const uint8_t> payload);

/// Recovers exactly `expected_len` bytes from a frame produced by the same
/// codec. Throws CodecError on corrupt frames or a length mismatch.
std::vector<uint8_t> decompress(CodecId codec, std::span<const uint8_t> frame,
                                size_t expected_len);

/// Process-wide count of compress() calls; lets tests pin down where
/// compression happens relative to synchronization.
uint64_t compress_call_count();

}  // namespace mntuple
