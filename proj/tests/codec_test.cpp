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

#include "mntuple/codec.hpp"

#include <doctest.h>

#include <random>

using namespace mntuple;

namespace {

constexpr CodecId kAll[] = {CodecId::kNone, CodecId::kZstd, CodecId::kLz4,
                            CodecId::kDeflate};

std::vector<uint8_t> random_bytes(std::mt19937_64& rng, size_t n) {
  std::vector<uint8_t> out(n);
  for (auto& b : out) b = static_cast<uint8_t>(rng());
  return out;
}

}  // namespace

TEST_CASE("round-trip identity on arbitrary payloads") {
  std::mt19937_64 rng(42);
  for (CodecId codec : kAll) {
    for (size_t size : {1, 2, 7, 100, 4096, 70000}) {
      const auto payload = random_bytes(rng, size);
      const auto frame = compress(codec, kDefaultCodecLevel, payload);
      CHECK(decompress(codec, frame, payload.size()) == payload);
    }
    // Highly repetitive payloads exercise the match-finder paths.
    std::vector<uint8_t> repetitive(50000);
    for (size_t i = 0; i < repetitive.size(); ++i) {
      repetitive[i] = static_cast<uint8_t>(i % 17);
    }
    const auto frame = compress(codec, kDefaultCodecLevel, repetitive);
    CHECK(decompress(codec, frame, repetitive.size()) == repetitive);
  }
}

TEST_CASE("constant pages compress by far more than 64x") {
  const std::vector<uint8_t> page(64 * 1024, 0x5A);
  const auto frame = compress(CodecId::kZstd, kDefaultCodecLevel, page);
  CHECK(frame.size() < 1024);
}

TEST_CASE("random pages do not shrink") {
  std::mt19937_64 rng(7);
  const auto page = random_bytes(rng, 64 * 1024);
  const auto frame = compress(CodecId::kZstd, kDefaultCodecLevel, page);
  CHECK(frame.size() >= page.size());  // the writer falls back to stored
}

TEST_CASE("none codec is the identity") {
  std::mt19937_64 rng(3);
  const auto payload = random_bytes(rng, 333);
  CHECK(compress(CodecId::kNone, 0, payload) == payload);
  CHECK(decompress(CodecId::kNone, payload, payload.size()) == payload);
}

TEST_CASE("compression is deterministic at a fixed level") {
  std::mt19937_64 rng(11);
  const auto payload = random_bytes(rng, 10000);
  for (CodecId codec : kAll) {
    CHECK(compress(codec, kDefaultCodecLevel, payload) ==
          compress(codec, kDefaultCodecLevel, payload));
  }
}

TEST_CASE("corrupt frames and wrong lengths are errors, not crashes") {
  std::mt19937_64 rng(5);
  const auto payload = random_bytes(rng, 5000);
  for (CodecId codec : {CodecId::kZstd, CodecId::kLz4, CodecId::kDeflate}) {
    auto frame = compress(codec, kDefaultCodecLevel, payload);

    auto truncated = frame;
    truncated.resize(frame.size() / 2);
    CHECK_THROWS_AS((void)decompress(codec, truncated, payload.size()),
                    CodecError);

    CHECK_THROWS_AS((void)decompress(codec, frame, payload.size() + 1),
                    CodecError);
    CHECK_THROWS_AS((void)decompress(codec, frame, payload.size() - 1),
                    CodecError);

    auto mangled = frame;
    for (size_t i = 0; i < mangled.size(); i += 3) mangled[i] ^= 0xFF;
    CHECK_THROWS_AS((void)decompress(codec, mangled, payload.size()),
                    CodecError);
  }
}

TEST_CASE("empty payloads are rejected") {
  CHECK_THROWS_AS((void)compress(CodecId::kZstd, 0, {}), StateError);
}

TEST_CASE("codec names round-trip") {
  for (CodecId codec : kAll) {
    CHECK(codec_from_name(codec_name(codec)) == codec);
  }
  CHECK(!codec_from_name("lzma").has_value());
}
