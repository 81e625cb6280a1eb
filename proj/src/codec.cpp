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

#include <atomic>
#include <cstring>
#include <memory>
#include <string>

#include <lz4.h>
#include <zlib.h>
#include <zstd.h>

namespace mntuple {

namespace {

std::atomic<uint64_t> g_compress_calls{0};

[[noreturn]] void fail(CodecId codec, const char* what,
                       const std::string& detail = {}) {
  std::string msg = std::string(codec_name(codec)) + ": " + what;
  if (!detail.empty()) msg += " (" + detail + ")";
  throw CodecError(msg);
}

// One zstd context per thread; creating one per page costs more than the
// compression of a small page itself.
ZSTD_CCtx* zstd_cctx() {
  thread_local std::unique_ptr<ZSTD_CCtx, size_t (*)(ZSTD_CCtx*)> ctx(
      ZSTD_createCCtx(), ZSTD_freeCCtx);
  return ctx.get();
}

ZSTD_DCtx* zstd_dctx() {
  thread_local std::unique_ptr<ZSTD_DCtx, size_t (*)(ZSTD_DCtx*)> ctx(
      ZSTD_createDCtx(), ZSTD_freeDCtx);
  return ctx.get();
}

}  // namespace

const char* codec_name(CodecId id) {
  switch (id) {
    case CodecId::kNone:
      return "none";
    case CodecId::kZstd:
      return "zstd";
    case CodecId::kLz4:
      return "lz4";
    case CodecId::kDeflate:
      return "deflate";
  }
  return "?";
}

std::optional<CodecId> codec_from_name(std::string_view name) {
  if (name == "none") return CodecId::kNone;
  if (name == "zstd") return CodecId::kZstd;
  if (name == "lz4") return CodecId::kLz4;
  if (name == "deflate" || name == "zlib") return CodecId::kDeflate;
  return std::nullopt;
}

std::vector<uint8_t> compress(CodecId codec, int level,
                              std::span<const uint8_t> payload) {
  if (payload.empty()) {
    throw StateError("compress: empty payload");
  }
  g_compress_calls.fetch_add(1, std::memory_order_relaxed);
  switch (codec) {
    case CodecId::kNone:
      return std::vector<uint8_t>(payload.begin(), payload.end());
    case CodecId::kZstd: {
      std::vector<uint8_t> out(ZSTD_compressBound(payload.size()));
      // Level 0 is zstd's own default-level marker.
      const size_t n =
          ZSTD_compressCCtx(zstd_cctx(), out.data(), out.size(),
                            payload.data(), payload.size(), level);
      if (ZSTD_isError(n)) fail(codec, ZSTD_getErrorName(n));
      out.resize(n);
      return out;
    }
    case CodecId::kLz4: {
      if (payload.size() > LZ4_MAX_INPUT_SIZE) {
        fail(codec, "payload too large");
      }
      std::vector<uint8_t> out(
          LZ4_compressBound(static_cast<int>(payload.size())));
      const int n = LZ4_compress_default(
          reinterpret_cast<const char*>(payload.data()),
          reinterpret_cast<char*>(out.data()), static_cast<int>(payload.size()),
          static_cast<int>(out.size()));
      if (n <= 0) fail(codec, "compression failed");
      out.resize(static_cast<size_t>(n));
      return out;
    }
    case CodecId::kDeflate: {
      uLongf bound = compressBound(static_cast<uLong>(payload.size()));
      std::vector<uint8_t> out(bound);
      const int zlevel = level == 0 ? Z_DEFAULT_COMPRESSION : level;
      const int rc = compress2(out.data(), &bound, payload.data(),
                               static_cast<uLong>(payload.size()), zlevel);
      if (rc != Z_OK) fail(codec, "compress2", std::to_string(rc));
      out.resize(bound);
      return out;
    }
  }
  throw UnknownCodecError("unknown codec id " +
                          std::to_string(static_cast<int>(codec)));
}

std::vector<uint8_t> decompress(CodecId codec, std::span<const uint8_t> frame,
                                size_t expected_len) {
  switch (codec) {
    case CodecId::kNone: {
      if (frame.size() != expected_len) {
        fail(codec, "stored page length mismatch");
      }
      return std::vector<uint8_t>(frame.begin(), frame.end());
    }
    case CodecId::kZstd: {
      std::vector<uint8_t> out(expected_len);
      const size_t n = ZSTD_decompressDCtx(zstd_dctx(), out.data(), out.size(),
                                           frame.data(), frame.size());
      if (ZSTD_isError(n)) fail(codec, ZSTD_getErrorName(n));
      if (n != expected_len) fail(codec, "decompressed length mismatch");
      return out;
    }
    case CodecId::kLz4: {
      std::vector<uint8_t> out(expected_len);
      const int n = LZ4_decompress_safe(
          reinterpret_cast<const char*>(frame.data()),
          reinterpret_cast<char*>(out.data()), static_cast<int>(frame.size()),
          static_cast<int>(expected_len));
      if (n < 0) fail(codec, "corrupt frame");
      if (static_cast<size_t>(n) != expected_len) {
        fail(codec, "decompressed length mismatch");
      }
      return out;
    }
    case CodecId::kDeflate: {
      std::vector<uint8_t> out(expected_len);
      uLongf len = static_cast<uLongf>(expected_len);
      const int rc = uncompress(out.data(), &len, frame.data(),
                                static_cast<uLong>(frame.size()));
      if (rc != Z_OK) fail(codec, "uncompress", std::to_string(rc));
      if (len != expected_len) fail(codec, "decompressed length mismatch");
      return out;
    }
  }
  throw UnknownCodecError("unknown codec id " +
                          std::to_string(static_cast<int>(codec)));
}

uint64_t compress_call_count() {
  return g_compress_calls.load(std::memory_order_relaxed);
}

}  // namespace mntuple
