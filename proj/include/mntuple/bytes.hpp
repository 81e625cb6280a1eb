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

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <vector>

#include "mntuple/errors.hpp"

namespace mntuple {

// Little-endian primitive encoding. All on-disk integers and elements go
// through these helpers so the byte layout is identical on every platform.

inline void store_le16(uint8_t* dst, uint16_t v) {
  dst[0] = static_cast<uint8_t>(v);
  dst[1] = static_cast<uint8_t>(v >> 8);
}

inline void store_le32(uint8_t* dst, uint32_t v) {
  dst[0] = static_cast<uint8_t>(v);
  dst[1] = static_cast<uint8_t>(v >> 8);
  dst[2] = static_cast<uint8_t>(v >> 16);
  dst[3] = static_cast<uint8_t>(v >> 24);
}

inline void store_le64(uint8_t* dst, uint64_t v) {
  store_le32(dst, static_cast<uint32_t>(v));
  store_le32(dst + 4, static_cast<uint32_t>(v >> 32));
}

inline uint16_t load_le16(const uint8_t* src) {
  return static_cast<uint16_t>(src[0] | (src[1] << 8));
}

inline uint32_t load_le32(const uint8_t* src) {
  return static_cast<uint32_t>(src[0]) | (static_cast<uint32_t>(src[1]) << 8) |
         (static_cast<uint32_t>(src[2]) << 16) |
         (static_cast<uint32_t>(src[3]) << 24);
}

inline uint64_t load_le64(const uint8_t* src) {
  return static_cast<uint64_t>(load_le32(src)) |
         (static_cast<uint64_t>(load_le32(src + 4)) << 32);
}

template <typename T>
inline void append_le(std::vector<uint8_t>& out, T v) {
  static_assert(std::is_trivially_copyable_v<T>);
  uint8_t tmp[sizeof(T)];
  if constexpr (sizeof(T) == 1) {
    tmp[0] = static_cast<uint8_t>(v);
  } else if constexpr (sizeof(T) == 2) {
    store_le16(tmp, std::bit_cast<uint16_t>(v));
  } else if constexpr (sizeof(T) == 4) {
    store_le32(tmp, std::bit_cast<uint32_t>(v));
  } else {
    static_assert(sizeof(T) == 8);
    store_le64(tmp, std::bit_cast<uint64_t>(v));
  }
  out.insert(out.end(), tmp, tmp + sizeof(T));
}

template <typename T>
inline T load_le(const uint8_t* src) {
  static_assert(std::is_trivially_copyable_v<T>);
  if constexpr (sizeof(T) == 1) {
    return std::bit_cast<T>(*src);
  } else if constexpr (sizeof(T) == 2) {
    return std::bit_cast<T>(load_le16(src));
  } else if constexpr (sizeof(T) == 4) {
    return std::bit_cast<T>(load_le32(src));
  } else {
    static_assert(sizeof(T) == 8);
    return std::bit_cast<T>(load_le64(src));
  }
}

/// Growing little-endian byte buffer used for metadata serialization.
class ByteWriter {
 public:
  void u8(uint8_t v) { buf_.push_back(v); }
  void u16(uint16_t v) { append_le(buf_, v); }
  void u32(uint32_t v) { append_le(buf_, v); }
  void u64(uint64_t v) { append_le(buf_, v); }
  void bytes(const void* data, size_t n) {
    const auto* p = static_cast<const uint8_t*>(data);
    buf_.insert(buf_.end(), p, p + n);
  }

  size_t size() const { return buf_.size(); }
  const std::vector<uint8_t>& data() const { return buf_; }
  std::vector<uint8_t> take() { return std::move(buf_); }

 private:
  std::vector<uint8_t> buf_;
};

/// Bounds-checked cursor over serialized metadata. Throws FormatError on
/// any attempt to read past the end, so corrupt inputs cannot crash.
class ByteReader {
 public:
  explicit ByteReader(std::span<const uint8_t> data) : data_(data) {}

  uint8_t u8() { return *next(1); }
  uint16_t u16() { return load_le16(next(2)); }
  uint32_t u32() { return load_le32(next(4)); }
  uint64_t u64() { return load_le64(next(8)); }
  void bytes(void* out, size_t n) { std::memcpy(out, next(n), n); }
  std::string str(size_t n) {
    const uint8_t* p = next(n);
    return std::string(reinterpret_cast<const char*>(p), n);
  }

  size_t remaining() const { return data_.size() - pos_; }
  size_t position() const { return pos_; }
  bool done() const { return pos_ == data_.size(); }

 private:
  const uint8_t* next(size_t n) {
    if (n > remaining()) {
      throw FormatError("metadata truncated: needed " + std::to_string(n) +
                        " bytes, " + std::to_string(remaining()) + " left");
    }
    const uint8_t* p = data_.data() + pos_;
    pos_ += n;
    return p;
  }

  std::span<const uint8_t> data_;
  size_t pos_ = 0;
};

/// CRC-32C (Castagnoli). Used to protect the file footer.
uint32_t crc32c(std::span<const uint8_t> data, uint32_t seed = 0);

}  // namespace mntuple
