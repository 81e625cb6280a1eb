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

#include <atomic>
#include <cstdint>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "mntuple/errors.hpp"

namespace mntuple {

/// Position-addressed write target. reserve() is linearizable: concurrent
/// callers obtain disjoint regions. write_at() may be called concurrently
/// for disjoint, previously reserved regions.
class Sink {
 public:
  virtual ~Sink() = default;

  /// Advances the logical end by n_bytes and returns the region's start
  /// offset. With preallocate, hints the filesystem to allocate blocks for
  /// the region; lack of support falls back silently.
  virtual uint64_t reserve(uint64_t n_bytes, bool preallocate) = 0;

  virtual void write_at(uint64_t offset, std::span<const uint8_t> data) = 0;

  /// Logical size: end of the highest reserved region.
  virtual uint64_t end_offset() const = 0;

  /// Physical bytes handed to the sink so far (benchmark accounting).
  virtual uint64_t bytes_written() const = 0;

  virtual void flush() {}
};

/// Byte source for reading files back.
class Source {
 public:
  virtual ~Source() = default;
  virtual void read_at(uint64_t offset, std::span<uint8_t> out) const = 0;
  virtual uint64_t size() const = 0;
};

class FileSink final : public Sink {
 public:
  /// Creates or truncates the file.
  explicit FileSink(const std::string& path);
  ~FileSink() override;

  FileSink(const FileSink&) = delete;
  FileSink& operator=(const FileSink&) = delete;

  uint64_t reserve(uint64_t n_bytes, bool preallocate) override;
  void write_at(uint64_t offset, std::span<const uint8_t> data) override;
  uint64_t end_offset() const override { return end_.load(); }
  uint64_t bytes_written() const override { return written_.load(); }
  void flush() override;

  const std::string& path() const { return path_; }

 private:
  std::string path_;
  int fd_ = -1;
  std::atomic<uint64_t> end_{0};
  std::atomic<uint64_t> written_{0};
  std::atomic<bool> prealloc_unsupported_{false};
};

/// Discards data, tracks offsets and byte counts. Stands in for /dev/null
/// when measuring everything but the storage device.
class NullSink final : public Sink {
 public:
  uint64_t reserve(uint64_t n_bytes, bool preallocate) override;
  void write_at(uint64_t offset, std::span<const uint8_t> data) override;
  uint64_t end_offset() const override { return end_.load(); }
  uint64_t bytes_written() const override { return written_.load(); }

 private:
  std::atomic<uint64_t> end_{0};
  std::atomic<uint64_t> written_{0};
};

/// In-memory sink for tests.
class MemorySink final : public Sink {
 public:
  uint64_t reserve(uint64_t n_bytes, bool preallocate) override;
  void write_at(uint64_t offset, std::span<const uint8_t> data) override;
  uint64_t end_offset() const override;
  uint64_t bytes_written() const override { return written_.load(); }

  std::vector<uint8_t> take_bytes();
  std::vector<uint8_t> bytes() const;

 private:
  mutable std::mutex mu_;
  std::vector<uint8_t> buf_;
  uint64_t end_ = 0;
  std::atomic<uint64_t> written_{0};
};

class FileSource final : public Source {
 public:
  explicit FileSource(const std::string& path);
  ~FileSource() override;

  FileSource(const FileSource&) = delete;
  FileSource& operator=(const FileSource&) = delete;

  void read_at(uint64_t offset, std::span<uint8_t> out) const override;
  uint64_t size() const override { return size_; }

 private:
  int fd_ = -1;
  uint64_t size_ = 0;
};

class MemorySource final : public Source {
 public:
  explicit MemorySource(std::vector<uint8_t> bytes) : buf_(std::move(bytes)) {}

  void read_at(uint64_t offset, std::span<uint8_t> out) const override;
  uint64_t size() const override { return buf_.size(); }

 private:
  std::vector<uint8_t> buf_;
};

}  // namespace mntuple
