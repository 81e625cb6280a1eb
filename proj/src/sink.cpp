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

#include "mntuple/sink.hpp"

#include <cerrno>
#include <cstring>

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

namespace mntuple {

namespace {

[[noreturn]] void throw_errno(const std::string& what, const std::string& path) {
  throw IoError(what + " '" + path + "': " + std::strerror(errno));
}

}  // namespace

FileSink::FileSink(const std::string& path) : path_(path) {
  fd_ = ::open(path.c_str(), O_CREAT | O_TRUNC | O_RDWR, 0644);
  if (fd_ < 0) throw_errno("cannot create", path);
}

FileSink::~FileSink() {
  if (fd_ >= 0) ::close(fd_);
}

uint64_t FileSink::reserve(uint64_t n_bytes, bool preallocate) {
  const uint64_t offset = end_.fetch_add(n_bytes);
  if (preallocate && !prealloc_unsupported_.load(std::memory_order_relaxed)) {
#if defined(__linux__)
    // fallocate over posix_fallocate: no read-modify-write emulation when
    // the filesystem lacks support.
    if (::fallocate(fd_, 0, static_cast<off_t>(offset),
                    static_cast<off_t>(n_bytes)) != 0) {
      if (errno == EOPNOTSUPP || errno == ENOSYS || errno == EINVAL) {
        prealloc_unsupported_.store(true, std::memory_order_relaxed);
      } else if (errno == ENOSPC) {
        throw_errno("cannot preallocate", path_);
      }
    }
#else
    if (int rc = ::posix_fallocate(fd_, static_cast<off_t>(offset),
                                   static_cast<off_t>(n_bytes));
        rc != 0) {
      if (rc == ENOSPC) {
        errno = rc;
        throw_errno("cannot preallocate", path_);
      }
      prealloc_unsupported_.store(true, std::memory_order_relaxed);
    }
#endif
  }
  return offset;
}

void FileSink::write_at(uint64_t offset, std::span<const uint8_t> data) {
  const uint8_t* p = data.data();
  size_t left = data.size();
  uint64_t pos = offset;
  while (left > 0) {
    const ssize_t n = ::pwrite(fd_, p, left, static_cast<off_t>(pos));
    if (n < 0) {
      if (errno == EINTR) continue;
      throw_errno("write failed on", path_);
    }
    p += n;
    pos += static_cast<uint64_t>(n);
    left -= static_cast<size_t>(n);
  }
  written_.fetch_add(data.size(), std::memory_order_relaxed);
}

void FileSink::flush() {
  if (::fsync(fd_) != 0) throw_errno("fsync failed on", path_);
}

uint64_t NullSink::reserve(uint64_t n_bytes, bool /*preallocate*/) {
  return end_.fetch_add(n_bytes);
}

void NullSink::write_at(uint64_t /*offset*/, std::span<const uint8_t> data) {
  written_.fetch_add(data.size(), std::memory_order_relaxed);
}

uint64_t MemorySink::reserve(uint64_t n_bytes, bool /*preallocate*/) {
  std::scoped_lock lock(mu_);
  const uint64_t offset = end_;
  end_ += n_bytes;
  return offset;
}

void MemorySink::write_at(uint64_t offset, std::span<const uint8_t> data) {
  std::scoped_lock lock(mu_);
  if (offset + data.size() > buf_.size()) {
    buf_.resize(offset + data.size());
  }
  std::memcpy(buf_.data() + offset, data.data(), data.size());
  written_.fetch_add(data.size(), std::memory_order_relaxed);
}

uint64_t MemorySink::end_offset() const {
  std::scoped_lock lock(mu_);
  return end_;
}

std::vector<uint8_t> MemorySink::take_bytes() {
  std::scoped_lock lock(mu_);
  return std::move(buf_);
}

std::vector<uint8_t> MemorySink::bytes() const {
  std::scoped_lock lock(mu_);
  return buf_;
}

FileSource::FileSource(const std::string& path) {
  fd_ = ::open(path.c_str(), O_RDONLY);
  if (fd_ < 0) throw_errno("cannot open", path);
  struct stat st{};
  if (::fstat(fd_, &st) != 0) {
    ::close(fd_);
    throw_errno("cannot stat", path);
  }
  size_ = static_cast<uint64_t>(st.st_size);
}

FileSource::~FileSource() {
  if (fd_ >= 0) ::close(fd_);
}

void FileSource::read_at(uint64_t offset, std::span<uint8_t> out) const {
  uint8_t* p = out.data();
  size_t left = out.size();
  uint64_t pos = offset;
  while (left > 0) {
    const ssize_t n = ::pread(fd_, p, left, static_cast<off_t>(pos));
    if (n < 0) {
      if (errno == EINTR) continue;
      throw IoError(std::string("read failed: ") + std::strerror(errno));
    }
    if (n == 0) {
      throw FormatError("read past end of file");
    }
    p += n;
    pos += static_cast<uint64_t>(n);
    left -= static_cast<size_t>(n);
  }
}

void MemorySource::read_at(uint64_t offset, std::span<uint8_t> out) const {
  if (offset + out.size() > buf_.size()) {
    throw FormatError("read past end of file");
  }
  std::memcpy(out.data(), buf_.data() + offset, out.size());
}

}  // namespace mntuple
