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
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "mntuple/format.hpp"
#include "mntuple/schema.hpp"
#include "mntuple/sink.hpp"
#include "mntuple/value.hpp"

namespace mntuple {

struct ReaderOptions {
  /// Field paths to read; everything else is skipped, including its pages.
  /// Empty reads the full schema.
  std::vector<std::string> projected_fields;
};

/// Decodes a finished file. Open validates header, trailer, footer checksum
/// and the footer's invariant chain before any data access.
///
/// A Reader is safe for concurrent read-only use; each sequential pass made
/// with for_each carries its own page cache.
class Reader {
 public:
  Reader(std::unique_ptr<Source> source, ReaderOptions options = {});

  static Reader open_file(const std::string& path, ReaderOptions options = {});

  uint64_t n_entries() const { return total_entries_; }
  uint64_t n_clusters() const { return footer_.clusters.size(); }

  /// Schema seen by callers: the projected tree when a projection is set.
  const FieldTree& tree() const { return projected_; }
  const FieldTree& file_tree() const { return header_.tree; }
  const FileFooter& footer() const { return footer_; }
  CodecId default_codec() const { return header_.default_codec; }

  /// Random access; decompresses whatever pages the entry needs.
  Value read_entry(uint64_t index) const;

  /// File-order scan decompressing each needed page exactly once.
  void for_each(const std::function<void(uint64_t, const Value&)>& fn) const;

  std::vector<Value> read_all() const;

  /// Raw page payload bytes as stored on disk (verification aid).
  std::vector<uint8_t> raw_page_bytes(const PageLocator& loc) const;

  /// Cluster-local decompressed elements of one projected column
  /// (verification aid).
  std::vector<uint8_t> column_elements(uint64_t cluster,
                                       uint32_t projected_column) const;

  uint64_t pages_decompressed() const { return pages_decompressed_.load(); }

 private:
  struct PageCache;

  uint64_t cluster_of(uint64_t index) const;
  Value decode_entry(uint64_t cluster, uint64_t local_index,
                     PageCache& cache) const;

  std::unique_ptr<Source> src_;
  FileHeader header_;
  FileFooter footer_;
  uint64_t total_entries_ = 0;
  FieldTree projected_;
  Projection proj_;  // projected ids -> file ids
  mutable std::atomic<uint64_t> pages_decompressed_{0};
};

}  // namespace mntuple
