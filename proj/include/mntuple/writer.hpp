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
#include <functional>
#include <future>
#include <memory>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "mntuple/codec.hpp"
#include "mntuple/format.hpp"
#include "mntuple/schema.hpp"
#include "mntuple/sink.hpp"
#include "mntuple/value.hpp"

namespace mntuple {

class ParallelWriter;
class TaskPool;

enum class CommitMode : uint8_t {
  kBuffered = 0,    // unit of writing: cluster; pages buffered until commit
  kUnbuffered = 1,  // unit of writing: page; one commit per page
};

struct WriterOptions {
  uint32_t target_page_bytes = 64 * 1024;  // uncompressed
  uint64_t target_cluster_bytes = 50ull * 1024 * 1024;  // uncompressed
  /// Extra cluster flush trigger for tests and tools; 0 disables it.
  uint64_t max_entries_per_cluster = 0;
  CodecId codec = CodecId::kZstd;
  int codec_level = kDefaultCodecLevel;
  bool preallocate = false;
  /// Buffered mode only: leave the commit critical section before writing
  /// page bytes; offsets are assigned inside, data lands outside.
  bool decoupled_write = false;
  CommitMode mode = CommitMode::kBuffered;
  /// Buffered mode only: compress sealed pages on this many extra threads
  /// instead of inline on the filling thread. 0 = inline.
  uint32_t compression_threads = 0;

  void validate(const FieldTree& tree) const;
};

/// A compressed (or stored) page detached from its fill context.
struct SealedPage {
  uint32_t column = 0;
  uint32_t n_elements = 0;
  uint32_t uncompressed_bytes = 0;
  uint8_t codec_id = 0;  // 0 when stored raw
  std::vector<uint8_t> bytes;
};

/// A relocatable unit of writing: all pages of one cluster plus the counts
/// needed to build its descriptor. Nothing in here depends on where in the
/// file the cluster will land.
struct SealedCluster {
  uint64_t n_entries = 0;
  uint64_t uncompressed_bytes = 0;
  uint64_t on_disk_bytes = 0;
  std::vector<uint64_t> column_elements;       // per column
  std::vector<std::vector<SealedPage>> pages;  // per column, in fill order
};

/// Per-thread staging area accumulating one open cluster.
///
/// A context belongs to at most one thread at a time but may migrate
/// between threads between calls. Standalone contexts stage and seal;
/// contexts created by a ParallelWriter also commit (and do so
/// automatically when the open cluster reaches its size target).
class FillContext {
 public:
  FillContext(const FieldTree& tree, const WriterOptions& options);
  ~FillContext();

  FillContext(FillContext&&) = default;
  FillContext& operator=(FillContext&&) = delete;

  /// Shreds one entry into the open pages. Full pages are sealed
  /// immediately: compressed, and in unbuffered mode committed, without any
  /// cross-thread exclusion.
  void fill(const Value& entry);

  bool empty() const { return entries_in_cluster_ == 0; }
  uint64_t entries_in_cluster() const { return entries_in_cluster_; }
  uint64_t uncompressed_bytes_in_cluster() const {
    return uncompressed_bytes_in_cluster_;
  }
  uint64_t entries_filled() const { return entries_filled_; }

  /// Detaches the open cluster as a relocatable unit and resets the context.
  /// Buffered contexts only. Throws StateError on an empty cluster.
  SealedCluster seal_cluster();

  /// Seals and commits the open cluster through the owning writer
  /// (descriptor-only in unbuffered mode). No-op when empty.
  void commit_cluster();

  /// Drops any staged data; the context counts as clean at writer close.
  void discard();

  const FieldTree& tree() const { return *tree_; }

 private:
  friend class ParallelWriter;
  FillContext(ParallelWriter* writer);

  struct OpenPage {
    std::vector<uint8_t> bytes;
    uint32_t n_elements = 0;
  };

  // A sealed page, possibly still being compressed on the pool.
  struct StagedPage {
    std::optional<std::future<SealedPage>> pending;
    SealedPage ready;
    SealedPage get() && {
      return pending ? pending->get() : std::move(ready);
    }
  };

  struct Emitter;

  void append_element(uint32_t column, const uint8_t* data, uint32_t width);
  void seal_page(uint32_t column);
  SealedPage make_sealed(uint32_t column, std::vector<uint8_t> raw,
                         uint32_t n_elements) const;
  void reset_cluster();
  void set_dirty(bool dirty);

  const FieldTree* tree_;
  WriterOptions options_;
  ParallelWriter* writer_ = nullptr;  // bound contexts only

  std::vector<uint32_t> elements_per_page_;         // per column
  std::vector<OpenPage> open_;                      // per column
  std::vector<std::vector<StagedPage>> staged_;     // buffered mode
  std::vector<std::vector<PageLocator>> locators_;  // unbuffered mode
  std::vector<uint64_t> cluster_elements_;          // per column
  std::vector<uint64_t> collection_counts_;         // offset bases, per column
  uint64_t entries_in_cluster_ = 0;
  uint64_t uncompressed_bytes_in_cluster_ = 0;
  uint64_t entries_filled_ = 0;
  bool dirty_registered_ = false;
  bool broken_ = false;  // a failed fill left a torn entry behind
};

/// Pull-based entry stream for the sequential writer.
using EntryStream = std::function<std::optional<Value>()>;

struct WriteStats;

/// Single-threaded write of a whole file: header, clusters flushed at the
/// configured size target, footer and trailer. Entry order is preserved.
WriteStats sequential_write(Sink& sink, const FieldTree& tree,
                            const WriterOptions& options, EntryStream stream,
                            TaskPool* compression_pool = nullptr);

WriteStats sequential_write(Sink& sink, const FieldTree& tree,
                            const WriterOptions& options,
                            std::span<const Value> entries,
                            TaskPool* compression_pool = nullptr);

}  // namespace mntuple
