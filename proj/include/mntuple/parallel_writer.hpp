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
#include <chrono>
#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "mntuple/format.hpp"
#include "mntuple/schema.hpp"
#include "mntuple/sink.hpp"
#include "mntuple/task_pool.hpp"
#include "mntuple/writer.hpp"

namespace mntuple {

struct WriteStats {
  uint64_t entries = 0;
  uint64_t clusters = 0;
  uint64_t pages = 0;
  uint64_t bytes_uncompressed = 0;   // sum of page payloads before compression
  uint64_t bytes_on_disk = 0;        // sum of page payloads as written
  uint64_t bytes_written_total = 0;  // everything that reached the sink
  uint64_t lock_acquisitions = 0;
  double wall_seconds = 0.0;
};

/// Writes one file from any number of threads.
///
/// Threads stage entries in their own FillContexts; all cross-thread
/// synchronization on the hot path is the single commit exclusion region.
/// In buffered mode it is entered once per cluster (reserve space, assign
/// entry/element ranges, write pages unless decoupled, append the
/// descriptor); in unbuffered mode once per page plus once per cluster for
/// the descriptor. Serialization and compression always happen outside.
class ParallelWriter {
 public:
  ParallelWriter(Sink& sink, const FieldTree& tree,
                 const WriterOptions& options,
                 TaskPool* compression_pool = nullptr);
  ~ParallelWriter();

  ParallelWriter(const ParallelWriter&) = delete;
  ParallelWriter& operator=(const ParallelWriter&) = delete;

  /// New independent fill context feeding this writer. Any number of
  /// contexts may exist; creation is allowed from any thread.
  std::unique_ptr<FillContext> create_context();

  /// Commits a sealed cluster under one exclusion acquisition. The cluster's
  /// entry range is assigned here, first-come-first-serve.
  void commit_cluster(SealedCluster cluster);

  /// Unbuffered mode: reserves and writes one page under the exclusion
  /// region; the caller keeps the locator for the later descriptor commit.
  PageLocator commit_page(uint32_t column, const SealedPage& page);

  /// Unbuffered mode: appends the cluster descriptor assembled from locators
  /// returned by commit_page. One exclusion acquisition.
  void commit_cluster_metadata(uint64_t n_entries,
                               std::vector<uint64_t> column_elements,
                               std::vector<std::vector<PageLocator>> locators);

  /// Writes footer and trailer; the file is complete afterwards. Fails if a
  /// context still holds unsealed entries.
  WriteStats close();

  const FieldTree& tree() const { return tree_; }
  const WriterOptions& options() const { return options_; }
  Sink& sink() { return sink_; }
  TaskPool* compression_pool() { return compression_pool_; }

  bool closed() const { return closed_.load(); }
  uint64_t lock_acquisitions() const { return lock_count_.load(); }
  uint64_t committed_entries() const;

 private:
  friend class FillContext;

  std::unique_lock<std::mutex> enter_commit_region();
  void check_writable() const;
  void poison(const std::string& why);
  void register_dirty(bool dirty);

  Sink& sink_;
  FieldTree tree_;
  WriterOptions options_;
  TaskPool* compression_pool_ = nullptr;
  std::unique_ptr<TaskPool> owned_pool_;

  std::mutex commit_mu_;
  std::atomic<uint64_t> lock_count_{0};

  // Footer state, guarded by commit_mu_. next_entry_ is atomic only so the
  // committed count is observable without touching the commit lock.
  FileFooter footer_;
  std::atomic<uint64_t> next_entry_{0};
  std::vector<uint64_t> next_element_;
  uint64_t pages_ = 0;
  uint64_t bytes_uncompressed_ = 0;
  uint64_t bytes_on_disk_ = 0;

  std::atomic<uint64_t> dirty_contexts_{0};
  std::atomic<bool> closed_{false};
  std::atomic<bool> failed_{false};
  std::mutex fail_mu_;
  std::string fail_reason_;

  std::chrono::steady_clock::time_point start_;
};

}  // namespace mntuple
